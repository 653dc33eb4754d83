"""Quasi-Bayesian local-projection IV estimation of impulse responses."""

__version__ = "0.1.0"

from .dataset import Dataset, Schema, load_csv
from .design import LD, LEVEL, LpDesign, SpecConfig, build_design
from .estimation import Estimate, fit_gmm, fit_quasi_bayes
from .gmm import build_moment_model
from .inference import IrfResult, extract_irf, sup_t_band
from .prior import PriorConfig, smoothing_precision
from .sampler import FLAT, ROUGHNESS, McmcConfig, run_gibbs

__all__ = [
    "Dataset", "Schema", "load_csv", "LD", "LEVEL", "LpDesign", "SpecConfig", "build_design",
    "Estimate", "fit_gmm", "fit_quasi_bayes", "build_moment_model", "IrfResult", "extract_irf",
    "sup_t_band", "PriorConfig", "smoothing_precision", "FLAT", "ROUGHNESS", "McmcConfig",
    "run_gibbs",
]
