"""Batch command-line interface.

Settings come from a flat ``key = value`` file (``--config``), or from a
``manifest.json`` written by an earlier run, with command-line flags taking
precedence. ``--set key=value`` overrides any single setting.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import traceback
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .dataset import Schema, load_csv
from .design import SpecConfig, build_design
from .diagnostics import first_stage, lead_placebo, placebo_predetermined
from .estimation import fit_quasi_bayes
from .instruments import PowerCurveParams, build_potentials, read_capacity_csv, read_weather_csv
from .prior import PriorConfig
from .sampler import FLAT, ROUGHNESS, McmcConfig, write_chain_csv
from .simulate import DgpParams, McGrid, run_monte_carlo
from .synthetic import SYNTHETIC_SCHEMA, SyntheticParams, bundled_dataset_path, make_synthetic

COMMANDS = ("estimate", "simulate", "instruments", "diagnose", "make-synthetic")
CSV_OPTS = dict(index=False, lineterminator="\n")

# Every recognised setting with its default and parser. None means "unset".
DEFAULTS = {
    "data": None,
    "date": None,
    "outcome": None,
    "treatments": None,
    "instruments": None,
    "controls": None,
    "indicators": None,
    "standardize": True,
    "spec": "ld",
    "horizon": 7,
    "lags": 7,
    "fourier": 4,
    "day_of_week": True,
    "prior": ROUGHNESS,
    "rho": 4.0,
    "kappa": 1.0,
    "draws": None,
    "burn": 5000,
    "thin": 1,
    "seed": 0,
    "chain": 0,
    "cov": "plain",
    "bandwidth": None,
    "level": 0.90,
    "n_sim": 100_000,
    "workers": 1,
    "out_dir": "out",
    "save_chain": False,
    # simulate
    "T_values": "200,500,1000",
    "replications": 200,
    "estimators": "gmm,qb_flat,qb_rp",
    "phi": 0.7,
    "beta": 1.0,
    "pi_z": 1.0,
    "kappa_u": 0.5,
    # instruments
    "weather": None,
    "capacity": None,
    "cut_in": 3.0,
    "rated": 13.0,
    "cut_out": 25.0,
    # diagnose
    "placebo_lags": "1,2,3,4,5,6,7",
    "placebo_variables": None,
    "leads": "1,2,3,4,5,6,7,8",
    "lead_outcome_lags": False,
    # make-synthetic
    "n_days": 1461,
    "start": "2015-01-01",
}
# Total Gibbs iterations (burn-in included) when ``draws`` is unset: 50,000
# retained after 5,000 burn-in for applications, 25,000 per Monte Carlo fit.
APPLICATION_DRAWS = 55_000
SIMULATION_DRAWS = 25_000

_INT = {"horizon", "lags", "fourier", "draws", "burn", "thin", "seed", "chain", "bandwidth",
        "n_sim", "workers", "replications", "n_days"}
_FLOAT = {"rho", "kappa", "level", "phi", "beta", "pi_z", "kappa_u", "cut_in", "rated", "cut_out"}
_BOOL = {"standardize", "day_of_week", "save_chain", "lead_outcome_lags"}
_PATHS = {"data", "weather", "capacity"}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def coerce(key: str, value):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown setting {key!r}")
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    try:
        if key in _INT:
            return int(value)
        if key in _FLOAT:
            return float(value)
        if key in _BOOL:
            return value if isinstance(value, bool) else _parse_bool(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return str(value).strip()


def read_config(path) -> dict:
    """Flat ``key = value`` lines (``#`` comments), or a run manifest in JSON."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return {k: coerce(k, v) for k, v in data.get("settings", data).items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


def _list(text, cast=str) -> tuple:
    if text is None:
        return ()
    return tuple(cast(s.strip()) for s in str(text).split(",") if s.strip())


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config(args.config))
    for key in ("seed", "out_dir", "workers", "level", "prior", "cov", "spec"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = coerce(key, value)
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        settings[key.strip()] = coerce(key.strip(), value)
    if settings["draws"] is None:
        settings["draws"] = SIMULATION_DRAWS if args.command == "simulate" else APPLICATION_DRAWS
    if settings["prior"] == "rp":
        settings["prior"] = ROUGHNESS
    _validate(settings)
    for key in _PATHS:
        if settings[key] is not None:
            settings[key] = str(Path(settings[key]).resolve())
    return settings


def _validate(s: dict) -> None:
    if s["prior"] not in (FLAT, ROUGHNESS):
        raise ConfigError(f"prior must be 'flat' or 'rp', got {s['prior']!r}")
    if s["cov"] not in ("plain", "block", "har"):
        raise ConfigError(f"cov must be plain, block or har, got {s['cov']!r}")
    if s["spec"] not in ("level", "ld"):
        raise ConfigError(f"spec must be level or ld, got {s['spec']!r}")
    if not 0 < s["level"] < 1:
        raise ConfigError("level must be in (0, 1)")
    if s["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    if s["rho"] <= 0 or s["kappa"] <= 0:
        raise ConfigError("rho and kappa must be positive")
    for key in _PATHS:
        if s[key] is not None and not Path(s[key]).exists():
            raise ConfigError(f"{key} file not found: {s[key]}")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_dataset(s: dict):
    if s["data"] is None:
        path, schema = bundled_dataset_path(), SYNTHETIC_SCHEMA
        fields = {"date": schema.date, "outcome": schema.outcome,
                  "treatments": schema.treatments, "instruments": schema.instruments,
                  "controls": schema.controls, "indicators": schema.indicators}
        for key, value in fields.items():
            if s[key] is not None:
                fields[key] = s[key] if key in ("date", "outcome") else _list(s[key])
        schema = Schema(**fields)
    else:
        path = s["data"]
        missing = [k for k in ("date", "outcome", "treatments", "instruments") if s[k] is None]
        if missing:
            raise ConfigError(f"data given without {', '.join(missing)}")
        schema = Schema(date=s["date"], outcome=s["outcome"], treatments=_list(s["treatments"]),
                        instruments=_list(s["instruments"]), controls=_list(s["controls"]),
                        indicators=_list(s["indicators"]))
    with Path(str(path)).open("rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return load_csv(path, schema, standardize_series=s["standardize"]), {"data": digest}


def _spec(s: dict) -> SpecConfig:
    return SpecConfig(kind=s["spec"], horizon=s["horizon"], lags=s["lags"],
                      n_fourier=s["fourier"], day_of_week=s["day_of_week"])


def _mcmc(s: dict) -> McmcConfig:
    return McmcConfig(n_draws=s["draws"], n_burn=s["burn"], thin=s["thin"],
                      seed=s["seed"], chain_id=s["chain"], prior=s["prior"],
                      prior_config=PriorConfig(s["rho"], s["kappa"]))


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, **CSV_OPTS)
    return path


def _theta_frame(estimate) -> pd.DataFrame:
    design = estimate.design
    rows = []
    sd = np.sqrt(np.clip(np.diag(estimate.V), 0.0, None))
    for h_idx, h in enumerate(design.horizons):
        for j, name in enumerate(design.columns):
            k = design.coord(h_idx, j)
            rows.append((int(h), name, estimate.theta[k], sd[k], estimate.model.theta_star[k]))
    return pd.DataFrame(rows, columns=["horizon", "regressor", "estimate", "se", "theta_star"])


def cmd_estimate(s: dict, out: Path) -> tuple[list, dict]:
    dataset, digests = _load_dataset(s)
    design = build_design(dataset, _spec(s))
    est = fit_quasi_bayes(design, _mcmc(s), s["cov"], s["level"], s["n_sim"], s["workers"])
    files = [_write_csv(est.irf.to_frame(), out / "irf.csv"),
             _write_csv(_theta_frame(est), out / "theta.csv")]
    if s["save_chain"]:
        files += write_chain_csv(est.chain, out)
    return files, digests


def cmd_simulate(s: dict, out: Path) -> tuple[list, dict]:
    params = DgpParams(phi=s["phi"], beta=s["beta"], pi_z=s["pi_z"], kappa_u=s["kappa_u"],
                       H=s["horizon"])
    grid = McGrid(T_values=_list(s["T_values"], int), estimators=_list(s["estimators"]),
                  replications=s["replications"], params=params, seed=s["seed"],
                  horizon=s["horizon"], lags=s["lags"], kind=s["spec"], cov_mode=s["cov"],
                  n_draws=s["draws"], n_burn=s["burn"], rho=s["rho"],
                  kappa=s["kappa"], level=s["level"], n_sim=s["n_sim"])
    report = run_monte_carlo(grid, workers=s["workers"])
    report.write(out)
    for (name, T), msgs in sorted(report.failures.items()):
        print(f"warning: {name} failed in {len(msgs)} replication(s) at T={T}", file=sys.stderr)
    return [out / "mc_pointwise.csv", out / "mc_simultaneous.csv"], {}


def cmd_instruments(s: dict, out: Path) -> tuple[list, dict]:
    if s["weather"] is None or s["capacity"] is None:
        raise ConfigError("instruments needs both 'weather' and 'capacity' files")
    try:
        capacity = read_capacity_csv(s["capacity"])
    except pd.errors.EmptyDataError:
        raise ConfigError(f"capacity file is empty: {s['capacity']}") from None
    params = PowerCurveParams(s["cut_in"], s["rated"], s["cut_out"])
    potentials = build_potentials(read_weather_csv(s["weather"]), capacity, params)
    digests = {k: _sha256(s[k]) for k in ("weather", "capacity")}
    return [_write_csv(potentials, out / "potentials.csv")], digests


def cmd_diagnose(s: dict, out: Path) -> tuple[list, dict]:
    dataset, digests = _load_dataset(s)
    config = _spec(s)
    report = first_stage(dataset, config)
    variables = _list(s["placebo_variables"]) or None
    placebo = placebo_predetermined(dataset, _list(s["placebo_lags"], int), config, variables)
    leads = lead_placebo(dataset, config, _list(s["leads"], int), _mcmc(s), s["cov"],
                         s["level"], s["n_sim"], s["workers"], s["lead_outcome_lags"])
    return [_write_csv(report.to_frame(), out / "first_stage.csv"),
            _write_csv(placebo, out / "placebo.csv"),
            _write_csv(leads.to_frame(), out / "lead_placebo.csv")], digests


def cmd_make_synthetic(s: dict, out: Path) -> tuple[list, dict]:
    params = SyntheticParams(n_days=s["n_days"], start=s["start"])
    frame = make_synthetic(params, seed=s["seed"])
    path = out / "synthetic_electricity.csv"
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return [path], {}


HANDLERS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "instruments": cmd_instruments,
    "diagnose": cmd_diagnose,
    "make-synthetic": cmd_make_synthetic,
}


def _check_outputs(files) -> None:
    for path in files:
        path = Path(path)
        if not path.exists() or path.stat().st_size == 0:
            raise OSError(f"output not written: {path}")
        frame = pd.read_csv(path)
        if frame.empty:
            raise OSError(f"output has no rows: {path}")


def write_manifest(command: str, s: dict, files, digests, out: Path) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "settings": s,
        "inputs_sha256": digests,
        "outputs": sorted(Path(f).name for f in files),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _provenance(exc: BaseException) -> str:
    """Name of the innermost package module in the traceback."""
    name = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        p = Path(frame.filename)
        if p.parent == Path(__file__).parent:
            name = p.stem
    return name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qblpiv",
                                     description="Quasi-Bayesian LP-IV impulse responses.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value settings file or a previous manifest.json")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--workers", type=int)
        p.add_argument("--level", type=float)
        p.add_argument("--prior", choices=[FLAT, "rp", ROUGHNESS])
        p.add_argument("--cov", choices=["plain", "block", "har"])
        p.add_argument("--spec", choices=["level", "ld"])
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any setting; may be repeated")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args)
        out = Path(settings["out_dir"])
        out.mkdir(parents=True, exist_ok=True)
        files, digests = HANDLERS[args.command](settings, out)
        _check_outputs(files)
        write_manifest(args.command, settings, files, digests, out)
    except ConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any failure with its origin
        print(f"error [{_provenance(exc)}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
