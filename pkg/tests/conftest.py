import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from qblpiv.dataset import Dataset  # noqa: E402
from qblpiv.design import SpecConfig, build_design  # noqa: E402
from qblpiv.simulate import DgpParams, generate_dgp  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def random_dataset(n, n_treat=1, n_controls=0, seed=0, strength=1.0):
    """Endogenous treatments with one strong instrument each."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n_treat))
    u = rng.standard_normal(n)
    r = strength * z + 0.5 * u[:, None] + rng.standard_normal((n, n_treat))
    controls = rng.standard_normal((n, n_controls)) if n_controls else None
    y = np.zeros(n)
    shock = r.sum(axis=1) + u + rng.standard_normal(n)
    for t in range(n):
        y[t] = (0.5 * y[t - 1] if t else 0.0) + shock[t]
    return Dataset.from_arrays(y, r, z, controls=controls)


@pytest.fixture
def small_design():
    ds = random_dataset(160, n_treat=1, seed=3)
    return build_design(ds, SpecConfig(horizon=3, lags=2))


@pytest.fixture
def dgp_design():
    ds, _ = generate_dgp(DgpParams(T=300), np.random.default_rng(11))
    return build_design(ds, SpecConfig(horizon=7, lags=4))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
