import numpy as np
import pytest

from spincomb import _pykernels, kernels
from spincomb.dynamics import SystemParams
from spincomb.modes import build_generator_matrix, solve_modes
from spincomb.spectral import CombConfig, build_spectral_function, discretize_ensemble
from spincomb.units import mhz

try:
    from spincomb import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

BACKENDS = ["python"] + (["cython"] if _ckernels is not None else [])
KERNEL_NAMES = ("rk4_arrowhead", "lawson_arrowhead", "volterra_gregory")

KAPPA = mhz(0.4)
GAMMA = mhz(0.01)


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    mod = _ckernels if request.param == "cython" else _pykernels
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture(scope="session")
def params():
    return SystemParams(KAPPA, GAMMA)


@pytest.fixture(scope="session")
def comb8():
    return build_spectral_function(CombConfig(coupling=mhz(8.0)))


@pytest.fixture(scope="session")
def comb26():
    return build_spectral_function(CombConfig(coupling=mhz(26.0)))


def _modes(F, params):
    return solve_modes(build_generator_matrix(discretize_ensemble(F, 1200), params), vectors=True)


@pytest.fixture(scope="session")
def modes8(comb8, params):
    return _modes(comb8, params)


@pytest.fixture(scope="session")
def modes26(comb26, params):
    return _modes(comb26, params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
