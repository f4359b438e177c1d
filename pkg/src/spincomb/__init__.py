"""Cavity mode coupled to a comb of inhomogeneously broadened spin ensembles."""

from .dynamics import (
    DriveSignal,
    SystemParams,
    Trajectory,
    integrate_ode,
    pulse_metrics,
    rectangular_drive,
    single_photon_occupation,
    solve_volterra,
    time_grid,
    volterra_kernel,
)
from .errors import (
    AccuracyError,
    ConfigError,
    ContractError,
    DegenerateInputError,
    NumericalError,
    ParameterError,
    RegimeError,
    SpinCombError,
    StepSizeError,
    UnsupportedInputError,
    ValidationError,
)
from .laplace import (
    LaplaceSpectrum,
    amplitude_from_laplace,
    find_resonances,
    kernel_U,
    lamb_shift,
    laplace_spectrum,
)
from .modes import (
    DetuningMap,
    GeneratorMatrix,
    ModeSet,
    build_generator_matrix,
    dominant_peaks,
    find_polariton_peaks,
    resonant_modes,
    solve_modes,
    sweep_detuning,
)
from .scenario import BUILTIN, Scenario, load_scenario
from .spectral import (
    CombConfig,
    DiscreteEnsemble,
    Hole,
    HoleSpec,
    QGaussian,
    SpectralFunction,
    apply_holes,
    build_spectral_function,
    discretize_ensemble,
    q_gaussian_density,
)
from .units import ghz, mhz, ns, to_ghz, to_mhz, to_ns

__version__ = "0.1.0"


def run_scenario(*args, **kwargs):
    from .runner import run_scenario as _run

    return _run(*args, **kwargs)


def sensitivity_study(*args, **kwargs):
    from .runner import sensitivity_study as _study

    return _study(*args, **kwargs)
