"""Non-Hermitian eigenmodes of the cavity + spin-bin generator.

The generator is ``L = [[kappa, -g], [g, diag(gamma + i(omega_k - omega_c))]]``
so that ``d(A, B)/dt = -L (A, B)`` without drive.  An eigenvalue's real part
is the mode's decay rate and its imaginary part the frequency relative to
the cavity.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .dynamics import SystemParams
from .errors import NumericalError, ParameterError, RegimeError
from .spectral import CombConfig, DiscreteEnsemble, build_spectral_function, discretize_ensemble
from .units import mhz

PEAK_BIN_WIDTH = mhz(0.2)
MEDIAN_FACTOR = 10.0
RELATIVE_PROMINENCE = 0.06
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class GeneratorMatrix:
    matrix: np.ndarray
    kappa: float
    gamma: float
    omega_c: float
    couplings: np.ndarray
    detunings: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def spin_diagonal(self) -> np.ndarray:
        return self.gamma + 1j * self.detunings


def build_generator_matrix(ens: DiscreteEnsemble, params: SystemParams) -> GeneratorMatrix:
    p = params.resolve(ens.spectral.omega_c)
    g = np.asarray(ens.couplings, dtype=float)
    det = np.asarray(ens.omegas, dtype=float) - p.omega_c
    n = len(g) + 1
    L = np.zeros((n, n), dtype=complex)
    L[0, 0] = p.kappa
    L[0, 1:] = -g
    L[1:, 0] = g
    idx = np.arange(1, n)
    L[idx, idx] = p.gamma + 1j * det
    return GeneratorMatrix(L, p.kappa, p.gamma, p.omega_c, g, det)


@dataclass(frozen=True)
class ModeSet:
    """Eigenpairs sorted by Im(lambda).

    ``vectors`` (unit-norm columns) is ``None`` when only eigenvalues were
    requested; cavity contents are then obtained from the closed form
    ``|A|^2 = 1 / (1 + sum_k g_k^2 / |d_k - lambda|^2)``.
    """

    eigenvalues: np.ndarray
    cavity_content: np.ndarray
    omega_c: float
    kappa: float
    gamma: float
    vectors: np.ndarray | None = None

    @property
    def frequencies(self) -> np.ndarray:
        """Absolute mode frequencies omega_c + Im(lambda)."""
        return self.omega_c + self.eigenvalues.imag

    @property
    def decay_rates(self) -> np.ndarray:
        return self.eigenvalues.real


def _closed_form_content(gm: GeneratorMatrix, lam):
    d = gm.spin_diagonal
    g2 = gm.couplings**2
    out = np.empty(len(lam))
    # chunked to bound memory at O(N * chunk)
    for s in range(0, len(lam), 256):
        blk = lam[s:s + 256]
        gap = np.abs(d[:, None] - blk[None, :]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            # an uncoupled bin contributes nothing, even at its own eigenvalue
            terms = np.where(g2[:, None] == 0.0, 0.0, g2[:, None] / gap)
        # but a mode sitting exactly on one is that bare spin
        bare = np.any((gap == 0.0) & (g2[:, None] == 0.0), axis=0)
        out[s:s + 256] = np.where(bare, 0.0, 1.0 / (1.0 + np.sum(terms, axis=0)))
    return out


def solve_modes(gm: GeneratorMatrix, vectors=True) -> ModeSet:
    L = gm.matrix
    if not np.all(np.isfinite(L)):
        raise ParameterError("generator matrix has non-finite entries")
    try:
        if vectors:
            lam, V = np.linalg.eig(L)
        else:
            lam, V = np.linalg.eigvals(L), None
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(lam.imag, kind="stable")
    lam = lam[order]
    if V is not None:
        V = V[:, order]
        V = V / np.linalg.norm(V, axis=0)
        res = np.linalg.norm(L @ V - V * lam[None, :], axis=0)
        bound = RESIDUAL_TOL * np.linalg.norm(L, 2)
        bad = np.flatnonzero(res > bound)
        if len(bad):
            raise NumericalError(f"eigenpair {bad[0]} has residual {res[bad[0]]:.3e} > {bound:.3e}")
        content = np.abs(V[0]) ** 2
    else:
        content = _closed_form_content(gm, lam)
    return ModeSet(lam, content, gm.omega_c, gm.kappa, gm.gamma, V)


def resonant_modes(cfg: CombConfig, params: SystemParams, n_spins=1200, vectors=False, holes=None) -> ModeSet:
    """Modes of the comb as configured (optionally with holes burnt)."""
    from .spectral import apply_holes

    F = build_spectral_function(cfg)
    if holes:
        F = apply_holes(F, holes)
    return solve_modes(build_generator_matrix(discretize_ensemble(F, n_spins), params), vectors=vectors)


# ----------------------------------------------------------------- peaks


@dataclass(frozen=True)
class ContentProfile:
    """Max cavity content per frequency bin (empty bins interpolated)."""

    centers: np.ndarray
    values: np.ndarray
    occupied: np.ndarray


def cavity_content_profile(modes: ModeSet, bin_width=PEAK_BIN_WIDTH) -> ContentProfile:
    x = modes.eigenvalues.imag
    lo = x.min()
    nb = int(np.floor((x.max() - lo) / bin_width)) + 1
    idx = np.minimum(((x - lo) / bin_width).astype(int), nb - 1)
    vals = np.full(nb, -1.0)
    np.maximum.at(vals, idx, modes.cavity_content)
    occupied = vals >= 0.0
    centers = lo + (np.arange(nb) + 0.5) * bin_width
    vals = np.interp(centers, centers[occupied], vals[occupied])
    return ContentProfile(centers, vals, occupied)


@dataclass(frozen=True)
class PolaritonPeak:
    frequency: float  # absolute, rad/us
    offset: float  # Im(lambda), rad/us
    cavity_content: float
    prominence: float
    mode_index: int


def dominant_peaks(modes: ModeSet, bin_width=PEAK_BIN_WIDTH, median_factor=MEDIAN_FACTOR, relative_prominence=RELATIVE_PROMINENCE) -> list[PolaritonPeak]:
    """All dominant cavity-content peaks, ascending in frequency.

    A binned local maximum counts when its prominence is at least
    ``median_factor`` times the median bin value and at least
    ``relative_prominence`` times the largest prominence found.  Its
    location is the eigenvalue with the largest content within one bin.
    """
    prof = cavity_content_profile(modes, bin_width)
    idx, props = find_peaks(prof.values, prominence=0.0)
    if len(idx) == 0:
        return []
    prom = props["prominences"]
    thresh = max(median_factor * np.median(prof.values), relative_prominence * prom.max())
    keep = prom >= thresh
    x = modes.eigenvalues.imag
    out = []
    for i, pr in zip(idx[keep], prom[keep]):
        c = prof.centers[i]
        near = np.flatnonzero(np.abs(x - c) <= 1.5 * bin_width)
        j = near[np.argmax(modes.cavity_content[near])]
        out.append(PolaritonPeak(modes.omega_c + x[j], x[j], float(modes.cavity_content[j]), float(pr), int(j)))
    return out


def count_dominant_peaks(modes: ModeSet, **kw) -> int:
    return len(dominant_peaks(modes, **kw))


def find_polariton_peaks(modes: ModeSet, k: int, **kw) -> np.ndarray:
    """Absolute frequencies of the k highest dominant peaks, ascending."""
    if k < 1:
        raise ParameterError("peak count k must be positive")
    peaks = dominant_peaks(modes, **kw)
    if len(peaks) < k:
        raise RegimeError(f"found {len(peaks)} dominant cavity-content peaks, need {k}; coupling too weak for {k}-mode operation")
    top = sorted(peaks, key=lambda p: p.cavity_content, reverse=True)[:k]
    return np.sort([p.frequency for p in top])


# ----------------------------------------------------------------- sweep


@dataclass(frozen=True)
class DetuningMap:
    """Modes versus comb centre; rows follow ``omega_s``."""

    omega_s: np.ndarray
    omega_c: float
    eigenvalues: np.ndarray  # (n_points, N+1)
    cavity_content: np.ndarray


def sweep_detuning(cfg: CombConfig, params: SystemParams, omega_s_grid, n_spins=1200, threads=1) -> DetuningMap:
    """Translate the comb (shape fixed, cavity fixed) and solve at each centre."""
    grid = np.asarray(omega_s_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0.0):
        raise ParameterError("omega_s grid must be non-empty and strictly increasing")
    cfg.validate()

    def one(ws):
        c = dataclasses.replace(cfg, omega_s=float(ws))
        ms = resonant_modes(c, params, n_spins, vectors=False)
        return ms.eigenvalues, ms.cavity_content

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(w) for w in grid]
    lam = np.stack([r[0] for r in results])
    content = np.stack([r[1] for r in results])
    return DetuningMap(grid, cfg.omega_c, lam, content)
