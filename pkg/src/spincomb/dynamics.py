"""Cavity amplitude A(t) in the frame rotating at the drive carrier.

Two independent routes:

* :func:`integrate_ode` steps the discretized cavity/spin equations
  ``dA/dt = -kappa A + sum_l g_l B_l - eta``,
  ``dB_l/dt = -[gamma + i(omega_l - omega_c)] B_l - g_l A`` with fixed-step RK4.
* :func:`solve_volterra` works with the continuous density F through the
  memory kernel ``K`` and never sees the spin bins.

Times are in us and frequencies in rad/us throughout.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal
from scipy.signal import find_peaks

from . import kernels
from .errors import (
    AccuracyError,
    ContractError,
    ParameterError,
    StepSizeError,
    UnsupportedInputError,
)
from .spectral import DiscreteEnsemble, SpectralFunction

log = logging.getLogger(__name__)

MAX_PHASE_STEP = 0.1


@dataclass(frozen=True)
class SystemParams:
    """Loss rates (HWHM, rad/us) and frequencies.

    ``omega_c`` defaults to the cavity frequency carried by the spectral
    function; ``omega_p`` (drive carrier, also the rotating-frame frequency)
    defaults to ``omega_c``.
    """

    kappa: float
    gamma: float
    omega_c: float | None = None
    omega_p: float | None = None

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ParameterError(f"cavity loss kappa must be positive, got {self.kappa}")
        if not self.gamma >= 0.0:
            raise ParameterError(f"spin loss gamma must be non-negative, got {self.gamma}")

    def resolve(self, omega_c: float) -> "SystemParams":
        """Fill in the cavity frequency taken from the spectral function."""
        if self.omega_c is not None and not np.isclose(self.omega_c, omega_c, rtol=1e-12, atol=1e-9):
            raise ParameterError(f"omega_c={self.omega_c} disagrees with the spectral function ({omega_c})")
        wp = omega_c if self.omega_p is None else self.omega_p
        return dataclasses.replace(self, omega_c=omega_c, omega_p=wp)

    @property
    def cavity_rate(self) -> complex:
        """kappa + i(omega_c - omega_p): cavity decay in the drive frame."""
        return complex(self.kappa, self.omega_c - self.omega_p)


@dataclass(frozen=True)
class Pulse:
    start: float
    duration: float
    amplitude: complex


@dataclass(frozen=True)
class DriveSignal:
    """Sum of rectangular pulses; ``pulses=()`` is the zero signal."""

    pulses: tuple[Pulse, ...] = ()

    @property
    def is_zero(self) -> bool:
        return all(p.amplitude == 0 for p in self.pulses)

    @property
    def end(self) -> float:
        return max((p.start + p.duration for p in self.pulses), default=0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for p in self.pulses:
            out += np.where((t >= p.start) & (t < p.start + p.duration), p.amplitude, 0.0)
        return out

    def __add__(self, other: "DriveSignal") -> "DriveSignal":
        return DriveSignal(self.pulses + other.pulses)

    def scaled(self, factor) -> "DriveSignal":
        return DriveSignal(tuple(dataclasses.replace(p, amplitude=p.amplitude * factor) for p in self.pulses))

    def interval_average(self, t0, t1):
        """Mean of eta over [t0, t1) (vectorized over arrays of intervals)."""
        t0 = np.asarray(t0, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        out = np.zeros(np.broadcast(t0, t1).shape, dtype=complex)
        for p in self.pulses:
            overlap = np.clip(np.minimum(t1, p.start + p.duration) - np.maximum(t0, p.start), 0.0, None)
            out += p.amplitude * overlap
        return out / (t1 - t0)


def rectangular_drive(t0, duration, amplitude=1.0) -> DriveSignal:
    """eta(t) = amplitude on [t0, t0 + duration), zero elsewhere."""
    if not duration > 0.0:
        raise ParameterError(f"pulse duration must be positive, got {duration}")
    if not np.isfinite(t0):
        raise ParameterError("pulse start must be finite")
    return DriveSignal((Pulse(float(t0), float(duration), complex(amplitude)),))


ZERO_DRIVE = DriveSignal()


def time_grid(t_end, step) -> np.ndarray:
    """Uniform grid 0, step, ..., covering [0, t_end]."""
    if not step > 0.0 or not t_end > 0.0:
        raise ParameterError("time grid needs positive step and end time")
    n = int(np.ceil(t_end / step - 1e-9))
    return np.arange(n + 1) * step


def _grid_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ParameterError("time grid needs at least two points")
    h = (grid[-1] - grid[0]) / (len(grid) - 1)
    if grid[0] != 0.0 or not np.allclose(np.diff(grid), h, rtol=1e-9, atol=1e-15):
        raise ParameterError("time grid must be uniform and start at t=0")
    return float(h)


@dataclass(frozen=True)
class Trajectory:
    """Cavity amplitude on a uniform time grid (us)."""

    t: np.ndarray
    A: np.ndarray
    provenance: str
    drive: DriveSignal = ZERO_DRIVE
    A0: complex = 0j
    spins_initially_empty: bool = True
    B: np.ndarray | None = None
    spin_population: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.A) ** 2

    @property
    def is_single_photon(self) -> bool:
        return self.A0 == 1 and self.drive.is_zero and self.spins_initially_empty


# --------------------------------------------------------------------- ODE


def integrate_ode(ens: DiscreteEnsemble, params: SystemParams, drive: DriveSignal = ZERO_DRIVE, init=(1.0, None), grid=None, substeps=1, store_spins=False, lossless=False, scheme="lawson") -> Trajectory:
    """Fixed-step 4th-order integration of the discretized equations.

    ``scheme='lawson'`` (default) propagates each bin's decay and rotation
    exactly and applies RK4 to the coupling only (integrating factor);
    ``'rk4'`` is the classical scheme on the full right-hand side.  The
    drive is averaged over each step, exact when pulse edges fall on step
    boundaries.  ``substeps`` subdivides each output interval and
    ``lossless=True`` zeroes kappa and gamma (conservation checks).
    """
    if grid is None:
        raise ParameterError("a time grid is required")
    if scheme not in ("lawson", "rk4"):
        raise ParameterError(f"unknown ODE scheme {scheme!r}")
    if int(substeps) != substeps or substeps < 1:
        raise ParameterError(f"substeps must be a positive integer, got {substeps}")
    substeps = int(substeps)
    h = _grid_step(grid) / substeps
    p = params.resolve(ens.spectral.omega_c)
    det = ens.omegas - p.omega_p
    phase = h * np.max(np.abs(det))
    if phase >= MAX_PHASE_STEP:
        raise StepSizeError(
            f"step {h:.3e} us does not resolve the largest detuning {np.max(np.abs(det)):.4g} rad/us "
            f"(h*max|detuning| = {phase:.3f}, must be < {MAX_PHASE_STEP}); reduce the step or raise substeps"
        )
    A0, B0 = init
    n_spin = ens.size
    B = np.zeros(n_spin, dtype=complex) if B0 is None else np.array(B0, dtype=complex)
    if B.shape != (n_spin,):
        raise ParameterError(f"initial spin vector must have length {n_spin}")
    empty = not np.any(B)
    g = np.ascontiguousarray(ens.couplings, dtype=float)
    kappa, gamma = (0.0, 0.0) if lossless else (p.kappa, p.gamma)
    d = np.ascontiguousarray(gamma + 1j * det)
    kc = complex(kappa, p.omega_c - p.omega_p)
    nt = len(grid) - 1
    starts = (np.arange(nt)[:, None] * substeps + np.arange(substeps)[None, :]) * h
    eta = np.ascontiguousarray(drive.interval_average(starts, starts + h), dtype=complex)
    A_out = np.empty(nt + 1, dtype=complex)
    pop = np.empty(nt + 1)
    A_out[0] = A0
    pop[0] = np.vdot(B, B).real
    if scheme == "lawson":
        eB1 = np.exp(-0.5 * h * d)
        eB2 = eB1 * eB1
        eA1 = np.exp(-0.5 * h * kc)

        def advance(A, B, drv, a_out, p_out):
            return kernels.lawson_arrowhead(A, B, g, eB1, eB2, eA1, eA1 * eA1, h, drv, a_out, p_out)
    else:
        def advance(A, B, drv, a_out, p_out):
            return kernels.rk4_arrowhead(A, B, g, d, kc, h, drv, a_out, p_out)

    Bhist = None
    if store_spins:
        Bhist = np.empty((nt + 1, n_spin), dtype=complex)
        Bhist[0] = B
        A = complex(A0)
        for n in range(nt):
            A = advance(A, B, eta[n:n + 1], A_out[n + 1:n + 2], pop[n + 1:n + 2])
            Bhist[n + 1] = B
    else:
        advance(complex(A0), B, eta, A_out[1:], pop[1:])
    if not np.all(np.isfinite(A_out)):
        raise StepSizeError("ODE integration produced non-finite values")
    return Trajectory(np.asarray(grid, dtype=float), A_out, "ode", drive, complex(A0), empty, Bhist, pop,
                      {"substeps": substeps, "n_spins": n_spin, "scheme": scheme, "backend": kernels.BACKEND})


# --------------------------------------------------------------- Volterra


def _bracket(z, T):
    """(exp(-i z T) - 1) / (i z), finite at z = 0."""
    x = -1j * z * T
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    series = -T * (1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0)
    return np.where(small, series, -T * np.expm1(x) / safe)


def _kernel_fft(F: SpectralFunction, p: SystemParams, coupling, h, nt, resolution=None):
    """K on lags 0, h, ..., nt*h from one zero-padded FFT.

    Kernel increments K_{n+1} e^{kc h} - K_n are exact frequency integrals
    of F(w) e^{-i(w - w_p) t_n} (e^{-i z h} - 1)/(i z); the w integral is a
    uniform Riemann sum, spectrally accurate because F is smooth on the
    grid scale (step <= hole sigma / 3) and the grid period 2 pi / dw is at
    least four times the longest lag.
    """
    lo, hi = F.window
    wp = p.omega_p
    kc = p.cavity_rate
    t_max = max(nt, 1) * h
    dw = 2.0 * np.pi / (4.0 * t_max)
    if F.holes:
        dw = min(dw, min(hole.sigma for hole in F.holes) / 3.0)
    dw = min(dw, min(c.width for c in F.components) / 8.0)
    if resolution is not None:
        dw = min(dw, resolution)
    size = 1 << int(np.ceil(np.log2(2.0 * np.pi / (dw * h))))
    dw = 2.0 * np.pi / (size * h)
    jlo = int(np.floor((lo - wp) / dw)) - 1
    jhi = int(np.ceil((hi - wp) / dw)) + 1
    if jhi - jlo + 1 > size:
        raise AccuracyError("kernel frequency grid does not fit the FFT length", achieved=None)
    det = np.arange(jlo, jhi + 1) * dw
    z = det - 1j * (p.gamma - kc)
    vals = F(wp + det) * _bracket(z, h) * dw
    buf = np.zeros(size, dtype=complex)
    buf[: len(vals)] = vals
    n = np.arange(nt + 1)
    spec = np.fft.fft(buf)[: nt + 1] * np.exp(-2j * np.pi * ((jlo * n) % size) / size)
    incr = np.exp(-p.gamma * n * h) * spec
    decay = np.exp(-kc * h)
    K = np.zeros(nt + 1, dtype=complex)
    # K_{n+1} = decay * (K_n + Omega^2 incr_n)
    K[1:] = signal.lfilter([decay], [1.0, -decay], coupling**2 * incr[:-1])
    return K


def _kernel_quad(F: SpectralFunction, p: SystemParams, coupling, lag, tol=1e-10):
    if lag == 0.0:
        return 0j
    kc = p.cavity_rate
    pts = F.breakpoints()
    lo, hi = F.window

    def part(fn):
        val, err = integrate.quad(fn, lo, hi, points=pts, limit=4000, epsabs=tol, epsrel=1e-12)
        if err > 100 * max(tol, 1e-12 * abs(val)):
            raise AccuracyError(f"kernel quadrature at lag {lag} did not converge (error estimate {err:.2e})", achieved=err)
        return val

    def integrand(w):
        z = (w - p.omega_p) - 1j * (p.gamma - kc)
        return F(w) * _bracket(z, lag)

    val = part(lambda w: integrand(w).real) + 1j * part(lambda w: integrand(w).imag)
    return coupling**2 * val * np.exp(-kc * lag)


def volterra_kernel(F: SpectralFunction, params: SystemParams, lags, coupling=None, method="auto", resolution=None) -> np.ndarray:
    """Memory kernel K on the given lags (K(0) = 0).

    ``method='fft'`` needs lags 0, h, 2h, ...; ``'quad'`` uses adaptive
    quadrature per lag (slow, any lags); ``'auto'`` picks fft when possible.
    """
    p = params.resolve(F.omega_c)
    coupling = F.coupling if coupling is None else coupling
    lags = np.asarray(lags, dtype=float)
    if np.any(lags < 0.0):
        raise ParameterError("kernel lags must be non-negative")
    uniform = False
    if lags.ndim == 1 and len(lags) >= 2:
        try:
            h = _grid_step(lags)
            uniform = True
        except ParameterError:
            uniform = False
    if method == "fft" and not uniform:
        raise ParameterError("fft kernel evaluation needs lags 0, h, 2h, ...")
    if method == "quad" or (method == "auto" and not uniform):
        return np.array([_kernel_quad(F, p, coupling, float(x)) for x in lags.ravel()]).reshape(lags.shape)
    return _kernel_fft(F, p, coupling, h, len(lags) - 1, resolution)


def _cumulative_integral(y, h):
    """S_n = int_0^{t_n} y, 4th order (cubic through four neighbouring points)."""
    n = len(y)
    S = np.zeros(n, dtype=y.dtype)
    if n < 4:
        S[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
        return S
    inc = np.empty(n - 1, dtype=y.dtype)
    inc[1:-1] = h / 24.0 * (-y[:-3] + 13.0 * y[1:-2] + 13.0 * y[2:-1] - y[3:])
    inc[0] = h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
    inc[-1] = h / 24.0 * (9.0 * y[-1] + 19.0 * y[-2] - 5.0 * y[-3] + y[-4])
    S[1:] = np.cumsum(inc)
    return S


def _shifted(S, G, h, shift):
    """S(t - shift) on the grid, zero for t <= shift; cubic Hermite between
    nodes (S' = G is known exactly at the nodes)."""
    out = np.zeros_like(S)
    x = np.arange(len(S)) - shift / h
    mask = x > 0.0
    xi = x[mask]
    i = np.minimum(np.floor(xi).astype(int), len(S) - 2)
    u = xi - i
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    out[mask] = h00 * S[i] + h10 * h * G[i] + h01 * S[i + 1] + h11 * h * G[i + 1]
    return out


def _pulse_forcing(drive: DriveSignal, kc, t):
    """D(t) = -int_0^t eta(s) e^{-kc (t - s)} ds for rectangular pulses."""
    D = np.zeros(len(t), dtype=complex)
    for p in drive.pulses:
        lo = np.clip(t, None, p.start)
        hi = np.clip(t, None, p.start + p.duration)
        D -= p.amplitude * (np.exp(-kc * (t - hi)) - np.exp(-kc * (t - lo))) / kc
    return D


def solve_volterra(F: SpectralFunction, params: SystemParams, drive: DriveSignal = ZERO_DRIVE, A0=0.0, grid=None, coupling=None, B0=None, method="resolvent", kernel=None) -> Trajectory:
    """Solve A(t) = A0 e^{-kc t} + int_0^t K(t - s) A(s) ds + D(t).

    ``method='resolvent'`` (default) solves once for the smooth response G
    to A(0) = 1 and assembles the drive response by exact superposition,
    ``A = A0 G - int G(t - s) eta(s) ds``; pulse edges then cost no accuracy.
    ``method='direct'`` marches the equation with the drive integral D in
    the forcing; it loses order at pulse edges and serves as a check.
    """
    if B0 is not None and np.any(np.asarray(B0) != 0):
        raise UnsupportedInputError("the Volterra route assumes all spins start unexcited; use integrate_ode for B(0) != 0")
    if grid is None:
        raise ParameterError("a time grid is required")
    grid = np.asarray(grid, dtype=float)
    h = _grid_step(grid)
    p = params.resolve(F.omega_c)
    kc = p.cavity_rate
    K = volterra_kernel(F, p, grid, coupling, method="fft") if kernel is None else np.asarray(kernel)
    if K[0] != 0:
        raise ParameterError("memory kernel must vanish at zero lag")
    decay = np.exp(-kc * grid)
    if method == "direct":
        f = complex(A0) * decay + _pulse_forcing(drive, kc, grid)
        A = kernels.volterra_gregory(K, np.ascontiguousarray(f), h, np.empty(len(grid), dtype=complex))
        G = None
    elif method == "resolvent":
        G = kernels.volterra_gregory(K, np.ascontiguousarray(decay), h, np.empty(len(grid), dtype=complex))
        A = complex(A0) * G
        if not drive.is_zero:
            S = _cumulative_integral(G, h)
            for pulse in drive.pulses:
                A = A - pulse.amplitude * (_shifted(S, G, h, pulse.start) - _shifted(S, G, h, pulse.start + pulse.duration))
    else:
        raise ParameterError(f"unknown Volterra method {method!r}")
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise AccuracyError("Volterra solution is not finite")
    return Trajectory(grid, A, "volterra", drive, complex(A0), True, meta={"method": method, "backend": kernels.BACKEND})


def single_photon_occupation(traj: Trajectory) -> np.ndarray:
    """N(t) = |A(t)|**2, meaningful only for A(0)=1, no drive, empty spins."""
    if not traj.is_single_photon:
        raise ContractError("N(t) = |A|^2 needs a single-photon trajectory (A(0)=1, no drive, spins unexcited)")
    return traj.intensity


# ----------------------------------------------------------------- metrics


@dataclass(frozen=True)
class PulseMetrics:
    times: np.ndarray
    heights: np.ndarray
    above_barrier: np.ndarray
    normalization: float
    kappa: float

    @property
    def count_above(self) -> int:
        return int(np.count_nonzero(self.above_barrier))

    def count_above_within(self, t_end) -> int:
        return int(np.count_nonzero(self.above_barrier & (self.times <= t_end)))

    def envelope(self, t):
        """Log-linear interpolation of pulse heights (normalized units)."""
        if len(self.times) == 0:
            return np.zeros(np.shape(t))
        return np.exp(np.interp(t, self.times, np.log(self.heights)))

    def envelope_ratio(self, t):
        """Envelope over the e^{-kappa t} barrier."""
        return self.envelope(t) / np.exp(-self.kappa * np.asarray(t))

    def mean_spacing(self, count=20, after=0.0) -> float:
        times = self.times[self.times > after][:count]
        if len(times) < 2:
            return float("nan")
        return float((times[-1] - times[0]) / (len(times) - 1))


def pulse_metrics(traj: Trajectory, kappa, spacing, after=None, normalize=True) -> PulseMetrics:
    """Revival pulses of |A|^2 and their standing against e^{-kappa t}.

    A pulse is a local maximum of |A|^2 that is also the largest value within
    half the nominal revival ``spacing`` on either side.  Heights are divided
    by max |A|^2 when ``normalize`` (the absolute drive scale is arbitrary).
    Pulses before ``after`` (default: end of the drive) are dropped.
    """
    if traj.A is None or len(traj.A) < 3:
        raise ParameterError("trajectory is empty")
    P = traj.intensity
    norm = float(P.max()) if normalize else 1.0
    if norm == 0.0:
        raise ParameterError("trajectory is identically zero")
    P = P / norm
    half = max(1, int(round(0.5 * spacing / traj.step)))
    idx, _ = find_peaks(P, distance=half)
    keep = []
    for i in idx:
        lo, hi = max(0, i - half), min(len(P), i + half + 1)
        if P[i] >= P[lo:hi].max():
            keep.append(i)
    idx = np.array(keep, dtype=int)
    t_start = traj.drive.end if after is None else after
    idx = idx[traj.t[idx] > t_start]
    times = traj.t[idx]
    heights = P[idx]
    above = heights > np.exp(-kappa * times)
    return PulseMetrics(times, heights, above, norm, float(kappa))
