"""Frequency-domain route: Lamb shift, branch-cut kernel U and resonances.

``delta(w) = PV int F(x) / (w - x) dx`` is the Lamb shift.  With
``c(w) = w - omega_c - Omega^2 delta(w)`` the branch-cut density is

    U(w) = F(w) / ((c + i(kappa - gamma))^2 + (pi Omega^2 F)^2)

and ``A(t) = Omega^2 e^{-gamma t} int U(w) e^{-i(w - omega_c) t} dw`` for a
single photon with no drive.  This complex form is exact.  For plots,
peak finding and resonance classification :func:`kernel_U` gives the real,
non-negative variant ``F / (c^2 + (kappa - gamma + pi Omega^2 F)^2)``; both
coincide when kappa = gamma.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import integrate, interpolate, optimize
from scipy.signal import find_peaks

from .dynamics import SystemParams, Trajectory, _grid_step
from .errors import AccuracyError, ParameterError, UnsupportedInputError
from .spectral import SpectralFunction
from .units import mhz

log = logging.getLogger(__name__)

CLASSIFY_RADIUS = mhz(1.0)
DEFAULT_RESOLUTION = 0.05  # rad/us


def lamb_shift(F: SpectralFunction, omega, epsrel=1e-10):
    """Principal value of int F(x)/(omega - x) dx over the truncation window.

    Inside the window the singularity is subtracted analytically; outside,
    the integrand is regular and integrated directly.
    """
    scalar = np.ndim(omega) == 0
    ws = np.atleast_1d(np.asarray(omega, dtype=float))
    lo, hi = F.window
    out = np.empty(len(ws))
    for i, w in enumerate(ws):
        if not np.isfinite(w):
            raise ParameterError("Lamb shift needs a finite frequency")
        pts = F.breakpoints()
        if lo < w < hi:
            fw = F(w)

            def f(x, w=w, fw=fw):
                d = w - x
                return 0.0 if d == 0.0 else (F(x) - fw) / d

            edges = [lo] + sorted(set(pts + [w])) + [hi]
            total = fw * np.log((w - lo) / (hi - w))
        else:
            def f(x, w=w):
                return F(x) / (w - x)

            edges = [lo] + pts + [hi]
            total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                val, err = integrate.quad(f, a, b, epsabs=1e-14, epsrel=epsrel, limit=400)
                total += val
        out[i] = total
    return float(out[0]) if scalar else out


def lamb_shift_grid(F: SpectralFunction, resolution=DEFAULT_RESOLUTION):
    """Lamb shift on a uniform grid spanning the window (fast).

    Uses the odd-offset rule ``delta_k = 2 sum_{m odd} F_{k-m} / m``, which is
    spectrally accurate for smooth F, evaluated as one FFT convolution.
    Returns ``(omega, F(omega), delta)``.
    """
    lo, hi = F.window
    n = int(np.ceil((hi - lo) / resolution)) + 1
    w = np.linspace(lo, hi, n)
    Fv = F(w)
    m = np.arange(-(n - 1), n)
    c = np.zeros(len(m))
    odd = m % 2 != 0
    c[odd] = 2.0 / m[odd]
    size = sfft.next_fast_len(3 * n - 2, real=True)
    full = sfft.irfft(sfft.rfft(Fv, size) * sfft.rfft(c, size), size)
    return w, Fv, full[n - 1:2 * n - 1]


def kernel_U(F: SpectralFunction, coupling, kappa, gamma, omega, delta=None):
    """Real branch-cut kernel (non-negative); ``delta`` may be precomputed."""
    omega = np.asarray(omega, dtype=float)
    d = lamb_shift(F, omega) if delta is None else np.asarray(delta)
    Fv = F(omega)
    o2 = coupling**2
    c = omega - F.omega_c - o2 * d
    return Fv / (c * c + (kappa - gamma + np.pi * o2 * Fv) ** 2)


def branch_cut_density(F: SpectralFunction, coupling, kappa, gamma, omega, delta=None):
    """Exact complex branch-cut density used for the time-domain amplitude."""
    omega = np.asarray(omega, dtype=float)
    d = lamb_shift(F, omega) if delta is None else np.asarray(delta)
    Fv = F(omega)
    o2 = coupling**2
    c = omega - F.omega_c - o2 * d
    return Fv / ((c + 1j * (kappa - gamma)) ** 2 + (np.pi * o2 * Fv) ** 2)


@dataclass(frozen=True)
class Resonance:
    frequency: float  # absolute, rad/us
    resonant: bool
    u_peak: float | None  # absolute frequency of the nearby U maximum


@dataclass(frozen=True)
class LaplaceSpectrum:
    omega: np.ndarray
    F: np.ndarray
    delta: np.ndarray
    U: np.ndarray
    omega_c: float
    coupling: float
    kappa: float
    gamma: float
    resonances: tuple[Resonance, ...] = ()

    @property
    def resonant(self) -> list[Resonance]:
        return [r for r in self.resonances if r.resonant]

    def resonance_flags(self) -> np.ndarray:
        """Per-sample flag: 1 at the grid point nearest a resonant root,
        -1 nearest a non-resonant root, 0 elsewhere."""
        flags = np.zeros(len(self.omega), dtype=int)
        for r in self.resonances:
            flags[np.argmin(np.abs(self.omega - r.frequency))] = 1 if r.resonant else -1
        return flags


def u_maxima(spec: LaplaceSpectrum, rel_prominence=1e-3) -> np.ndarray:
    """Absolute frequencies of the local maxima of U."""
    idx, _ = find_peaks(spec.U, prominence=rel_prominence * spec.U.max())
    return spec.omega[idx]


def dominant_u_peaks(spec: LaplaceSpectrum, relative_prominence=0.06) -> np.ndarray:
    """U maxima whose prominence is a sizeable fraction of the largest one."""
    idx, props = find_peaks(spec.U, prominence=0.0)
    if len(idx) == 0:
        return np.array([])
    prom = props["prominences"]
    return spec.omega[idx[prom >= relative_prominence * prom.max()]]


def find_resonances(F: SpectralFunction, coupling, kappa=None, gamma=None, spectrum: LaplaceSpectrum | None = None, radius=CLASSIFY_RADIUS):
    """Roots of delta(w) - (w - omega_c)/Omega^2, classified by U.

    Brackets come from sign changes on the sampled grid; each root is then
    refined with Brent's method on a cubic spline through the grid values
    (the grid Lamb shift is accurate to ~1e-11).  A root is resonant when U
    has a local maximum within ``radius``.
    """
    if spectrum is None:
        if kappa is None or gamma is None:
            raise ParameterError("kappa and gamma are needed to classify resonances")
        spectrum = laplace_spectrum(F, SystemParams(kappa, gamma), coupling, classify=False)
    o2 = coupling**2
    wc = F.omega_c
    h = spectrum.delta - (spectrum.omega - wc) / o2
    sign = np.sign(h)
    brackets = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    exact = np.flatnonzero(h == 0.0)

    spline = interpolate.CubicSpline(spectrum.omega, h)
    roots = [float(spectrum.omega[i]) for i in exact]
    roots += [optimize.brentq(spline, spectrum.omega[i], spectrum.omega[i + 1], xtol=1e-12) for i in brackets]
    roots = sorted(roots)
    if not roots:
        warnings.warn("no intersections of the Lamb shift with the resonance line", RuntimeWarning, stacklevel=2)
        log.info("no resonance roots for coupling %.4g", coupling)
    peaks = u_maxima(spectrum)
    out = []
    for r in roots:
        near = peaks[np.abs(peaks - r) <= radius]
        out.append(Resonance(r, bool(len(near)), float(near[np.argmin(np.abs(near - r))]) if len(near) else None))
    return tuple(out)


def laplace_spectrum(F: SpectralFunction, params: SystemParams, coupling=None, resolution=DEFAULT_RESOLUTION, classify=True) -> LaplaceSpectrum:
    p = params.resolve(F.omega_c)
    coupling = F.coupling if coupling is None else coupling
    w, Fv, d = lamb_shift_grid(F, resolution)
    U = kernel_U(F, coupling, p.kappa, p.gamma, w, delta=d)
    spec = LaplaceSpectrum(w, Fv, d, U, F.omega_c, coupling, p.kappa, p.gamma)
    if classify:
        res = find_resonances(F, coupling, spectrum=spec)
        spec = LaplaceSpectrum(w, Fv, d, U, F.omega_c, coupling, p.kappa, p.gamma, res)
    return spec


def amplitude_from_laplace(F: SpectralFunction, params: SystemParams, grid, coupling=None, resolution=None) -> Trajectory:
    """Single-photon A(t) from the branch-cut integral (hole-free F only).

    The frequency integral is a uniform sum; its grid spacing keeps the
    aliasing period 2 pi / d_omega at least 20 times the last time and
    resolves the narrowest spectral feature.  All times are evaluated with
    one FFT.
    """
    if F.holes:
        raise UnsupportedInputError("branch-cut reconstruction excludes pole contributions from holes; use the ODE or Volterra route")
    grid = np.asarray(grid, dtype=float)
    h = _grid_step(grid)
    p = params.resolve(F.omega_c)
    if p.omega_p != p.omega_c:
        raise UnsupportedInputError("Laplace reconstruction assumes omega_p = omega_c")
    coupling = F.coupling if coupling is None else coupling
    nt = len(grid) - 1
    dw = min(DEFAULT_RESOLUTION if resolution is None else resolution, 2 * np.pi / (20.0 * grid[-1]))
    size = 1 << int(np.ceil(np.log2(2 * np.pi / (dw * h))))
    dw = 2 * np.pi / (size * h)
    lo, hi = F.window
    wc = F.omega_c
    jlo = int(np.floor((lo - wc) / dw))
    jhi = int(np.ceil((hi - wc) / dw))
    if jhi - jlo + 1 > size:
        raise AccuracyError("frequency grid exceeds the FFT length; reduce the time step")
    w = wc + np.arange(jlo, jhi + 1) * dw
    # Lamb shift on this grid: spacing dw is uniform, so the odd-offset rule applies
    Fv = F(w)
    n = len(w)
    m = np.arange(-(n - 1), n)
    c = np.zeros(len(m))
    odd = m % 2 != 0
    c[odd] = 2.0 / m[odd]
    conv = sfft.next_fast_len(3 * n - 2, real=True)
    d = sfft.irfft(sfft.rfft(Fv, conv) * sfft.rfft(c, conv), conv)[n - 1:2 * n - 1]
    U = branch_cut_density(F, coupling, p.kappa, p.gamma, w, delta=d)
    buf = np.zeros(size, dtype=complex)
    buf[:n] = U
    k = np.arange(nt + 1)
    spec = np.fft.fft(buf)[: nt + 1] * np.exp(-2j * np.pi * ((jlo * k) % size) / size)
    A = coupling**2 * dw * np.exp(-p.gamma * grid) * spec
    return Trajectory(grid, A, "laplace", A0=1.0 + 0j, meta={"resolution": dw, "A0_reconstructed": complex(A[0])})
