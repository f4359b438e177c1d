"""Spin spectral density: q-Gaussian comb, hole burning and discretization.

A comb of ``m`` q-Gaussians with common FWHM is centred on ``omega_s``; the
tooth ``n`` steps away from the centre carries weight
``exp(-(n * delta_omega)**2 / (2 sigma_g**2))``, so the central tooth has unit
weight.  Each tooth is normalized to one over the truncation window, which
makes ``integral(F) == sum(weights)`` hold to rounding.

Holes are multiplicative Gaussian notches.  They remove oscillator strength,
nothing is renormalized afterwards.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import DegenerateInputError, ParameterError
from .units import mhz

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
DEFAULT_TAIL_TOL = 1e-6
DEFAULT_MIN_HALF_WIDTH = mhz(300.0)


def _check_shape(q, fwhm):
    if not 1.0 < q < 3.0:
        raise ParameterError(f"q-Gaussian shape parameter must satisfy 1 < q < 3, got q={q}")
    if not fwhm > 0.0:
        raise ParameterError(f"q-Gaussian FWHM must be positive, got {fwhm}")


def qgaussian_width(fwhm, q):
    """Width parameter Delta for a q-Gaussian of the given FWHM."""
    return 0.5 * fwhm / np.sqrt((2.0**q - 2.0) / (2.0 * q - 2.0))


@dataclass(frozen=True)
class QGaussian:
    """One q-Gaussian tooth, optionally normalized over a finite window.

    The density is ``C * [1 - (1-q) x**2 / Delta**2] ** (1/(1-q))`` with
    ``x = omega - center``.  It is a rescaled Student-t distribution with
    ``nu = (3-q)/(q-1)`` degrees of freedom, which gives closed-form masses.
    """

    center: float
    fwhm: float
    q: float = 1.39
    window: tuple[float, float] | None = None

    def __post_init__(self):
        _check_shape(self.q, self.fwhm)

    @property
    def width(self) -> float:
        return qgaussian_width(self.fwhm, self.q)

    @property
    def dof(self) -> float:
        return (3.0 - self.q) / (self.q - 1.0)

    def _t_scale(self):
        # omega - center = t_scale * u, u Student-t distributed
        return self.width / np.sqrt(3.0 - self.q)

    def untruncated_mass(self, lo, hi):
        """Mass of the full-line normalized density on [lo, hi]."""
        s = self._t_scale()
        ulo, uhi = (lo - self.center) / s, (hi - self.center) / s
        # use the smaller of cdf/sf differences for accuracy in both tails
        if ulo >= 0.0:
            return float(stats.t.sf(ulo, self.dof) - stats.t.sf(uhi, self.dof))
        if uhi <= 0.0:
            return float(stats.t.cdf(uhi, self.dof) - stats.t.cdf(ulo, self.dof))
        return float(1.0 - stats.t.cdf(ulo, self.dof) - stats.t.sf(uhi, self.dof))

    def tail_mass(self, lo, hi):
        """Mass of the full-line density outside [lo, hi]."""
        s = self._t_scale()
        return float(stats.t.cdf((lo - self.center) / s, self.dof) + stats.t.sf((hi - self.center) / s, self.dof))

    @property
    def norm(self) -> float:
        """Peak value C (unit mass over the window, or over the real line)."""
        nu = self.dof
        c_full = special.gamma((nu + 1) / 2) / (np.sqrt(nu * np.pi) * special.gamma(nu / 2)) / self._t_scale()
        if self.window is None:
            return float(c_full)
        return float(c_full / self.untruncated_mass(*self.window))

    def shape(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        q = self.q
        return (1.0 + (q - 1.0) * x * x / self.width**2) ** (1.0 / (1.0 - q))

    def __call__(self, omega):
        return self.norm * self.shape(omega)


def q_gaussian_density(omega, params: QGaussian):
    return params(omega)


@dataclass(frozen=True)
class CombConfig:
    """Comb of ``m`` equally spaced q-Gaussians (all angular frequencies in rad/us).

    ``coupling`` is the collective coupling Omega of the central tooth.
    """

    m: int = 7
    delta_omega: float = mhz(40.0)
    omega_s: float = 2 * np.pi * 2691.5
    omega_c: float = 2 * np.pi * 2691.5
    sigma_g: float = mhz(150.0)
    coupling: float = mhz(26.0)
    gamma_q: float = mhz(9.4)
    q: float = 1.39

    def validate(self):
        if self.m < 1 or self.m % 2 == 0:
            raise ParameterError(f"comb needs an odd number of ensembles (a central one), got m={self.m}")
        if not self.delta_omega > 0.0:
            raise ParameterError("comb spacing must be positive")
        if not self.sigma_g > 0.0:
            raise ParameterError("weight width sigma_g must be positive")
        _check_shape(self.q, self.gamma_q)
        return self

    @property
    def offsets(self) -> np.ndarray:
        """Signed tooth index n for each ensemble, ascending."""
        half = (self.m - 1) // 2
        return np.arange(-half, half + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.omega_s + self.offsets * self.delta_omega

    @property
    def weights(self) -> np.ndarray:
        """Omega_mu**2 / Omega**2; unit for the central tooth."""
        return np.exp(-((self.offsets * self.delta_omega) ** 2) / (2.0 * self.sigma_g**2))

    def shifted(self, delta):
        """Comb and cavity translated together by ``delta``."""
        return dataclasses.replace(self, omega_s=self.omega_s + delta, omega_c=self.omega_c + delta)


@dataclass(frozen=True)
class Hole:
    center: float
    fwhm: float
    depth: float = 1.0

    def __post_init__(self):
        if not self.fwhm > 0.0:
            raise ParameterError(f"hole FWHM must be positive, got {self.fwhm}")
        if not 0.0 <= self.depth <= 1.0:
            raise ParameterError(f"hole depth must lie in [0, 1], got {self.depth}")

    @property
    def sigma(self) -> float:
        return self.fwhm * FWHM_TO_SIGMA

    def factor(self, omega):
        x = (np.asarray(omega, dtype=float) - self.center) / self.sigma
        return 1.0 - self.depth * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class HoleSpec:
    """Holes of common width; ``depth`` is a scalar or one value per centre."""

    centers: Sequence[float]
    fwhm: float
    depth: float | Sequence[float] = 1.0

    def holes(self) -> tuple[Hole, ...]:
        centers = [float(c) for c in self.centers]
        depths = np.broadcast_to(np.asarray(self.depth, dtype=float), (len(centers),))
        return tuple(Hole(c, float(self.fwhm), float(d)) for c, d in zip(centers, depths))


@dataclass(frozen=True)
class SpectralFunction:
    """Evaluable F(omega) >= 0 on a finite truncation window."""

    config: CombConfig
    components: tuple[QGaussian, ...]
    weights: tuple[float, ...]
    window: tuple[float, float]
    holes: tuple[Hole, ...] = field(default=())

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights))

    @property
    def coupling(self) -> float:
        return self.config.coupling

    @property
    def omega_c(self) -> float:
        return self.config.omega_c

    @property
    def center(self) -> float:
        return self.config.omega_s

    def base(self, omega):
        """F without holes; zero outside the window."""
        omega = np.asarray(omega, dtype=float)
        out = np.zeros(omega.shape)
        for w, comp in zip(self.weights, self.components):
            out += w * comp(omega)
        lo, hi = self.window
        return np.where((omega >= lo) & (omega <= hi), out, 0.0)

    def hole_factor(self, omega):
        omega = np.asarray(omega, dtype=float)
        out = np.ones(omega.shape)
        for h in self.holes:
            out *= h.factor(omega)
        return out

    def __call__(self, omega):
        val = self.base(omega)
        if self.holes:
            val = val * self.hole_factor(omega)
        return val if np.ndim(val) else float(val)

    def without_holes(self) -> "SpectralFunction":
        return dataclasses.replace(self, holes=())

    def breakpoints(self) -> list[float]:
        """Frequencies where F has narrow features (peaks, hole centres)."""
        pts = [c.center for c in self.components] + [h.center for h in self.holes]
        lo, hi = self.window
        return sorted(p for p in pts if lo < p < hi)

    def integral(self, epsrel=1e-12) -> float:
        """Adaptive quadrature of F over the window (slow; used for checks)."""
        lo, hi = self.window
        edges = [lo] + self.breakpoints() + [hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(self, a, b, epsabs=0.0, epsrel=epsrel, limit=400)
            total += val
        return total

    def shifted(self, delta) -> "SpectralFunction":
        """Everything (comb, window, holes, cavity) translated by ``delta``."""
        return dataclasses.replace(
            self,
            config=self.config.shifted(delta),
            components=tuple(dataclasses.replace(c, center=c.center + delta, window=(c.window[0] + delta, c.window[1] + delta)) for c in self.components),
            window=(self.window[0] + delta, self.window[1] + delta),
            holes=tuple(dataclasses.replace(h, center=h.center + delta) for h in self.holes),
        )


def truncation_half_width(cfg: CombConfig, tail_tol=DEFAULT_TAIL_TOL, min_half_width=DEFAULT_MIN_HALF_WIDTH) -> float:
    """Smallest half-width W >= min_half_width whose discarded tail mass is below
    ``tail_tol * sum(weights)``.  q-Gaussian tails are algebraic, so this is
    solved for rather than guessed."""
    comps = [QGaussian(c, cfg.gamma_q, cfg.q) for c in cfg.centers]
    weights = cfg.weights
    total = weights.sum()

    def excess(w):
        lo, hi = cfg.omega_s - w, cfg.omega_s + w
        return sum(wt * c.tail_mass(lo, hi) for wt, c in zip(weights, comps)) / total - tail_tol

    if excess(min_half_width) < 0.0:
        return float(min_half_width)
    upper = 2.0 * min_half_width
    while excess(upper) > 0.0:
        upper *= 2.0
    return float(optimize.brentq(excess, min_half_width, upper, xtol=1e-9 * upper))


def build_spectral_function(cfg: CombConfig, tail_tol=DEFAULT_TAIL_TOL, min_half_width=DEFAULT_MIN_HALF_WIDTH) -> SpectralFunction:
    cfg.validate()
    w = truncation_half_width(cfg, tail_tol, min_half_width)
    window = (cfg.omega_s - w, cfg.omega_s + w)
    comps = tuple(QGaussian(float(c), cfg.gamma_q, cfg.q, window) for c in cfg.centers)
    return SpectralFunction(cfg, comps, tuple(float(x) for x in cfg.weights), window)


def apply_holes(F: SpectralFunction, holes: HoleSpec | Sequence[Hole]) -> SpectralFunction:
    """Burn holes into F.

    A hole identical in centre and width to one already present is merged
    (the deeper one wins) instead of being applied twice, so re-burning the
    same hole leaves F unchanged.
    """
    new = holes.holes() if isinstance(holes, HoleSpec) else tuple(holes)
    lo, hi = F.window
    merged = {(h.center, h.fwhm): h for h in F.holes}
    for h in new:
        if not lo <= h.center <= hi:
            raise ParameterError(f"hole centre {h.center} lies outside the truncation window {F.window}")
        key = (h.center, h.fwhm)
        if key in merged and merged[key].depth >= h.depth:
            continue
        merged[key] = h
    if not new:
        return F
    return dataclasses.replace(F, holes=tuple(merged.values()))


@dataclass(frozen=True)
class DiscreteEnsemble:
    """``N`` spin bins (omega_l, g_l) representing F on a uniform grid."""

    omegas: np.ndarray
    couplings: np.ndarray
    spectral: SpectralFunction
    window: tuple[float, float]

    @property
    def size(self) -> int:
        return len(self.omegas)

    @property
    def detunings(self) -> np.ndarray:
        return self.omegas - self.spectral.omega_c


def discretize_ensemble(F: SpectralFunction, n: int, window: tuple[float, float] | None = None) -> DiscreteEnsemble:
    """Cell-centred uniform grid with g_l**2 proportional to F(omega_l).

    Couplings are normalized against the hole-free F on the same grid, so
    ``sum(g**2) == Omega**2 * sum(weights)`` without holes and strictly less
    with holes.
    """
    if n < 2:
        raise ParameterError(f"need at least two spin bins, got N={n}")
    lo, hi = F.window if window is None else window
    if lo < F.window[0] - 1e-9 or hi > F.window[1] + 1e-9 or not hi > lo:
        raise ParameterError(f"discretization window {(lo, hi)} must lie inside {F.window}")
    step = (hi - lo) / n
    omegas = lo + (np.arange(n) + 0.5) * step
    base = F.base(omegas)
    vals = base * F.hole_factor(omegas) if F.holes else base
    if not np.any(vals > 0.0):
        raise DegenerateInputError("F vanishes on the whole discretization window")
    scale = F.coupling**2 * F.total_weight / base.sum()
    g = np.sqrt(vals * scale)
    g.setflags(write=False)
    omegas.setflags(write=False)
    return DiscreteEnsemble(omegas, g, F, (lo, hi))
