import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, signal

from spincomb.dynamics import SystemParams, integrate_ode, time_grid
from spincomb.errors import ParameterError, UnsupportedInputError
from spincomb.laplace import (
    amplitude_from_laplace,
    branch_cut_density,
    dominant_u_peaks,
    find_resonances,
    kernel_U,
    lamb_shift,
    lamb_shift_grid,
    laplace_spectrum,
)
from spincomb.modes import find_polariton_peaks
from spincomb.spectral import CombConfig, HoleSpec, apply_holes, build_spectral_function, discretize_ensemble
from spincomb.units import mhz, ns

KAPPA = mhz(0.4)
GAMMA = mhz(0.01)


def excluded_sum(F, w, eps, n=200001):
    """Brute-force PV: quadrature on [a, w-eps] and [w+eps, b] (eps -> 0 by symmetry)."""
    lo, hi = F.window
    total = 0.0
    for a, b in ((lo, w - eps), (w + eps, hi)):
        if b > a:
            pts = [p for p in F.breakpoints() if a < p < b]
            edges = [a] + pts + [b]
            for x0, x1 in zip(edges[:-1], edges[1:]):
                total += integrate.quad(lambda x: F(x) / (w - x), x0, x1, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    return total


class TestLambShift:
    def test_zero_at_center(self, comb26):
        grid = np.linspace(comb26.omega_c - mhz(200), comb26.omega_c + mhz(200), 9)
        scale = np.max(np.abs(lamb_shift(comb26, grid)))
        assert abs(lamb_shift(comb26, comb26.omega_c)) < 1e-8 * scale

    @settings(max_examples=6, deadline=None)
    @given(x=st.floats(0.5, 400.0))
    def test_antisymmetry(self, x):
        F = build_spectral_function(CombConfig(coupling=mhz(26.0)))
        a = lamb_shift(F, F.omega_c + mhz(x))
        b = lamb_shift(F, F.omega_c - mhz(x))
        assert a == pytest.approx(-b, rel=1e-8)

    def test_against_excluded_sum(self, comb26):
        # symmetric exclusion converges as O(eps^2) for smooth F
        w = comb26.omega_c + mhz(23.7)
        ref = excluded_sum(comb26, w, 1e-4)
        assert lamb_shift(comb26, w) == pytest.approx(ref, rel=1e-6)

    def test_single_tooth_tail(self):
        F = build_spectral_function(CombConfig(m=1))
        w = F.omega_c + mhz(250)
        assert lamb_shift(F, w) == pytest.approx(1.0 / (w - F.center), rel=0.05)
        far = F.window[1] + mhz(500)
        assert lamb_shift(F, far) == pytest.approx(1.0 / (far - F.center), rel=0.01)

    def test_far_field_moment(self, comb26):
        half_width = 3 * comb26.config.delta_omega
        w = comb26.omega_c + 5 * half_width
        assert lamb_shift(comb26, w) == pytest.approx(comb26.total_weight / (w - comb26.omega_c), rel=0.05)

    def test_grid_matches_quadrature(self, comb26, rng):
        w, Fv, d = lamb_shift_grid(comb26)
        idx = rng.choice(len(w) - 200, 6, replace=False) + 100
        ref = lamb_shift(comb26, w[idx])
        assert np.allclose(d[idx], ref, rtol=1e-8, atol=1e-10 * np.max(np.abs(d)))

    def test_hilbert_transform(self, comb26):
        # delta = pi * H[F] where H is the Hilbert transform
        w, Fv, d = lamb_shift_grid(comb26, resolution=0.2)
        pad = 64 * len(w)
        ht = np.imag(signal.hilbert(Fv, pad))[: len(w)]
        core = np.abs(w - comb26.omega_c) < mhz(200)
        assert np.max(np.abs(np.pi * ht[core] - d[core])) < 1e-3 * np.max(np.abs(d))

    def test_nan_rejected(self, comb8):
        with pytest.raises(ParameterError):
            lamb_shift(comb8, np.nan)


class TestKernel:
    def test_u_non_negative(self, comb26):
        spec = laplace_spectrum(comb26, SystemParams(KAPPA, GAMMA), classify=False)
        assert np.all(spec.U >= 0)

    @given(kappa=st.floats(0.01, 10.0), gamma=st.floats(0.0, 10.0))
    @settings(max_examples=20, deadline=None)
    def test_u_non_negative_any_losses(self, kappa, gamma):
        F = build_spectral_function(CombConfig(coupling=mhz(8.0)))
        w, Fv, d = lamb_shift_grid(F, resolution=0.5)
        assert np.all(kernel_U(F, F.coupling, kappa, gamma, w, delta=d) >= 0)

    def test_forms_coincide_for_equal_losses(self, comb8):
        w, Fv, d = lamb_shift_grid(comb8, resolution=0.5)
        a = kernel_U(comb8, comb8.coupling, 1.0, 1.0, w, delta=d)
        b = branch_cut_density(comb8, comb8.coupling, 1.0, 1.0, w, delta=d)
        assert np.allclose(a, b.real, rtol=1e-12, atol=0) and np.allclose(b.imag, 0, atol=1e-14 * np.max(a))

    @pytest.mark.parametrize("coupling,name", [(8.0, "modes8"), (26.0, "modes26")])
    def test_u_peaks_match_eigen_peaks(self, coupling, name, request):
        F = build_spectral_function(CombConfig(coupling=mhz(coupling)))
        ms = request.getfixturevalue(name)
        peaks = find_polariton_peaks(ms, 2 if coupling == 8.0 else 8)
        u = dominant_u_peaks(laplace_spectrum(F, SystemParams(KAPPA, GAMMA), classify=False))
        assert len(u) == len(peaks)
        assert np.max(np.abs(np.sort(u) - peaks)) < mhz(0.5)


class TestResonances:
    @pytest.mark.parametrize("coupling,expected", [(1.0, 1), (8.0, 2), (26.0, 8)])
    def test_resonant_root_count(self, coupling, expected):
        F = build_spectral_function(CombConfig(coupling=mhz(coupling)))
        spec = laplace_spectrum(F, SystemParams(KAPPA, GAMMA))
        assert len(spec.resonant) == expected, [round((r.frequency - F.omega_c) / (2 * np.pi), 2) for r in spec.resonant]

    def test_roots_solve_the_condition(self, comb26):
        spec = laplace_spectrum(comb26, SystemParams(KAPPA, GAMMA))
        o2 = comb26.coupling**2
        for r in spec.resonances:
            assert lamb_shift(comb26, r.frequency) == pytest.approx((r.frequency - comb26.omega_c) / o2, abs=1e-8)

    def test_flags(self, comb8):
        spec = laplace_spectrum(comb8, SystemParams(KAPPA, GAMMA))
        flags = spec.resonance_flags()
        assert np.count_nonzero(flags == 1) == len(spec.resonant)
        assert np.count_nonzero(flags) == len(spec.resonances)

    def test_no_roots_warns(self, comb8):
        # lifting delta far above the line removes every intersection
        spec = laplace_spectrum(comb8, SystemParams(KAPPA, GAMMA), coupling=mhz(8.0), classify=False)
        shifted = spec.__class__(spec.omega, spec.F, spec.delta + 1e3, spec.U, spec.omega_c, spec.coupling, spec.kappa, spec.gamma)
        with pytest.warns(RuntimeWarning, match="no intersections"):
            assert find_resonances(comb8, mhz(8.0), spectrum=shifted) == ()

    def test_needs_losses(self, comb8):
        with pytest.raises(ParameterError):
            find_resonances(comb8, mhz(8.0))


class TestReconstruction:
    @pytest.mark.parametrize("coupling", [8.0, 26.0])
    def test_matches_ode(self, coupling, params):
        F = build_spectral_function(CombConfig(coupling=mhz(coupling)))
        grid = time_grid(ns(400), ns(0.05))
        ode = integrate_ode(discretize_ensemble(F, 1200), params, grid=grid)
        lap = amplitude_from_laplace(F, params, grid)
        assert np.max(np.abs(lap.A - ode.A)) / np.max(np.abs(ode.A)) < 1e-3
        assert abs(lap.meta["A0_reconstructed"] - 1.0) < 1e-6

    def test_rejects_holes(self, comb26, params):
        Fh = apply_holes(comb26, HoleSpec([comb26.omega_c + mhz(17.5)], mhz(0.47)))
        with pytest.raises(UnsupportedInputError):
            amplitude_from_laplace(Fh, params, time_grid(ns(10), ns(0.05)))

    def test_rejects_detuned_drive_frame(self, comb26):
        p = SystemParams(KAPPA, GAMMA, omega_p=comb26.omega_c + 1.0)
        with pytest.raises(UnsupportedInputError):
            amplitude_from_laplace(comb26, p, time_grid(ns(10), ns(0.05)))
