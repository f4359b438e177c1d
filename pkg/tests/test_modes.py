import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from spincomb.dynamics import SystemParams, solve_volterra, time_grid
from spincomb.errors import ParameterError, RegimeError
from spincomb.modes import (
    GeneratorMatrix,
    build_generator_matrix,
    dominant_peaks,
    find_polariton_peaks,
    resonant_modes,
    solve_modes,
    sweep_detuning,
)
from spincomb.spectral import CombConfig, DiscreteEnsemble, build_spectral_function, discretize_ensemble
from spincomb.units import ghz, mhz, to_mhz

KAPPA = mhz(0.4)
GAMMA = mhz(0.01)


def one_spin(F, omega, g):
    return DiscreteEnsemble(np.array([omega]), np.array([g]), F, F.window)


def check_structure(ms, kappa, gamma):
    eps = 1e-9 * kappa
    assert np.all(ms.decay_rates >= gamma - eps)
    assert np.all(ms.decay_rates <= kappa + eps)
    if ms.vectors is not None:
        a2 = ms.cavity_content
        assert np.max(np.abs(ms.decay_rates - (kappa * a2 + gamma * (1 - a2)))) < 1e-9


class TestGenerator:
    def test_uncoupled_spin(self, comb8):
        ens = one_spin(comb8, comb8.omega_c + 3.0, 0.0)
        ms = solve_modes(build_generator_matrix(ens, SystemParams(2.0, 0.5)))
        assert sorted(ms.eigenvalues, key=lambda z: z.imag) == [2.0 + 0j, 0.5 + 3j]
        closed = solve_modes(build_generator_matrix(ens, SystemParams(2.0, 0.5)), vectors=False)
        assert np.array_equal(closed.cavity_content, [1.0, 0.0])

    def test_rabi_pair(self, comb8):
        g = 7.0
        ens = one_spin(comb8, comb8.omega_c, g)
        ms = solve_modes(build_generator_matrix(ens, SystemParams(1.3, 1.3)))
        assert np.allclose(ms.eigenvalues, [1.3 - 1j * g, 1.3 + 1j * g], atol=1e-13)

    @given(g=st.floats(0.0, 20.0), det=st.floats(-20.0, 20.0), kappa=st.floats(0.1, 5.0), gamma=st.floats(0.0, 5.0))
    def test_two_level_closed_form(self, g, det, kappa, gamma):
        F = build_spectral_function(CombConfig(m=1))
        ens = one_spin(F, F.omega_c + det, g)
        lam = solve_modes(build_generator_matrix(ens, SystemParams(kappa, gamma)), vectors=False).eigenvalues
        d = gamma + 1j * det
        disc = np.sqrt(((kappa - d) / 2) ** 2 - g * g + 0j)
        exact = np.array([(kappa + d) / 2 + disc, (kappa + d) / 2 - disc])
        for z in exact:
            assert np.min(np.abs(lam - z)) < 1e-10 * (1 + abs(z))

    def test_matches_equations_of_motion(self, comb26, rng):
        ens = discretize_ensemble(comb26, 50)
        p = SystemParams(KAPPA, GAMMA).resolve(comb26.omega_c)
        L = build_generator_matrix(ens, p).matrix
        x = rng.normal(size=51) + 1j * rng.normal(size=51)
        A, B = x[0], x[1:]
        dA = -p.kappa * A + np.dot(ens.couplings, B)
        dB = -(p.gamma + 1j * (ens.omegas - p.omega_c)) * B - ens.couplings * A
        assert np.allclose(-L @ x, np.concatenate([[dA], dB]), rtol=1e-12, atol=1e-12 * np.abs(L).max())

    def test_trace(self, modes26, comb26):
        ens = discretize_ensemble(comb26, 1200)
        tr = KAPPA + np.sum(GAMMA + 1j * (ens.omegas - comb26.omega_c))
        assert abs(np.sum(modes26.eigenvalues) - tr) < 1e-8 * abs(tr)

    def test_non_finite_rejected(self, comb8):
        gm = build_generator_matrix(discretize_ensemble(comb8, 4), SystemParams(KAPPA, GAMMA))
        bad = dataclasses.replace(gm, matrix=np.where(np.eye(5, dtype=bool), np.nan, gm.matrix))
        with pytest.raises(ParameterError):
            solve_modes(bad)


class TestModeSet:
    @pytest.mark.parametrize("name", ["modes8", "modes26"])
    def test_bounds_and_rayleigh_identity(self, name, request):
        check_structure(request.getfixturevalue(name), KAPPA, GAMMA)

    def test_unit_norm_and_residuals(self, modes8, comb8):
        L = build_generator_matrix(discretize_ensemble(comb8, 1200), SystemParams(KAPPA, GAMMA)).matrix
        V, lam = modes8.vectors, modes8.eigenvalues
        assert np.allclose(np.linalg.norm(V, axis=0), 1.0, atol=1e-13)
        assert np.max(np.linalg.norm(L @ V - V * lam, axis=0)) < 1e-8 * np.linalg.norm(L, 2)

    def test_sorted_by_frequency(self, modes8):
        assert np.all(np.diff(modes8.eigenvalues.imag) >= 0)

    def test_closed_form_content_matches_vectors(self, comb8, modes8):
        ms = resonant_modes(CombConfig(coupling=mhz(8.0)), SystemParams(KAPPA, GAMMA), vectors=False)
        assert np.allclose(ms.eigenvalues, modes8.eigenvalues, atol=1e-9)
        assert np.allclose(ms.cavity_content, modes8.cavity_content, rtol=1e-8, atol=1e-13)

    @settings(max_examples=10, deadline=None)
    @given(kappa=st.floats(0.01, 10.0), gamma=st.floats(0.0, 10.0), coupling=st.floats(1.0, 200.0), n=st.integers(2, 80))
    def test_structure_property(self, kappa, gamma, coupling, n):
        F = build_spectral_function(CombConfig(coupling=coupling))
        ms = solve_modes(build_generator_matrix(discretize_ensemble(F, n), SystemParams(kappa, gamma)))
        lo, hi = min(kappa, gamma), max(kappa, gamma)
        eps = 1e-9 * max(kappa, 1.0)
        assert np.all(ms.decay_rates >= lo - eps) and np.all(ms.decay_rates <= hi + eps)
        a2 = ms.cavity_content
        assert np.max(np.abs(ms.decay_rates - (kappa * a2 + gamma * (1 - a2)))) < 1e-9 * max(kappa, gamma, 1.0)

    def test_equal_losses_give_uniform_decay(self, comb26):
        ms = solve_modes(build_generator_matrix(discretize_ensemble(comb26, 200), SystemParams(1.1, 1.1)), vectors=False)
        assert np.allclose(ms.decay_rates, 1.1, atol=1e-10)

    def test_translation_covariance(self):
        p = SystemParams(KAPPA, GAMMA)
        base = CombConfig(coupling=mhz(26.0))
        shift = mhz(37.0)
        moved = dataclasses.replace(base, omega_c=base.omega_c + shift, omega_s=base.omega_s + shift)
        a = resonant_modes(base, p, n_spins=300).eigenvalues
        b = resonant_modes(moved, p, n_spins=300).eigenvalues
        assert np.max(np.abs(a - b)) < 1e-9 * np.max(np.abs(a))


class TestPeaks:
    def test_two_peaks_at_8mhz(self, modes8):
        pk = dominant_peaks(modes8)
        assert len(pk) == 2
        offsets = [p.offset for p in pk]
        assert abs(offsets[0] + offsets[1]) < mhz(1.0)
        assert to_mhz(offsets[1] - offsets[0]) == pytest.approx(16.0, rel=0.1)

    def test_eight_near_equidistant_peaks_at_26mhz(self, modes26):
        pk = dominant_peaks(modes26)
        assert len(pk) == 8
        x = np.array([p.offset for p in pk])
        assert np.allclose(x, -x[::-1], atol=mhz(1.0))
        gaps = np.diff(x)
        # the central gap spans the cavity and is the only one that differs
        outer = np.delete(gaps, 3)
        assert np.max(outer) / np.min(outer) < 1.1

    @pytest.mark.parametrize("name", ["modes8", "modes26"])
    def test_prominence_over_dark_background(self, name, request):
        from spincomb.modes import cavity_content_profile

        ms = request.getfixturevalue(name)
        background = np.median(cavity_content_profile(ms).values)
        assert min(p.prominence for p in dominant_peaks(ms)) >= 10 * background

    def test_find_peaks_absolute_sorted(self, modes26):
        f = find_polariton_peaks(modes26, 8)
        assert np.all(np.diff(f) > 0)
        assert np.all(np.abs(f - ghz(2.6915)) < mhz(150))

    def test_fewer_peaks_than_requested(self, params):
        ms = resonant_modes(CombConfig(coupling=mhz(1.0)), params, n_spins=400)
        with pytest.raises(RegimeError, match="coupling too weak"):
            find_polariton_peaks(ms, 8)

    def test_bad_k(self, modes8):
        with pytest.raises(ParameterError):
            find_polariton_peaks(modes8, 0)

    @pytest.mark.slow
    def test_fourier_spectrum_of_dynamics(self, comb26, params, modes26):
        grid = time_grid(3.0, 5e-5)
        A = solve_volterra(comb26, params, A0=1.0, grid=grid).A
        n = len(A)
        pad = 8 * n
        S = np.abs(np.fft.fft(A * np.hanning(n), pad))
        f = np.fft.fftfreq(pad, grid[1]) * 2 * np.pi
        sel = np.abs(f) < mhz(200)
        idx, _ = find_peaks(S[sel], prominence=1e-3 * S.max())
        found = f[sel][idx]
        # Hann main-lobe half-width
        resolution = 2 * (2 * np.pi / grid[-1])
        for x in find_polariton_peaks(modes26, 8) - comb26.omega_c:
            assert np.min(np.abs(np.abs(found) - abs(x))) <= resolution

    def test_polariton_decay_approaches_half_total_loss(self, modes26):
        half = (KAPPA + GAMMA) / 2
        rates = np.array([modes26.eigenvalues[p.mode_index].real for p in dominant_peaks(modes26)])
        ratio = rates.min() / half
        assert 1.0 <= ratio <= 1.15, f"min polariton Re(lambda) = {ratio:.3f} x (kappa+gamma)/2"


class TestSweep:
    def test_threads_are_deterministic(self, params):
        cfg = CombConfig(coupling=mhz(8.0))
        grid = cfg.omega_c + mhz(np.array([-40.0, 0.0, 25.0]))
        a = sweep_detuning(cfg, params, grid, n_spins=150, threads=1)
        b = sweep_detuning(cfg, params, grid, n_spins=150, threads=3)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.cavity_content, b.cavity_content)

    def test_resonant_row_matches_direct_solve(self, params):
        cfg = CombConfig(coupling=mhz(8.0))
        sweep = sweep_detuning(cfg, params, [cfg.omega_c], n_spins=150)
        direct = resonant_modes(cfg, params, n_spins=150)
        assert np.allclose(sweep.eigenvalues[0], direct.eigenvalues, atol=1e-10)

    def test_avoided_crossing_with_side_tooth(self, params):
        # comb centre 40 MHz above the cavity puts the n = -1 tooth on resonance
        cfg = CombConfig(coupling=mhz(8.0))
        ws = cfg.omega_c + mhz(40.0)
        sweep = sweep_detuning(cfg, params, [ws], n_spins=600)
        ms = dataclasses.replace(resonant_modes(cfg, params, n_spins=600), eigenvalues=sweep.eigenvalues[0],
                                 cavity_content=sweep.cavity_content[0])
        pk = dominant_peaks(ms)
        assert len(pk) >= 2
        top = sorted(pk, key=lambda p: p.cavity_content)[-2:]
        assert top[0].offset * top[1].offset < 0

    def test_bad_grid(self, params):
        with pytest.raises(ParameterError):
            sweep_detuning(CombConfig(), params, [2.0, 1.0])
