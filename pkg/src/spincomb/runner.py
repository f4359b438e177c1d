"""Scenario execution: spectral -> (modes | laplace) -> dynamics -> metrics.

CSV files are written with fixed formatting so identical scenarios give
identical bytes.  ``report.json`` also holds wall-clock times and is not
byte-stable.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .dynamics import Trajectory, integrate_ode, pulse_metrics, solve_volterra, time_grid
from .errors import ConfigError, SpinCombError, ValidationError
from .laplace import amplitude_from_laplace, laplace_spectrum
from .modes import build_generator_matrix, dominant_peaks, find_polariton_peaks, solve_modes, sweep_detuning
from .params import CARD
from .scenario import Scenario
from .spectral import Hole, SpectralFunction, apply_holes, build_spectral_function, discretize_ensemble
from .units import TWO_PI, ns, to_ghz, to_mhz, to_ns

log = logging.getLogger(__name__)

SPECTRUM_STEP_MHZ = 0.05
FMT = "%.12e"


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except SpinCombError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def _write_csv(path: Path, header, columns):
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(v) if isinstance(v, (str, int, np.integer)) else FMT % v for v in row])


def _fmt_int(a):
    return [int(x) for x in a]


def write_spectrum(path, F: SpectralFunction):
    lo, hi = F.window
    n = int(round((to_mhz(hi - lo)) / SPECTRUM_STEP_MHZ)) + 1
    w = np.linspace(lo, hi, n)
    _write_csv(path, ["omega_minus_omega_c_over_2pi_mhz", "F"], [to_mhz(w - F.omega_c), F(w)])


def write_trajectory(path, traj: Trajectory, kappa):
    P = traj.intensity
    peak = P.max() if P.max() > 0 else 1.0
    _write_csv(path, ["t_ns", "re_A", "im_A", "abs2_A", "abs2_A_normalized", "barrier_exp_minus_kappa_t"],
               [to_ns(traj.t), traj.A.real, traj.A.imag, P, P / peak, np.exp(-kappa * traj.t)])


def write_pulses(path, metrics):
    _write_csv(path, ["pulse_index", "t_ns", "peak_abs2", "above_barrier"],
               [list(range(len(metrics.times))), to_ns(metrics.times), metrics.heights, [int(b) for b in metrics.above_barrier]])


def write_modes(path, omega_s, eigenvalues, content):
    omega_s = np.atleast_1d(omega_s)
    eigenvalues = np.atleast_2d(eigenvalues)
    content = np.atleast_2d(content)
    cols = [np.repeat(to_ghz(omega_s), eigenvalues.shape[1]), to_mhz(eigenvalues.imag.ravel()),
            to_mhz(eigenvalues.real.ravel()), content.ravel()]
    _write_csv(path, ["omega_s_over_2pi_ghz", "im_lambda_over_2pi_mhz", "re_lambda_over_2pi_mhz", "cavity_content"], cols)


def write_peaks(path, peaks):
    _write_csv(path, ["peak_index", "omega_minus_omega_c_over_2pi_mhz", "cavity_content"],
               [list(range(len(peaks))), [to_mhz(p.offset) for p in peaks], [p.cavity_content for p in peaks]])


def write_laplace(path, spec):
    _write_csv(path, ["omega_minus_omega_c_over_2pi_mhz", "delta", "U", "resonance_flag"],
               [to_mhz(spec.omega - spec.omega_c), spec.delta, spec.U, _fmt_int(spec.resonance_flags())])


@dataclass
class RunReport:
    scenario: str
    output_dir: str
    files: dict = field(default_factory=dict)
    deviations: dict = field(default_factory=dict)
    pulses: dict = field(default_factory=dict)
    peaks_mhz: list = field(default_factory=list)
    hole_centers_mhz: list = field(default_factory=list)
    resonances: list = field(default_factory=list)
    timings_s: dict = field(default_factory=dict)
    backend: str = kernels.BACKEND
    card_version: int = CARD["version"]

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def build_spectrum(s: Scenario, threads=1, report: RunReport | None = None, outdir: Path | None = None):
    """F for the scenario, with holes burnt per the hole policy.

    Returns ``(F_without_holes, F, mode_set_or_None, peaks)``.
    """
    cfg = s.comb.config()
    params = s.params()
    with stage("spectral"):
        F0 = build_spectral_function(cfg)
    modes = None
    peaks = []
    if s.modes or s.holes.kind == "auto":
        with stage("modes"):
            t0 = time.perf_counter()
            ens = discretize_ensemble(F0, s.n_spins)
            modes = solve_modes(build_generator_matrix(ens, params), vectors=False)
            peaks = dominant_peaks(modes)
            if report is not None:
                report.timings_s["modes"] = time.perf_counter() - t0
                report.peaks_mhz = [to_mhz(p.offset) for p in peaks]
    F = F0
    with stage("holes"):
        if s.holes.kind == "auto":
            centers = find_polariton_peaks(modes, s.holes.k)
            F = apply_holes(F0, [Hole(float(c), TWO_PI * s.hole_fwhm_mhz) for c in centers])
        elif s.holes.kind == "explicit":
            F = apply_holes(F0, [h.hole(F0.omega_c) for h in s.holes.holes])
    if report is not None:
        report.hole_centers_mhz = [to_mhz(h.center - F.omega_c) for h in F.holes]
    return F0, F, modes, peaks


def laplace_applicable(s: Scenario) -> bool:
    return s.holes.kind == "none" and s.drive is None and s.a0 == 1.0


def _solvers(s: Scenario, override=None):
    """``all`` means every route that applies to the scenario."""
    sel = override or s.solver
    if sel == "all":
        return ["ode", "volterra"] + (["laplace"] if laplace_applicable(s) else [])
    return [sel]


def simulate(s: Scenario, F: SpectralFunction, solver: str, grid=None) -> Trajectory:
    params = s.params()
    grid = time_grid(ns(s.time.t_end_ns), ns(s.time.step_ns)) if grid is None else grid
    drive = s.drive_signal()
    if solver == "ode":
        ens = discretize_ensemble(F, s.n_spins)
        return integrate_ode(ens, params, drive, init=(s.a0, None), grid=grid, substeps=s.time.substeps)
    if solver == "volterra":
        return solve_volterra(F, params, drive, A0=s.a0, grid=grid)
    if solver == "laplace":
        return amplitude_from_laplace(F, params, grid)
    raise ConfigError(f"unknown solver {solver!r}")


def _metrics(s: Scenario, traj: Trajectory):
    params = s.params()
    spacing = TWO_PI / s.comb.config().delta_omega
    m = pulse_metrics(traj, params.kappa, spacing)
    t_end = traj.t[-1]
    return m, {
        "count": int(len(m.times)),
        "count_above_barrier": m.count_above,
        "mean_spacing_ns": to_ns(m.mean_spacing(20)) if len(m.times) > 1 else None,
        "envelope_ratio_at_end": float(m.envelope_ratio(t_end)) if len(m.times) else None,
        "t_end_ns": to_ns(t_end),
        "normalization": m.normalization,
    }


def run_scenario(s: Scenario, out=None, solver=None, threads=1, tolerance=CARD["validation_tolerance"]) -> RunReport:
    outdir = Path(out or s.out or f"spincomb-out/{s.name}")
    outdir.mkdir(parents=True, exist_ok=True)
    report = RunReport(s.name, str(outdir))
    solvers = _solvers(s, solver)
    if "laplace" in solvers and not laplace_applicable(s):
        raise ConfigError("the laplace solver covers the hole-free single-photon case only")

    F0, F, modes, peaks = build_spectrum(s, threads, report, outdir)
    write_spectrum(outdir / "spectrum.csv", F)
    report.files["spectrum"] = "spectrum.csv"
    if modes is not None:
        write_modes(outdir / "modes.csv", F0.center, modes.eigenvalues, modes.cavity_content)
        write_peaks(outdir / "peaks.csv", peaks)
        report.files.update(modes="modes.csv", peaks="peaks.csv")

    if s.laplace or "laplace" in solvers:
        with stage("laplace"):
            t0 = time.perf_counter()
            spec = laplace_spectrum(F0, s.params())
            report.timings_s["laplace_spectrum"] = time.perf_counter() - t0
        write_laplace(outdir / "laplace.csv", spec)
        report.files["laplace"] = "laplace.csv"
        report.resonances = [{"omega_minus_omega_c_over_2pi_mhz": to_mhz(r.frequency - spec.omega_c), "resonant": r.resonant} for r in spec.resonances]

    if s.sweep is not None:
        sweep_files = run_sweep(s, outdir, threads)
        report.files.update(sweep_files)
        (outdir / "report.json").write_text(report.to_json())
        return report

    trajs = {}
    grid = time_grid(ns(s.time.t_end_ns), ns(s.time.step_ns))
    for name in solvers:
        with stage(f"dynamics:{name}"):
            t0 = time.perf_counter()
            trajs[name] = simulate(s, F, name, grid)
            report.timings_s[name] = time.perf_counter() - t0
    kappa = s.params().kappa
    primary = next(n for n in ("volterra", "ode", "laplace") if n in trajs)
    for name, traj in trajs.items():
        fname = "trajectory.csv" if len(trajs) == 1 else f"trajectory_{name}.csv"
        write_trajectory(outdir / fname, traj, kappa)
        report.files[f"trajectory_{name}"] = fname
    if len(trajs) > 1:
        write_trajectory(outdir / "trajectory.csv", trajs[primary], kappa)
        report.files["trajectory"] = "trajectory.csv"
    with stage("metrics"):
        metrics, summary = _metrics(s, trajs[primary])
    write_pulses(outdir / "pulses.csv", metrics)
    report.files["pulses"] = "pulses.csv"
    report.pulses = summary

    if len(trajs) > 1:
        ref = trajs.get("ode", trajs[primary])
        scale = np.abs(ref.A).max()
        for name, traj in trajs.items():
            if traj is not ref:
                report.deviations[f"{name}_vs_{ref.provenance}"] = float(np.abs(traj.A - ref.A).max() / scale)
    (outdir / "report.json").write_text(report.to_json())
    dev = report.deviations.get("volterra_vs_ode")
    if dev is not None and not dev < tolerance:
        err = ValidationError(f"ODE and Volterra trajectories differ by {dev:.3e} (relative), above the {tolerance:.0e} gate")
        err.stage = "validation"
        raise err
    return report


def run_sweep(s: Scenario, outdir: Path, threads=1) -> dict:
    """Detuning maps for every coupling in the sweep block."""
    files = {}
    params = s.params()
    sw = s.sweep
    for om in sw.omega_over_2pi_mhz:
        cfg = dataclasses.replace(s.comb, omega_over_2pi_mhz=om).config()
        with stage("sweep"):
            dm = sweep_detuning(cfg, params, sw.grid(cfg.omega_c), s.n_spins, threads=threads)
        sub = outdir / f"omega_{om:g}mhz"
        sub.mkdir(exist_ok=True)
        write_modes(sub / "modes.csv", dm.omega_s, dm.eigenvalues, dm.cavity_content)
        files[f"modes_{om:g}mhz"] = str(Path(sub.name) / "modes.csv")
    return files


@dataclass(frozen=True)
class SensitivityRow:
    shift: float
    late_envelope: float
    ratio: float


def late_envelope(traj: Trajectory, s: Scenario, after=2.0):
    """Mean pulse height for t > ``after`` us (absolute |A|^2 units)."""
    spacing = TWO_PI / s.comb.config().delta_omega
    m = pulse_metrics(traj, s.params().kappa, spacing, normalize=False)
    sel = m.heights[m.times > after]
    return float(sel.mean()) if len(sel) else 0.0


def sensitivity_study(s: Scenario, shifts, threads=1, after=2.0, solver=None) -> list[SensitivityRow]:
    """Displace auto-placed holes by ``shift`` times their distance to the cavity."""
    if s.holes.kind != "auto":
        raise ConfigError("sensitivity study needs a scenario with auto-placed holes")
    F0, F, modes, _ = build_spectrum(s)
    centers = np.array(sorted(h.center for h in F.holes))
    wc = F0.omega_c
    name = solver or ("volterra" if s.solver in ("all", "laplace") else s.solver)
    fwhm = TWO_PI * s.hole_fwhm_mhz
    shifts = [float(x) for x in shifts]
    grid = time_grid(ns(s.time.t_end_ns), ns(s.time.step_ns))

    def one(shift):
        Fs = apply_holes(F0, [Hole(float(wc + (c - wc) * (1.0 + shift)), fwhm) for c in centers])
        with stage("sensitivity"):
            return late_envelope(simulate(s, Fs, name, grid), s, after)

    todo = sorted(set(shifts) | {0.0})
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = dict(zip(todo, pool.map(one, todo)))
    else:
        vals = {x: one(x) for x in todo}
    base = vals[0.0]
    return [SensitivityRow(x, vals[x], vals[x] / base if base > 0 else float("nan")) for x in shifts]


def write_sensitivity(path, rows):
    _write_csv(path, ["shift_fraction", "late_envelope", "ratio_to_unshifted"],
               [[r.shift for r in rows], [r.late_envelope for r in rows], [r.ratio for r in rows]])
