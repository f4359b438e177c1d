"""Compare the compiled and numpy kernels.

    python benchmarks/bench_kernels.py [--steps 4000] [--spins 1200] [--lags 20000]
"""

import argparse
import time

import numpy as np

from spincomb import _pykernels

try:
    from spincomb import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_rk4(mod, steps, spins, rng):
    g = rng.random(spins)
    d = 0.06 + 1j * rng.uniform(-1800.0, 1800.0, spins)
    drive = np.zeros((steps, 1), dtype=complex)
    drive[:120] = 1.0

    def run():
        B = np.zeros(spins, dtype=complex)
        mod.rk4_arrowhead(1.0 + 0j, B, g, d, 2.5 + 0j, 5e-5, drive, np.empty(steps, complex), np.empty(steps))

    return run


def bench_lawson(mod, steps, spins, rng):
    g = rng.random(spins)
    d = 0.06 + 1j * rng.uniform(-1800.0, 1800.0, spins)
    h = 5e-5
    eB1 = np.exp(-0.5 * h * d)
    eA1 = np.exp(-0.5 * h * 2.5) + 0j
    drive = np.zeros((steps, 1), dtype=complex)
    drive[:120] = 1.0

    def run():
        B = np.zeros(spins, dtype=complex)
        mod.lawson_arrowhead(1.0 + 0j, B, g, eB1, eB1 * eB1, eA1, eA1 * eA1, h, drive, np.empty(steps, complex), np.empty(steps))

    return run


def bench_volterra(mod, lags, rng):
    K = (rng.normal(size=lags) + 1j * rng.normal(size=lags)) * 1e-3
    K[0] = 0.0
    f = np.exp(-2.5 * np.arange(lags) * 5e-5).astype(complex)

    def run():
        mod.volterra_gregory(K, f, 5e-5, np.empty(lags, dtype=complex))

    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--spins", type=int, default=1200)
    ap.add_argument("--lags", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(1)
    mods = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':32s} " + " ".join(f"{n:>10s}" for n, _ in mods) + "   speedup")
    for label, make in [
        (f"rk4 {args.steps} steps x {args.spins}", lambda m: bench_rk4(m, args.steps, args.spins, rng)),
        (f"lawson {args.steps} steps x {args.spins}", lambda m: bench_lawson(m, args.steps, args.spins, rng)),
        (f"volterra {args.lags} lags", lambda m: bench_volterra(m, args.lags, rng)),
    ]:
        t = [best_of(make(m), args.repeat) for _, m in mods]
        speed = f"{t[0] / t[1]:8.1f}x" if len(t) > 1 else "      n/a"
        print(f"{label:32s} " + " ".join(f"{x:9.3f}s" for x in t) + f"  {speed}")


if __name__ == "__main__":
    main()
