"""Compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import time

import numpy as np

from prethermal import _core
from prethermal import liouvillian as lv
from prethermal.bathmodel import RateSet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _core.backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the fallback is available")
    rates = RateSet.from_beta_omega0(math.log(9), 0.9999)
    rng = np.random.default_rng(0)
    rows = []
    for n in (2, 3, 4, 5, 6):
        x = rng.normal(size=4**n) + 1j * rng.normal(size=4**n)
        for name, mod in backends.items():
            t = best_of(lambda: [mod.lindblad_apply(n, rates.A, rates.B, rates.alpha, x)
                                 for _ in range(20)], args.repeat) / 20
            rows.append(("apply", n, name, t))
    for n in (2, 3, 4):
        rho = lv.vec(np.eye(2**n, dtype=complex) / 2**n)
        times = np.linspace(0, 50, 11)
        L = lv.build_liouvillian(n, rates).data
        for name, mod in backends.items():
            t = best_of(lambda: mod.integrate_lindblad(
                n, rates.A, rates.B, rates.alpha, rho, times, 1e-9, 1e-11, 1e-3, np.inf,
                10**7), args.repeat)
            rows.append(("integrate matrix-free", n, name, t))
            t = best_of(lambda: mod.integrate_dense(L, rho, times, 1e-9, 1e-11, 1e-3, np.inf,
                                                    10**7), args.repeat)
            rows.append(("integrate dense", n, name, t))

    print(f"{'kernel':<22} {'N':>2} {'backend':<9} {'seconds':>11} {'speedup':>8}")
    ref = {(k, n): t for k, n, b, t in rows if b == "python"}
    for k, n, b, t in rows:
        print(f"{k:<22} {n:>2} {b:<9} {t:>11.3e} {ref[(k, n)] / t:>8.1f}")


if __name__ == "__main__":
    main()
