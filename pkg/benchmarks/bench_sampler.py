"""Compare the compiled and pure-Python conditional-inversion kernels.

Usage: python benchmarks/bench_sampler.py [--n 20000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from invmaxstable import exponent, kernel
from invmaxstable.numerics import RandomStream

SETTINGS = ["family=smith lambda=1.3", "family=schlather rho=0.0",
            "family=extremalt nu=3 rho=0.5", "family=logistic alpha=0.6",
            "family=asymmetriclogistic theta=0.6 phi=0.8 alpha=0.5"]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "cython" not in kernel.available_backends():
        print("compiled kernel not built; only the Python backend is available")
        return 1
    u = RandomStream(1, 0).uniform((args.n, 2))
    x, log_u = -np.log(u[:, 0]), np.log(u[:, 1])
    print(f"{'family':45s} {'python s':>9s} {'cython s':>9s} {'speedup':>8s} {'max |dlog y|':>13s}")
    for text in SETTINGS:
        fam = exponent.parse_family(text)
        tp, (yp, _, _) = best_time(lambda: kernel.solve_conditional(fam, x, log_u, "python"),
                                   args.repeat)
        tc, (yc, _, _) = best_time(lambda: kernel.solve_conditional(fam, x, log_u, "cython"),
                                   args.repeat)
        diff = float(np.max(np.abs(np.log(yp) - np.log(yc))))
        print(f"{str(fam):45s} {tp:9.3f} {tc:9.3f} {tp / tc:8.1f} {diff:13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
