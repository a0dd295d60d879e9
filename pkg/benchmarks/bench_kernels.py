"""Time the compiled and pure-Python kernel backends side by side.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N] [--size N]

Each kernel is timed with ``timeit`` on identical inputs for every
importable backend, and the outputs are checked for agreement. A final row
times a whole deblurring-sized IRLS solve under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from irlsreg import kernels


def _cases(size, rng):
    n = size * size
    image = rng.uniform(0, 1, (size, size))
    kernel = rng.uniform(0, 1, (9, 9))
    x = rng.standard_normal(n)
    q = rng.choice([1.0, 1.5, 2.0], n)
    lam = rng.uniform(0.01, 1, n)
    w = rng.uniform(0.1, 10, n)
    return {
        "correlate2d_same 9x9": lambda m: m.correlate2d_same(image, kernel),
        "irls_weights": lambda m: m.irls_weights(x, 1e-3, q),
        "reweighted_scale": lambda m: m.reweighted_scale(x, lam, q, w),
        "soft_threshold": lambda m: m.soft_threshold(x, 0.3),
    }


_SOLVE = """
import numpy as np
from irlsreg.linops import ConvolutionOperator, rescale_problem
from irlsreg.penalty import PenaltySpec, lambda_max
from irlsreg.problems import make_gaussian_blur_kernel
from irlsreg.solvers import SolverConfig, solve
import time
s = {size}
op = ConvolutionOperator(make_gaussian_blur_kernel(9, 2.5, 2.9), s, s)
b = op.apply(np.random.default_rng(0).uniform(0, 1, s * s))
op, b, _ = rescale_problem(op, b)
p = PenaltySpec.uniform(s * s, lambda_max(op, b) / 100)
t = time.perf_counter()
solve(op, b, p, SolverConfig(max_iters=200, step_tol=0.0))
print(time.perf_counter() - t)
"""


def _solve_seconds(size, pure):
    env = dict(os.environ)
    if pure:
        env["IRLSREG_PURE_PYTHON"] = "1"
    else:
        env.pop("IRLSREG_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", _SOLVE.format(size=size)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--size", type=int, default=128, help="image side length")
    args = ap.parse_args(argv)

    found = kernels.backends()
    names = sorted(found)
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(names)} (active: {kernels.BACKEND}); image {args.size}x{args.size}")
    print(f"{'kernel':24s}" + "".join(f"{n + ' [ms]':>16s}" for n in names) + f"{'speedup':>10s}")
    for label, fn in _cases(args.size, rng).items():
        outs = {n: fn(found[n]) for n in names}
        ref = outs["python"]
        for n in names:
            np.testing.assert_allclose(outs[n], ref, rtol=1e-12, atol=1e-12)
        ms = {n: 1e3 * min(timeit.repeat(lambda: fn(found[n]), number=1, repeat=args.repeat))
              for n in names}
        speed = ms["python"] / ms["cython"] if "cython" in ms else float("nan")
        print(f"{label:24s}" + "".join(f"{ms[n]:16.3f}" for n in names) + f"{speed:10.2f}")

    row = {"python": _solve_seconds(args.size, True)}
    if "cython" in found:
        row["cython"] = _solve_seconds(args.size, False)
    speed = row["python"] / row["cython"] if "cython" in row else float("nan")
    print(f"{'IRLS solve, 200 iters':24s}" + "".join(f"{1e3 * row[n]:16.1f}" for n in names)
          + f"{speed:10.2f}")


if __name__ == "__main__":
    main()
