"""Benchmark the jitted kernels against their pure-numpy twins.

Each kernel in servoguard._kernels ships in two forms: the plain numpy
implementation (``*_numpy``) and, when numba is importable and
SERVOGUARD_NO_NUMBA is unset, an @njit-compiled wrapper under the bare
name.  This script times both forms on representative workloads and
prints a small table.  JIT compilation happens in a warmup pass before
any timing, so compile time is excluded.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from servoguard import _kernels as K


def _time_best(fn, args, repeats, inner):
    """Best-of-`repeats` wall time for `inner` back-to-back calls."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def build_cases(rng):
    # Sizes mirror real use: knot grids around the 40-sample motion
    # profiles plus a large grid to expose per-call overhead vs throughput,
    # and the prox reference on the biggest frame count the tests use.
    x_small = np.cumsum(rng.uniform(0.5, 1.5, size=64))
    y_small = np.cumsum(rng.uniform(0.0, 1.0, size=64))
    x_big = np.cumsum(rng.uniform(0.5, 1.5, size=4096))
    y_big = np.cumsum(rng.uniform(0.0, 1.0, size=4096))
    d_small = K.monotone_slopes_numpy(x_small, y_small)
    d_big = K.monotone_slopes_numpy(x_big, y_big)
    q_big = np.sort(rng.uniform(x_big[0], x_big[-1], size=20000))
    frames = rng.normal(size=(12, 8))

    return [
        ("monotone_slopes (n=64)",
         K.monotone_slopes, K.monotone_slopes_numpy,
         (x_small, y_small), 2000),
        ("monotone_slopes (n=4096)",
         K.monotone_slopes, K.monotone_slopes_numpy,
         (x_big, y_big), 100),
        ("hermite_eval (4096 knots, 20k queries)",
         K.hermite_eval, K.hermite_eval_numpy,
         (x_big, y_big, d_big, q_big), 20),
        ("hermite_eval_uniform (n=64, factor=50)",
         K.hermite_eval_uniform, K.hermite_eval_uniform_numpy,
         (y_small, d_small, 50), 500),
        ("lowrank_prox_gradient (12x8, 400 iters)",
         K.lowrank_prox_gradient, K.lowrank_prox_gradient_numpy,
         (frames, 1.0, 400), 5),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions per case (best is kept)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = build_cases(rng)

    print("backend reported by servoguard._kernels:", K.kernel_backend())
    if not K.NUMBA_ENABLED:
        print("numba path disabled; the two columns time the same "
              "pure-numpy function\n")

    # Warmup: trigger JIT compilation and touch every code path once.
    for _, jitted, plain, fargs, _ in cases:
        jitted(*fargs)
        plain(*fargs)

    header = f"{'kernel':<42}{'jitted':>12}{'numpy':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, jitted, plain, fargs, inner in cases:
        t_jit = _time_best(jitted, fargs, args.repeats, inner)
        t_np = _time_best(plain, fargs, args.repeats, inner)
        ratio = t_np / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<42}{t_jit * 1e6:>10.1f}us{t_np * 1e6:>10.1f}us"
              f"{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
