"""Wall-clock comparison of the numba and numpy kernel backends.

    python3 benchmarks/bench_backends.py [--repeat N]

Each case runs once to warm up (JIT compilation), then the best of N runs
is reported together with the max abs difference between the two outputs.
"""

import argparse
import time

import numpy as np

from lefsolve import CoefficientField, ProblemSpec, kernels
from lefsolve.annulus import build_annulus_grid, default_omega, poisson_solve
from lefsolve.radial import solve_radial


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    rng = np.random.default_rng(0)
    f = rng.random(1 << 17)
    yield "cumulative_tail n=131072", lambda b: kernels.cumulative_tail(f, 1e-3, b)

    grid = build_annulus_grid(2.0, 64.0, 257, 64)
    a, c = grid.coefs
    r = rng.random((255, 64))
    omega = default_omega(grid)
    pre = {b: kernels.SSORPreconditioner(255, 64, a, c, omega, b) for b in kernels.BACKENDS}
    yield "SSOR sweep 255x64", lambda b: pre[b](r)

    rhs = np.zeros((257, 64))
    rhs[1:-1] = rng.random((255, 64)) * 1e-3
    yield "poisson_solve 257x64", lambda b: poisson_solve(grid, rhs, 1.0, 2.0, backend=b)

    field = CoefficientField.power(1.0, 4.0)
    spec = ProblemSpec(0.3, 0.2, 1.0, 1.0, field, field)
    yield "solve_radial n=4097", lambda b: solve_radial(spec, n=4097, backend=b).y


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'case':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in cases():
        res = {b: best_of(lambda: fn(b), args.repeat) for b in kernels.BACKENDS}
        if len(res) < 2:
            print(f"{name:<28}{'n/a':>12}{res['numpy'][0]:>12.4f}")
            continue
        (tn, on), (tp, op) = res["numba"], res["numpy"]
        diff = float(np.max(np.abs(np.asarray(on) - np.asarray(op))))
        print(f"{name:<28}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
