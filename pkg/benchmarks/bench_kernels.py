"""
Compare the compiled kernels with their pure-Python twins.

Times each kernel on solver-sized inputs, then a full eigenpair solve and
a finite-volume oracle solve with each backend swapped in.
"""

import argparse
import math
import timeit
from types import SimpleNamespace

import numpy as np

from chiti import _kernels_py, eigensolver
from chiti.eigensolver import Interval, first_eigen, oracle_fd_eigen
from chiti.model_space import ModelParams

try:
    from chiti import _kernels
except ImportError:
    _kernels = None


def kernel_cases(n_nodes, n_matrix):
    t = np.linspace(0.3, 2.8, n_nodes)
    w = np.sin(t) ** 2
    wm = np.sin(0.5 * (t[1:] + t[:-1])) ** 2
    out = np.empty((n_nodes, 2))
    rng = np.random.default_rng(0)
    d = rng.uniform(1.0, 3.0, n_matrix)
    e2 = rng.uniform(0.0, 0.25, n_matrix - 1)
    return {
        "rk4_sweep": lambda k: k.rk4_sweep(t, w, wm, 5.0, 0.0, 1.0, out),
        "sturm_count": lambda k: k.sturm_count(d, e2, 1.5),
        "smallest_eigenvalue": lambda k: k.smallest_eigenvalue(d, e2, -10.0, 10.0, 1e-14),
    }


def solve_cases(steps, n_fd):
    params = ModelParams.canonical(3.0)
    dom = Interval(0.5, 2.6)
    return {
        "first_eigen": lambda: first_eigen(params, dom, steps=steps),
        "oracle_fd_eigen": lambda: oracle_fd_eigen(params, dom, n=n_fd),
    }


def best_time(func, repeat):
    return min(timeit.repeat(func, number=1, repeat=repeat))


def swap_backend(module):
    eigensolver._backend = SimpleNamespace(
        rk4_sweep=module.rk4_sweep,
        sturm_count=module.sturm_count,
        smallest_eigenvalue=module.smallest_eigenvalue,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="timing repeats, best one is kept")
    parser.add_argument("--nodes", type=int, default=20000, help="nodes for the RK4 sweep")
    parser.add_argument("--matrix", type=int, default=4000, help="size of the tridiagonal matrix")
    parser.add_argument("--steps", type=int, default=4000, help="solver steps for the full solve")
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return
    backends = {"cython": _kernels, "python": _kernels_py}
    print(f"{'case':<22}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")

    for name, call in kernel_cases(args.nodes, args.matrix).items():
        times = {b: best_time(lambda: call(k), args.repeat) for b, k in backends.items()}
        print(f"{name:<22}{times['cython']:>12.4g}{times['python']:>12.4g}{times['python'] / times['cython']:>10.1f}")

    original = eigensolver._backend
    try:
        for name, call in solve_cases(args.steps, max(args.matrix // 4, 50)).items():
            times, lams = {}, {}
            for b, k in backends.items():
                swap_backend(k)
                times[b] = best_time(call, args.repeat)
                lams[b] = call().lam
            assert math.isclose(lams["cython"], lams["python"], rel_tol=1e-12)
            print(f"{name:<22}{times['cython']:>12.4g}{times['python']:>12.4g}"
                  f"{times['python'] / times['cython']:>10.1f}")
    finally:
        eigensolver._backend = original


if __name__ == "__main__":
    main()
