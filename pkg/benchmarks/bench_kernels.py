"""Time each hot kernel under the numpy and compiled backends.

    python3 benchmarks/bench_kernels.py [--n 5] [--rows 20000] [--repeat 5]

Prints one row per kernel with the best-of-``repeat`` wall time for each
backend and the speedup. Outputs of the two backends are compared before
timing so a mismatch is reported instead of a misleading number.
"""

import argparse
import sys
import timeit

import numpy as np

from plrank import _pure

try:
    from plrank import _kernels
except ImportError:
    _kernels = None


def make_inputs(n, rows, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n))
    R = np.argsort(rng.random((rows, n)), axis=1).astype(np.int64)
    R2 = np.argsort(rng.random((rows, n)), axis=1).astype(np.int64)
    scores = rng.normal(size=(rows, n))
    U = rng.random((rows, n - 1))
    return {
        "pl_loglik": (w, R),
        "pl_scores_loss_grad": (scores, R),
        "mm_denominators": (w, R),
        "sample_rankings": (w, U),
        "average_overlap_batch": (R, R2),
    }


def agree(a, b):
    if isinstance(a, tuple):
        return all(agree(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=5, help="classes per ranking")
    p.add_argument("--rows", type=int, default=20000, help="rankings per call")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if _kernels is None:
        print("compiled backend not built; only numpy timings shown", file=sys.stderr)
    inputs = make_inputs(args.n, args.rows, args.seed)

    print(f"n={args.n} rows={args.rows} best of {args.repeat}")
    print(f"{'kernel':<24}{'numpy ms':>11}{'cython ms':>11}{'speedup':>9}")
    for name, call_args in inputs.items():
        py_fn = getattr(_pure, name)
        t_py = min(timeit.repeat(lambda: py_fn(*call_args), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<24}{t_py * 1e3:>11.3f}{'-':>11}{'-':>9}")
            continue
        cy_fn = getattr(_kernels, name)
        if not agree(py_fn(*call_args), cy_fn(*call_args)):
            print(f"{name:<24}  backends disagree", file=sys.stderr)
            return 1
        t_cy = min(timeit.repeat(lambda: cy_fn(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<24}{t_py * 1e3:>11.3f}{t_cy * 1e3:>11.3f}{t_py / t_cy:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
