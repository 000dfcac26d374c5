"""Compare the compiled kernels with the numpy/Python fallback.

    python benchmarks/bench_kernels.py [--dataset data/ml-100k/ratings.dat] [--repeat 3]

Without a dataset, a synthetic matrix with MovieLens-1M dimensions is used.
"""

import argparse
import time

import numpy as np

from rankpref import _fallback
from rankpref.ratings import SparseRatingMatrix, load_dataset

try:
    from rankpref import _kernels
except ImportError:
    _kernels = None


def synthetic(n_users=6040, n_items=3706, nnz=1_000_209, seed=0):
    rng = np.random.default_rng(seed)
    cells = np.unique(rng.choice(n_users * n_items, size=nnz, replace=False))
    users, items = cells // n_items, cells % n_items
    quality = rng.normal(0, 1, n_items)
    r = np.clip(np.rint(3.5 + quality[items] + rng.normal(0, 1, len(cells))), 1, 5)
    return SparseRatingMatrix.from_triples(users, items, r, shape=(n_users, n_items))


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--sweeps", type=int, default=50,
                        help="fixed sweep count for the balancing timing")
    args = parser.parse_args()

    mat = load_dataset(args.dataset) if args.dataset else synthetic()
    print(f"matrix {mat.n_users} x {mat.n_items}, nnz {mat.nnz:,}")
    balance_args = (mat.row_ptr, mat.items, mat.ratings, mat.col_ptr, mat.col_users,
                    np.ascontiguousarray(mat.ratings[mat.col_entry]), 0.0, args.sweeps)
    backends = [("python", _fallback)] + ([("cython", _kernels)] if _kernels else [])

    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}")
    results = {}
    for name, impl in backends:
        t, out = best_of(lambda: impl.balance_additive(*balance_args), args.repeat)
        results.setdefault("balance", []).append((name, t, out))
        print(f"{'balance_additive x' + str(args.sweeps):<28}{name:<10}{t:>10.4f}")
    for name, impl in backends:
        t, out = best_of(lambda: impl.label_components(mat.n_users, mat.n_items, mat.users,
                                                       mat.items), args.repeat)
        results.setdefault("components", []).append((name, t, out))
        print(f"{'label_components':<28}{name:<10}{t:>10.4f}")

    if len(backends) == 2:
        (_, tp, bp), (_, tc, bc) = results["balance"]
        diff = max(np.abs(bp[0] - bc[0]).max(), np.abs(bp[1] - bc[1]).max())
        print(f"balance speedup {tp / tc:.1f}x, max parameter difference {diff:.2e}")
        (_, tp, cp), (_, tc, cc) = results["components"]
        print(f"components speedup {tp / tc:.1f}x, labels identical: "
              f"{np.array_equal(cp[0], cc[0])}")


if __name__ == "__main__":
    main()
