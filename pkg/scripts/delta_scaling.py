"""Wall time of compute_delta as the number of missing entries grows, at fixed n and d.

    python scripts/delta_scaling.py --n 100000 --d 50
"""
import argparse
import time

import numpy as np

from ipub.bound import compute_delta
from ipub.model import IntervalMatrix, ModelSpec, Penalty, build_missing_index
from ipub.solver import train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--Ms", type=int, nargs="+", default=[1_000, 3_000, 10_000, 30_000, 100_000, 300_000])
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    X = rng.random((args.n, args.d))
    y = rng.choice([-1.0, 1.0], args.n)
    spec = ModelSpec("logistic", Penalty.l2(1.0))
    sol = train(spec, X, y)
    Ms, times = [], []
    for M in args.Ms:
        cells = rng.choice(X.size, size=M, replace=False)
        lower, upper = X.copy(), X.copy()
        lower.flat[cells] -= 0.1
        upper.flat[cells] += 0.1
        Xi = IntervalMatrix(lower, upper)
        idx = build_missing_index(Xi)
        compute_delta(spec, sol, Xi, idx)
        reps = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            br = compute_delta(spec, sol, Xi, idx)
            reps.append(time.perf_counter() - t0)
        Ms.append(M)
        times.append(float(np.median(reps)))
        print(f"M={M:>7d}  time={times[-1] * 1e3:8.3f} ms  per entry={times[-1] / M * 1e9:6.1f} ns  "
              f"delta={br.delta_total:.4e}")
    M_arr, t_arr = np.array(Ms, float), np.array(times)
    c = M_arr @ t_arr / (M_arr @ M_arr)
    print(f"fit time = c*M: c = {c * 1e9:.1f} ns/entry, relative residual "
          f"{np.linalg.norm(t_arr - c * M_arr) / np.linalg.norm(t_arr):.3f}")


if __name__ == "__main__":
    main()
