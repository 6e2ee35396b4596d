"""IPUB vs interval Newton over the full grid b x alpha x lambda on the synthetic dataset.

Prints one line per cell with median interval lengths, the speed-up of IPUB
over INewton and the oracle spot check; --out also saves the per-cell
summaries as JSON.

    python scripts/compare_methods.py --oracle-points 10
"""
import argparse

from ipub.experiment import CellSpec, run_cell
from ipub.pipeline import dumps, synthetic_logistic
from ipub.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--oracle-points", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    table = synthetic_logistic(args.n, args.d, args.seed)
    rows = []
    print(f"{'cell':32s} {'M':>5s} {'ipub med':>9s} {'inewton med':>11s} {'speed-up':>9s}  inewton state   oracle")
    for b in (0.01, 0.001):
        for alpha in (0.5, 0.9):
            for lam in (0.1, 1.0):
                cell = CellSpec(b, alpha, lam)
                res = run_cell(table, cell, args.seed, SolverConfig(), repeats=args.repeats,
                               oracle_points=args.oracle_points)
                med = res["median_length"]
                t = res["timing"]
                st = res["inewton"]
                state = f"it={st['iterations']} {'ok' if st['verified'] else 'unverified'}" \
                        f"{'' if st['contracted'] else ' stalled'}"
                orc = res["oracle"]
                orc_txt = f"{orc['ipub_contains']}/{len(orc['points'])}" if orc else "-"
                print(f"{cell.name:32s} {res['M']:5d} {med['ipub']:9.4f} {med['inewton']:11.4f} "
                      f"{t['inewton_seconds'] / t['ipub_seconds']:8.0f}x  {state:15s} {orc_txt}")
                res.pop("records"), res.pop("manifest")
                rows.append(res)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(rows) + "\n")


if __name__ == "__main__":
    main()
