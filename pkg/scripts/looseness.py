"""How loose is the sphere? Oracle prediction range divided by IPUB interval length.

The bound has no tightness guarantee; this measures it on random small
instances for every loss/penalty combination.

    python scripts/looseness.py --instances 60
"""
import argparse
from collections import defaultdict

import numpy as np

from ipub.bound import fit_ipub
from ipub.experiment import COMBOS, random_instance
from ipub.model import ModelSpec
from ipub.oracle import OracleBudget, oracle_prediction_range


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=60)
    ap.add_argument("--interior-samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ratios = defaultdict(list)
    for k in range(args.instances):
        seed = args.seed + k
        spec, ts, Xt = random_instance(seed)
        if ts.index.M == 0:
            continue
        fit = fit_ipub(spec, ts)
        lin_lo, lin_hi, _, _ = fit.intervals(Xt, "identity")
        linear = ModelSpec(spec.loss, spec.penalty, link="identity", allow_link_override=True)
        orc = oracle_prediction_range(linear, ts, Xt,
                                      OracleBudget(interior_samples=args.interior_samples, seed=seed))
        width = lin_hi - lin_lo
        keep = width > 0
        ratios[(spec.loss, spec.penalty.kind)].extend(
            ((orc.empirical_max - orc.empirical_min)[keep] / width[keep]).tolist())
    print(f"{'loss':9s} {'penalty':12s} {'points':>6s} {'median':>7s} {'p90':>6s} {'max':>6s}")
    for combo in COMBOS:
        r = np.array(ratios.get(combo, []))
        if r.size:
            print(f"{combo[0]:9s} {combo[1]:12s} {r.size:6d} {np.median(r):7.3f} {np.quantile(r, 0.9):6.3f} "
                  f"{r.max():6.3f}")


if __name__ == "__main__":
    main()
