"""Command-line entry point.

    ipub bound TRAIN.csv [TEST.csv] --loss logistic --lambda 1 --out result.json
    ipub experiment [DATA.csv] --out-dir runs/
    ipub oracle-check --instances 200
    ipub synth --out data.csv

Exit codes: 0 success, 1 validation failure, 2 property violation.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path


from .experiment import CellSpec, check_instance, make_spec, run_bound, run_cell
from .oracle import OracleBudget
from .pipeline import (PipelineConfig, PipelineError, dumps, load_csv, run_pipeline,
                       synthetic_logistic, write_csv, write_json)
from .solver import SolverConfig

EXIT_OK, EXIT_VALIDATION, EXIT_VIOLATION = 0, 1, 2

log = logging.getLogger("ipub")


def _data_args(p):
    p.add_argument("--header", action="store_true", help="first CSV row is a header")
    p.add_argument("--label-col", type=int, default=-1, help="label column index (default: last)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8, help="solver gradient tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ipub", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="prediction intervals for a test set")
    p.add_argument("train_csv")
    p.add_argument("test_csv", nargs="?", help="if omitted the training CSV is split")
    p.add_argument("--loss", choices=("squared", "hinge", "logistic"), default="logistic")
    p.add_argument("--penalty", choices=("l2", "elastic_net"), default="l2")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.5, help="quantile interval coverage")
    p.add_argument("--b", type=float, default=0.0, help="synthetic missing rate")
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--out", default="-")
    p.add_argument("--manifest", help="write the pipeline manifest JSON here")
    _data_args(p)

    p = sub.add_parser("experiment", help="IPUB vs interval Newton over a parameter grid")
    p.add_argument("dataset_csv", nargs="?", help="default: built-in synthetic logistic data")
    p.add_argument("--b", type=float, nargs="+", default=[0.01, 0.001])
    p.add_argument("--alpha", type=float, nargs="+", default=[0.5, 0.9])
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[0.1, 1.0])
    p.add_argument("--bin-width", type=float, default=0.02)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--inewton-iter", type=int, default=20)
    p.add_argument("--oracle-points", type=int, default=0)
    p.add_argument("--synthetic-n", type=int, default=2000)
    p.add_argument("--synthetic-d", type=int, default=20)
    p.add_argument("--out-dir", default="ipub-experiment")
    _data_args(p)

    p = sub.add_parser("oracle-check", help="brute-force check of the guarantee on random instances")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-corner-bits", type=int, default=10)
    p.add_argument("--interior-samples", type=int, default=50)
    p.add_argument("--zero-missing", action="store_true", help="generate instances with M = 0")
    p.add_argument("--radius-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    p = sub.add_parser("synth", help="write the synthetic logistic dataset as CSV")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return ap


def _emit(text: str, out: str):
    if out == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n")


def cmd_bound(args) -> int:
    spec = make_spec(args.loss, args.penalty, args.lam, args.kappa)
    pcfg = PipelineConfig(test_fraction=args.test_fraction, missing_rate=args.b,
                          coverage_alpha=args.alpha, seed=args.seed,
                          label_col=args.label_col, header=args.header)
    table = load_csv(args.train_csv, pcfg)
    test = load_csv(args.test_csv, pcfg) if args.test_csv else None
    pr = run_pipeline(table, pcfg, test)
    result = run_bound(spec, pr, SolverConfig(grad_tol=args.tol))
    result["pipeline"] = {"seed": pcfg.seed, "missing_rate": pcfg.missing_rate,
                          "coverage_alpha": pcfg.coverage_alpha}
    _emit(dumps(result), args.out)
    if args.manifest:
        write_json(args.manifest, pr.manifest)
    return EXIT_OK


def cmd_experiment(args) -> int:
    pcfg = PipelineConfig(seed=args.seed, label_col=args.label_col, header=args.header)
    if args.dataset_csv:
        table = load_csv(args.dataset_csv, pcfg)
    else:
        table = synthetic_logistic(args.synthetic_n, args.synthetic_d, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scfg = SolverConfig(grad_tol=args.tol)
    cells = sorted(CellSpec(b, a, lam) for b in args.b for a in args.alpha for lam in args.lam)
    summary = {"cells": [], "failures": []}
    hist_rows = []
    for cell in cells:
        try:
            res = run_cell(table, cell, args.seed, scfg, repeats=args.repeats,
                           inewton_iter=args.inewton_iter, bin_width=args.bin_width,
                           oracle_points=args.oracle_points)
        except Exception as exc:  # reported per cell; the grid continues
            log.error("cell %s failed: %s", cell.name, exc)
            summary["failures"].append({"cell": cell.name, "error": str(exc)})
            continue
        for method in ("ipub", "inewton"):
            for lo, hi, mass in res["histograms"][method]:
                hist_rows.append([cell.name, cell.b, cell.alpha, cell.lam, method, lo, hi, mass])
        records = sorted(res.pop("records"), key=lambda r: r["point_id"])
        manifest = res.pop("manifest")
        slug = cell.name.replace(",", "_").replace("=", "")
        write_json(out_dir / f"records_{slug}.json", records)
        write_json(out_dir / f"manifest_{slug}.json", manifest)
        res.pop("histograms")
        summary["cells"].append(res)
    with open(out_dir / "histograms.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "b", "alpha", "lambda", "method", "bin_lo", "bin_hi", "mass"])
        w.writerows(hist_rows)
    write_json(out_dir / "summary.json", summary)
    for c in summary["cells"]:
        print(f"{c['cell']}: median length ipub={c['median_length']['ipub']:.4g} "
              f"inewton={c['median_length']['inewton']:.4g} time ratio={c['timing']['time_ratio']:.3g}")
    return EXIT_OK if not summary["failures"] else EXIT_VALIDATION


def cmd_oracle_check(args) -> int:
    scfg = SolverConfig(grad_tol=args.tol)
    failed = []
    worst = 0.0
    for k in range(args.instances):
        seed = args.seed + k
        budget = OracleBudget(args.max_corner_bits, args.interior_samples, seed)
        out = check_instance(seed, scfg, budget, radius_scale=args.radius_scale,
                             zero_missing=args.zero_missing)
        worst = max(worst, out.max_distance_ratio)
        if out.violations:
            failed.append(out)
            print(f"FAIL seed={seed} {out.combo} M={out.M}: {out.violations[0]}"
                  + (f" (+{len(out.violations) - 1} more)" if len(out.violations) > 1 else ""))
    print(f"{args.instances - len(failed)}/{args.instances} instances pass; "
          f"worst |w''-w'|/radius = {worst:.4f}")
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_synth(args) -> int:
    write_csv(args.out, synthetic_logistic(args.n, args.d, args.seed))
    return EXIT_OK


COMMANDS = {"bound": cmd_bound, "experiment": cmd_experiment,
            "oracle-check": cmd_oracle_check, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
