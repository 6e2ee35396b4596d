import csv
import json
import math

import numpy as np
import pytest

from ipub.bound import LINK_SLOPE, UncertaintyBall, linear_bounds
from ipub.cli import EXIT_OK, EXIT_VALIDATION, EXIT_VIOLATION, main
from ipub.pipeline import Table, synthetic_logistic, write_csv


@pytest.fixture
def data_csv(tmp_path):
    p = tmp_path / "train.csv"
    write_csv(p, synthetic_logistic(200, 5, seed=3))
    return p


def run_bound(tmp_path, data_csv, name, *extra):
    out = tmp_path / name
    assert main(["bound", str(data_csv), "--out", str(out), *extra]) == EXIT_OK
    return json.loads(out.read_text()), out.read_bytes()


def test_bound_zero_missing_width(tmp_path, data_csv):
    from ipub.pipeline import PipelineConfig, load_csv, run_pipeline
    tol, lam = 1e-8, 1.0
    res, _ = run_bound(tmp_path, data_csv, "r.json", "--b", "0", "--tol", str(tol))
    assert res["ball"]["M"] == 0
    assert res["ball"]["delta_total"] == res["ball"]["residual_gap"]
    X_test = run_pipeline(load_csv(data_csv), PipelineConfig(missing_rate=0.0)).X_test
    for rec, x in zip(res["intervals"], X_test):
        bound = LINK_SLOPE["sigmoid"] * np.linalg.norm(x) * math.sqrt(2 * tol / lam)
        assert rec["ipub_hi"] - rec["ipub_lo"] <= bound


def test_bound_deterministic_and_consistent(tmp_path, data_csv):
    a, raw_a = run_bound(tmp_path, data_csv, "a.json", "--b", "0.02", "--seed", "5", "--manifest",
                         str(tmp_path / "m1.json"))
    _, raw_b = run_bound(tmp_path, data_csv, "b.json", "--b", "0.02", "--seed", "5", "--manifest",
                         str(tmp_path / "m2.json"))
    assert raw_a == raw_b
    assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
    for rec in a["intervals"]:
        assert rec["ipub_lo"] <= rec["point_prediction"] <= rec["ipub_hi"]
        assert rec["linear_lo"] <= rec["linear_hi"]


def test_bound_intervals_recompute_exactly(tmp_path, data_csv):
    """Corollary 1 recomputation from the emitted ball reproduces every emitted interval."""
    from ipub.pipeline import PipelineConfig, load_csv, run_pipeline
    res, _ = run_bound(tmp_path, data_csv, "r.json", "--b", "0.03", "--seed", "2")
    pr = run_pipeline(load_csv(data_csv), PipelineConfig(missing_rate=0.03, seed=2))
    ball = UncertaintyBall(np.array(res["ball"]["center"]), res["ball"]["delta_total"], res["ball"]["lambda"])
    lo, hi = linear_bounds(ball, pr.X_test)
    assert [r["linear_lo"] for r in res["intervals"]] == lo.tolist()
    assert [r["linear_hi"] for r in res["intervals"]] == hi.tolist()


def test_bound_with_test_file_and_squared_loss(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.random((60, 3))
    tr = Table(X, X @ [1.0, -2.0, 0.5])
    te = Table(rng.random((7, 3)), np.zeros(7))
    write_csv(tmp_path / "tr.csv", tr)
    write_csv(tmp_path / "te.csv", te)
    out = tmp_path / "o.json"
    code = main(["bound", str(tmp_path / "tr.csv"), str(tmp_path / "te.csv"), "--loss", "squared",
                 "--penalty", "elastic_net", "--kappa", "0.01", "--lambda", "0.5", "--b", "0.05",
                 "--out", str(out)])
    assert code == EXIT_OK
    res = json.loads(out.read_text())
    assert len(res["intervals"]) == 7 and res["spec"]["link"] == "identity"


def test_bound_validation_errors(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("1,0.5\n2,0.7\n3,0.1\n4,1\n")
    assert main(["bound", str(p), "--loss", "logistic", "--out", str(tmp_path / "x.json")]) == EXIT_VALIDATION
    assert "label domain" in capsys.readouterr().err
    assert main(["bound", str(tmp_path / "missing.csv")]) == EXIT_VALIDATION
    p.write_text("1,2,1\n3\n")
    assert main(["bound", str(p)]) == EXIT_VALIDATION


def test_experiment_outputs(tmp_path, data_csv):
    out = tmp_path / "exp"
    args = ["experiment", str(data_csv), "--b", "0.01", "--alpha", "0.5", "0.9", "--lambda", "1",
            "--repeats", "1", "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    with open(out / "histograms.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {"method", "bin_lo", "bin_hi", "mass"} <= set(rows[0])
    for cell in {r["cell"] for r in rows}:
        for method in ("ipub", "inewton"):
            mass = sum(float(r["mass"]) for r in rows if r["cell"] == cell and r["method"] == method)
            assert mass == pytest.approx(1.0)
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["cells"]) == 2 and not summary["failures"]
    for f in out.glob("records_*.json"):
        for rec in json.loads(f.read_text()):
            for k in ("ipub_lo", "ipub_hi", "inewton_lo", "inewton_hi"):
                assert 0.0 <= rec[k] <= 1.0
            assert rec["ipub_lo"] <= rec["point_prediction"] <= rec["ipub_hi"]
    first = {f.name: f.read_bytes() for f in out.iterdir() if f.name != "summary.json"}
    assert main(args) == EXIT_OK
    second = {f.name: f.read_bytes() for f in out.iterdir() if f.name != "summary.json"}
    assert first == second


def test_experiment_cell_failure_reported(tmp_path):
    p = tmp_path / "tiny.csv"
    write_csv(p, synthetic_logistic(12, 2, seed=0))
    out = tmp_path / "exp"
    code = main(["experiment", str(p), "--b", "0.9", "--alpha", "0.5", "--lambda", "1",
                 "--repeats", "1", "--out-dir", str(out)])
    assert code == EXIT_VALIDATION
    assert json.loads((out / "summary.json").read_text())["failures"]


def test_oracle_check_passes_and_catches_corruption(capsys):
    assert main(["oracle-check", "--instances", "12", "--interior-samples", "10"]) == EXIT_OK
    assert main(["oracle-check", "--instances", "12", "--zero-missing", "--interior-samples", "5"]) == EXIT_OK
    capsys.readouterr()
    assert main(["oracle-check", "--instances", "20", "--interior-samples", "5", "--radius-scale", "0.5"]) \
        == EXIT_VIOLATION
    assert "containment" in capsys.readouterr().out


def test_synth(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["synth", "--n", "30", "--d", "4", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 30 and len(lines[0].split(",")) == 5
