from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from conftest import make_dataset
from metacorr.cli import main
from metacorr.data import load_dataset, save_dataset, tie_ratio
from metacorr.measures import Measure, evaluate


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_ok(tiny_manifest, capsys):
    assert main(["validate", "--manifest", str(tiny_manifest)]) == 0
    out = capsys.readouterr().out
    assert "N=2 M=3 K=1" in out


def test_validate_shape_mismatch(tiny_manifest, capsys):
    (tiny_manifest.parent / "bleu.csv").write_text("system,d1,d2,d3,d4\ns1,1,2,3,4\ns2,1,2,3,4\n")
    assert main(["validate", "--manifest", str(tiny_manifest)]) == 1
    assert "bleu.csv" in capsys.readouterr().err


def test_validate_missing_file_is_io_error(tiny_manifest, capsys):
    (tiny_manifest.parent / "bleu.csv").unlink()
    assert main(["validate", "--manifest", str(tiny_manifest)]) == 3


def test_validate_tie_ratios(summeval_fixture, capsys):
    ds, manifest = summeval_fixture
    assert main(["validate", "--manifest", str(manifest)]) == 0
    lines = capsys.readouterr().out.splitlines()
    reported = {ln.split("\t")[0]: float(ln.split("\t")[1]) for ln in lines[3:]}
    assert reported["human"] == pytest.approx(tie_ratio(ds.human), abs=1e-6)
    for name, m in ds.metrics:
        assert reported[name] == pytest.approx(tie_ratio(m), abs=1e-6)


def test_measures_table(tiny_manifest, tmp_path):
    out = tmp_path / "out"
    tokens = "system-kendall,global-pearson"
    assert main(["measures", "--manifest", str(tiny_manifest), "--measures", tokens, "--out", str(out)]) == 0
    rows = read_csv(out / "measures.csv")
    assert rows[0] == ["metric", "system-kendall", "global-pearson"]
    ds = load_dataset(tiny_manifest)
    expected = evaluate(Measure.parse("global-pearson"), ds.metric("bleu"), ds.human).value
    assert float(rows[1][2]) == expected


def test_measures_identity_and_undef(tmp_path, capsys):
    z = np.arange(12, dtype=float).reshape(3, 4) ** 1.5
    # every row of "flat" is constant, so only the item-level measures are undefined
    flat = np.repeat([[1.0], [2.0], [3.0]], 4, axis=1)
    manifest = save_dataset(make_dataset(z, [z, flat], names=["same", "flat"]), tmp_path / "ds")
    assert main(["measures", "--manifest", str(manifest)]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert all(float(v) == pytest.approx(1.0) for v in rows[1][1:])
    undef = [tok for tok, v in zip(rows[0][1:], rows[2][1:]) if v == "undef"]
    assert undef == ["item-pearson", "item-spearman", "item-kendall"]


def test_bad_measure_token(tiny_manifest, capsys):
    assert main(["measures", "--manifest", str(tiny_manifest), "--measures", "global-tau"]) == 1
    assert "unknown measure" in capsys.readouterr().err


def test_seed_required(tiny_manifest):
    with pytest.raises(SystemExit):
        main(["dp", "--manifest", str(tiny_manifest), "--out", "x"])


def test_dp_identical_metrics_flagged(tmp_path, capsys):
    z = np.random.default_rng(0).normal(size=(4, 6))
    x = np.random.default_rng(1).normal(size=(4, 6))
    manifest = save_dataset(make_dataset(z, [x, x], names=["a", "b"]), tmp_path / "ds")
    out = tmp_path / "out"
    code = main(["dp", "--manifest", str(manifest), "--measures", "global-pearson",
                 "--seed", "1", "--iterations", "50", "--out", str(out)])
    assert code == 0
    rows = read_csv(out / "dp_summary.csv")
    assert rows[1] == ["global-pearson", "0.0", "1", "a|b"]
    assert "does not indicate significance" in capsys.readouterr().err
    run = json.loads((out / "run.json").read_text())
    assert run["seed"] == 1 and run["iterations"] == 50 and "wall_time_s" in run


def test_rc_degenerate_exit_code(tmp_path):
    z = np.random.default_rng(2).normal(size=(4, 6))
    manifest = save_dataset(make_dataset(z, [z, z]), tmp_path / "ds")
    code = main(["rc", "--manifest", str(manifest), "--measures", "global-pearson",
                 "--seed", "1", "--iterations", "5", "--out", str(tmp_path / "out")])
    assert code == 2


def test_rc_and_agreement_outputs(summeval_fixture, tmp_path):
    _, manifest = summeval_fixture
    out = tmp_path / "out"
    assert main(["rc", "--manifest", str(manifest), "--measures", "global-pearson,item-kendall",
                 "--seed", "3", "--iterations", "20", "--dump-taus", "--out", str(out)]) == 0
    rows = read_csv(out / "rc_summary.csv")
    assert [r[0] for r in rows[1:]] == ["global-pearson", "item-kendall"]
    assert len(read_csv(out / "taus_item-kendall.csv")) == 21
    assert main(["agreement", "--manifest", str(manifest), "--out", str(out)]) == 0
    rows = read_csv(out / "agreement.csv")
    assert len(rows) == 13 and len(rows[0]) == 13


def test_simulate_sweep_shape(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--seed", "5", "--sweep-gm", "2..15", "--gh", "13",
                 "--t1", "1", "--t2", "2", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 1 + 14 * 12
    params = json.loads((out / "params.json").read_text())
    assert params["G_h"] == 13 and params["T1"] == 1 and params["seed"] == 5


def test_simulate_params_file(tmp_path):
    pfile = tmp_path / "p.json"
    pfile.write_text(json.dumps({"N": 5, "M": 20, "T1": 2, "T2": 2}))
    out = tmp_path / "sim"
    assert main(["simulate", "--seed", "1", "--params", str(pfile), "--measures", "global-pearson",
                 "--out", str(out)]) == 0
    assert json.loads((out / "params.json").read_text())["N"] == 5
    pfile.write_text(json.dumps({"bogus": 1}))
    assert main(["simulate", "--seed", "1", "--params", str(pfile), "--out", str(out)]) == 1


def test_estimate(summeval_fixture, capsys):
    _, manifest = summeval_fixture
    assert main(["estimate", "--manifest", str(manifest), "--metric", "m1", "--metric", "m2"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0][:2] == ["metric", "mu_m"]
    assert [r[0] for r in rows[1:]] == ["m1", "m2"]


def test_stochastic_commands_need_out(tiny_manifest):
    assert main(["rc", "--manifest", str(tiny_manifest), "--seed", "1"]) == 1
