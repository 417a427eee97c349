import csv
import json
import subprocess
import sys

import numpy as np
import pytest

import camuv.cli as cli
from camuv.graph import CausalGraph, Dataset

from _gen import pair_fixture


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_csv(path, data):
    path.write_text(data.to_csv(), encoding="utf-8")
    return path


def test_simulate_default(tmp_path):
    assert run("simulate", "--seed", 7, "--out", tmp_path / "d.csv", "--truth", tmp_path / "t.json") == 0
    header = (tmp_path / "d.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 10
    truth = json.loads((tmp_path / "t.json").read_text())
    assert len(truth["directed"]) == 10
    manifest = json.loads((tmp_path / "d.csv.manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["command"] == "simulate"
    assert set(manifest["outputs"]) == {str(tmp_path / "d.csv"), str(tmp_path / "t.json")}
    assert manifest["config"]["n_direct_pairs"] == 10


def test_simulate_ts(tmp_path):
    assert run("simulate", "--kind", "ts", "--seed", 7, "--out", tmp_path / "d.csv") == 0
    rows = list(csv.reader((tmp_path / "d.csv").open()))
    assert len(rows[0]) == 3 and len(rows) == 1001


def test_simulate_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        run("simulate", "--seed", 3, "--n", 200, "--out", tmp_path / f"{name}.csv",
            "--truth", tmp_path / f"{name}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "iid", "n_observed": 4, "n_confounded_pairs": 1,
                               "n_intermediate_pairs": 1, "n_direct_pairs": 2, "n_samples": 30}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "d.csv") == 0
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 31


def test_simulate_infeasible_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "iid", "n_observed": 2, "n_direct_pairs": 5}))
    assert run("simulate", "--config", cfg) == 2
    assert "error" in capsys.readouterr().err


def test_discover_chain(tmp_path):
    single = 0
    for seed in range(5):
        data = write_csv(tmp_path / f"c{seed}.csv", pair_fixture("chain", seed))
        out = tmp_path / f"g{seed}.json"
        assert run("discover", data, "--out", out) == 0
        g = json.loads(out.read_text())
        single += g["directed"] == [["X1", "X2"]]
        assert (tmp_path / f"g{seed}.dot").read_text().startswith("digraph")
    assert single >= 3


def test_discover_with_prior(tmp_path):
    data = write_csv(tmp_path / "c.csv", pair_fixture("chain", 0))
    prior = tmp_path / "pk.json"
    prior.write_text(json.dumps({"forbidden": [["X1", "X2"]]}))
    assert run("discover", data, "--prior", prior, "--out", tmp_path / "g.json") == 0
    assert ["X1", "X2"] not in json.loads((tmp_path / "g.json").read_text())["directed"]


def test_discover_unknown_prior_variable(tmp_path):
    data = write_csv(tmp_path / "c.csv", pair_fixture("chain", 0))
    prior = tmp_path / "pk.json"
    prior.write_text(json.dumps({"forbidden": [["X1", "Q"]]}))
    assert run("discover", data, "--prior", prior) == 2


@pytest.mark.parametrize("text", ["", "a,b\n1,zz\n"])
def test_discover_bad_csv(tmp_path, text, capsys):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    assert run("discover", path) == 2
    assert capsys.readouterr().out == ""


def test_discover_missing_file(tmp_path):
    assert run("discover", tmp_path / "nope.csv") == 2


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    data = write_csv(tmp_path / "c.csv", pair_fixture("chain", 0))
    bad = CausalGraph(("X1", "X2"), {"X1": frozenset({"X1"})})
    monkeypatch.setattr(cli, "discover", lambda *a, **k: bad)
    assert run("discover", data) == 3


def test_discover_ts(tmp_path):
    assert run("simulate", "--kind", "ts", "--seed", 1, "--n", 300, "--out", tmp_path / "s.csv") == 0
    assert run("discover-ts", tmp_path / "s.csv", "--out", tmp_path / "lg.json") == 0
    lg = json.loads((tmp_path / "lg.json").read_text())
    assert lg["max_lag"] == 2
    assert all(0 <= e["lag"] <= 2 for e in lg["edges"])


def test_discover_ts_lag_too_large(tmp_path):
    path = write_csv(tmp_path / "s.csv", Dataset(("A", "B"), np.random.default_rng(0).normal(size=(5, 2))))
    assert run("discover-ts", path, "--max-lag", 5) == 2


def test_discover_ts_five_columns_lag_one(tmp_path):
    # stand-in for a table of daily returns with named columns
    rng = np.random.default_rng(2)
    x = rng.standard_t(4, size=(400, 5)) * 0.01
    x[1:, 1] += 0.5 * np.tanh(50 * x[:-1, 0]) * 0.01
    names = ("AUD", "CAD", "EUR", "GBP", "JPY")
    path = write_csv(tmp_path / "fx.csv", Dataset(names, x))
    assert run("discover-ts", path, "--max-lag", 1, "--format", "dot", "--out", tmp_path / "fx.dot") == 0
    dot = (tmp_path / "fx.dot").read_text()
    assert '"AUD(t-1)"' in dot and "cluster_lag1" in dot
    assert json.loads((tmp_path / "fx.json").read_text())["variables"] == list(names)


def test_evaluate(tmp_path):
    run("simulate", "--seed", 2, "--n", 300, "--out", tmp_path / "d.csv", "--truth", tmp_path / "t.json")
    run("discover", tmp_path / "d.csv", "--out", tmp_path / "g.json")
    assert run("evaluate", "--truth", tmp_path / "t.json", "--graph", tmp_path / "g.json",
               "--out", tmp_path / "s.json") == 0
    s = json.loads((tmp_path / "s.json").read_text())
    assert s["tp"] + s["fn"] == 10
    excl = tmp_path / "x.json"
    excl.write_text(json.dumps({"excluded": json.loads((tmp_path / "t.json").read_text())["directed"][:4]}))
    run("evaluate", "--truth", tmp_path / "t.json", "--graph", tmp_path / "g.json", "--exclude", excl,
        "--out", tmp_path / "s2.json")
    s2 = json.loads((tmp_path / "s2.json").read_text())
    assert s2["tp"] + s2["fn"] == 6


def test_evaluate_lag_graph(tmp_path):
    run("simulate", "--kind", "ts", "--seed", 2, "--n", 200, "--out", tmp_path / "d.csv", "--truth", tmp_path / "t.json")
    run("discover-ts", tmp_path / "d.csv", "--out", tmp_path / "g.json")
    assert run("evaluate", "--truth", tmp_path / "t.json", "--graph", tmp_path / "g.json",
               "--out", tmp_path / "s.json") == 0
    s = json.loads((tmp_path / "s.json").read_text())
    assert s["tp"] + s["fn"] == 5


def test_benchmark_pk_sweep_rows(tmp_path, monkeypatch):
    monkeypatch.setenv("CAMUV_THREADS", "1")
    assert run("benchmark", "pk-sweep", "--reps", 2, "--n", 150, "--out", tmp_path / "b.csv") == 0
    rows = list(csv.DictReader((tmp_path / "b.csv").open()))
    assert len(rows) == 10
    assert [int(r["pk_count"]) for r in rows[:5]] == [0, 1, 2, 3, 4]


def test_benchmark_ts_sweep_rows(tmp_path, monkeypatch):
    monkeypatch.setenv("CAMUV_THREADS", "1")
    assert run("benchmark", "ts-sweep", "--reps", 2, "--n", 100, "--n", 120, "--out", tmp_path / "b.csv") == 0
    rows = list(csv.DictReader((tmp_path / "b.csv").open()))
    assert len(rows) == 4
    manifest = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    assert set(manifest["summary"]) == {"100", "120"}


def test_manifest_replay_reproduces_outputs(tmp_path):
    run("simulate", "--seed", 5, "--n", 300, "--out", tmp_path / "d.csv")
    run("discover", tmp_path / "d.csv", "--out", tmp_path / "g.json")
    first = {p: (tmp_path / p).read_bytes() for p in ("g.json", "g.dot")}
    manifest = json.loads((tmp_path / "g.json.manifest.json").read_text())
    (tmp_path / "g.json").unlink()
    (tmp_path / "g.dot").unlink()
    assert run("replay", tmp_path / "g.json.manifest.json") == 0
    assert {p: (tmp_path / p).read_bytes() for p in first} == first
    import hashlib
    assert manifest["outputs"][str(tmp_path / "g.json")] == hashlib.sha256(first["g.json"]).hexdigest()


def test_replay_bad_manifest(tmp_path):
    m = tmp_path / "m.json"
    m.write_text("{}")
    assert run("replay", m) == 2


def test_stdout_output(tmp_path, capsys):
    data = write_csv(tmp_path / "c.csv", pair_fixture("independent", 0, n=200))
    assert run("discover", data, "--format", "dot") == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["discover"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "camuv", "simulate", "--n", "20", "--seed", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 21
