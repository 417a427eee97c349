"""Acceptance criteria, each at its stated size and tolerance.

Every test records a one-line verdict (printed in the terminal summary)
before asserting.
"""

import numpy as np
import pytest

import camuv.discovery as disc
from camuv import cli
from camuv.benchmark import pk_sweep, summarize, ts_sweep
from camuv.discovery import DiscoveryConfig, discover
from camuv.graph import Dataset, PriorKnowledge
from camuv.kernel_stats import hsic_pvalue_gamma, hsic_pvalue_permutation
from camuv.simulate import ScmConfig, TsScmConfig, gen_camuv_instance, gen_ts_instance
from camuv.timeseries import discover_ts, embed

from _gen import pair_fixture


def test_1_prior_knowledge_trend(report):
    s = summarize(pk_sweep(20, n=1000, seed=0), "pk_count")
    k0, k4 = s[0], s[4]
    ok = (k4["precision"] > k0["precision"] and k4["f_measure"] > k0["f_measure"]
          and abs(k4["recall"] - k0["recall"]) <= 0.1)
    report("1", ok, "precision {:.3f}->{:.3f}, F {:.3f}->{:.3f}, recall {:.3f}->{:.3f} (k=0 -> k=4)".format(
        k0["precision"], k4["precision"], k0["f_measure"], k4["f_measure"], k0["recall"], k4["recall"]))
    assert ok


def test_2_sample_size_trend(report):
    s = summarize(ts_sweep(20, sizes=(200, 2000), seed=0), "n")
    small, large = s[200], s[2000]
    ok = large["f_measure"] > small["f_measure"] and large["precision"] >= 0.5
    report("2", ok, "F {:.3f} (n=200) vs {:.3f} (n=2000); precision at n=2000 {:.3f}".format(
        small["f_measure"], large["f_measure"], large["precision"]))
    assert ok


def test_3_prior_knowledge_safety(report):
    violations = 0
    for seed in range(50):
        data, _ = gen_camuv_instance(ScmConfig(n_samples=300, seed=seed))
        rng = np.random.default_rng([seed, 3])
        names = data.column_names
        pairs = {(names[a], names[b]) for a, b in rng.integers(0, data.p, size=(int(rng.integers(1, 30)), 2))
                 if a != b}
        g = discover(data, DiscoveryConfig(prior=PriorKnowledge(frozenset(pairs))))
        violations += len(set(g.directed) & pairs)
    report("3", violations == 0, f"{violations} forbidden edges emitted over 50 datasets")
    assert violations == 0


def test_4_time_priority_safety(report):
    bad = 0
    for seed in range(50):
        r = 1 + seed % 2
        data, _ = gen_ts_instance(TsScmConfig(n_samples=300, max_lag=2, seed=seed))
        lg = discover_ts(data, r)
        bad += sum(not 0 <= lag <= r for _, lag, _ in lg.edges)
    report("4", bad == 0, f"{bad} out-of-range lags over 50 runs")
    assert bad == 0


def _pair_outcomes(kind):
    out = []
    for seed in range(20):
        g = discover(pair_fixture(kind, seed), DiscoveryConfig(alpha=0.01))
        d = set(g.directed)
        out.append({"fwd": ("X1", "X2") in d, "rev": ("X2", "X1") in d, "dashed": bool(g.dashed),
                    "any_directed": bool(d)})
    return out


def _rate(rows, key):
    return sum(r[key] for r in rows) / len(rows)


def test_5a_chain(report):
    rows = _pair_outcomes("chain")
    fwd, rev = _rate(rows, "fwd"), _rate(rows, "rev")
    ok = fwd >= 0.8 and rev <= 0.05
    report("5a", ok, f"correct {fwd:.0%}, reversed {rev:.0%}")
    assert ok


def test_5b_latent_confounder(report):
    rows = _pair_outcomes("confounded")
    dashed, directed = _rate(rows, "dashed"), _rate(rows, "any_directed")
    ok = dashed >= 0.7 and directed <= 0.15
    report("5b", ok, f"dashed {dashed:.0%}, directed {directed:.0%}")
    assert ok


def test_5c_latent_intermediate(report):
    rows = _pair_outcomes("ucp")
    dashed = _rate(rows, "dashed")
    report("5c", dashed >= 0.7, f"dashed {dashed:.0%}")
    assert dashed >= 0.7


def test_5d_independent(report):
    rows = _pair_outcomes("independent")
    anything = sum(r["any_directed"] or r["dashed"] for r in rows) / len(rows)
    report("5d", anything <= 0.1, f"any edge {anything:.0%}")
    assert anything <= 0.1


def test_6_gamma_matches_permutation(report):
    close = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=300), rng.normal(size=300)
        g = hsic_pvalue_gamma(x, y).p_value
        p = hsic_pvalue_permutation(x, y, 1000, seed=seed).p_value
        close += abs(g - p) <= 0.1
    report("6", close >= 95, f"{close}/100 pairs within 0.1")
    assert close >= 95


def test_7_empty_prior_equivalence(report, monkeypatch):
    pairs = []
    for seed in range(20):
        data, _ = gen_camuv_instance(ScmConfig(n_samples=300, seed=100 + seed))
        pairs.append((data, discover(data, DiscoveryConfig(prior=PriorKnowledge())).to_json()))
    # the prior-free search: no candidate is ever skipped
    monkeypatch.setattr(disc, "_blocked", lambda *a: False)
    same = sum(discover(data).to_json() == with_empty for data, with_empty in pairs)
    report("7", same == 20, f"{same}/20 datasets identical")
    assert same == 20


def test_8_embedding_arithmetic(report):
    shapes = []
    for n in (3, 10, 100, 1000):
        e, _ = embed(Dataset(("X1", "X2", "X3"), np.random.default_rng(n).normal(size=(n, 3))), 2)
        shapes.append((n, e.p, e.n))
    ok = all(p == 9 and rows == n - 2 for n, p, rows in shapes)
    report("8", ok, ", ".join(f"n={n}: {p} cols x {rows} rows" for n, p, rows in shapes))
    assert ok


def test_9_determinism(report, tmp_path, monkeypatch):
    monkeypatch.setenv("CAMUV_THREADS", "1")
    commands = {
        "simulate": lambda d: ["simulate", "--seed", "4", "--out", f"{d}/d.csv", "--truth", f"{d}/t.json"],
        "simulate-ts": lambda d: ["simulate", "--kind", "ts", "--seed", "4", "--n", "400",
                                  "--out", f"{d}/s.csv", "--truth", f"{d}/st.json"],
        "discover": lambda d: ["discover", f"{tmp_path}/a/d.csv", "--out", f"{d}/g.json"],
        "discover-ts": lambda d: ["discover-ts", f"{tmp_path}/a/s.csv", "--out", f"{d}/lg.json"],
        "benchmark": lambda d: ["benchmark", "ts-sweep", "--reps", "2", "--n", "150", "--out", f"{d}/b.csv"],
    }
    files = {}
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        for argv in commands.values():
            assert cli.main(argv(d)) == 0
        files[run] = {p.name: p.read_bytes() for p in d.iterdir() if not p.name.endswith(".manifest.json")}
    differing = sorted(n for n in files["a"] if files["a"][n] != files["b"].get(n))
    report("9", not differing and len(files["a"]) == 9,
           f"{len(files['a'])} output files compared, differing: {differing or 'none'}")
    assert not differing
