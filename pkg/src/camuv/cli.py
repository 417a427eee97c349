"""Command-line entry point: simulate, discover, discover-ts, evaluate, benchmark."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .benchmark import FIELDS, pk_sweep, summarize, ts_sweep
from .discovery import DiscoveryConfig, WatchdogError, discover
from .graph import CausalGraph, DataError, Dataset, GroundTruth, PriorKnowledge, dumps, validate_graph
from .metrics import score_directed, score_lag_graph
from .simulate import (InfeasibleConfigError, ScmConfig, TsGroundTruth, TsScmConfig, config_from_json,
                       config_to_json, gen_camuv_instance, gen_ts_instance)
from .timeseries import LagGraph, discover_ts

log = logging.getLogger("camuv")

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3


class InvariantViolation(RuntimeError):
    pass


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def _write(path: str | None, text: str, outputs: list[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    outputs.append(path)


def _sibling(path: str, suffix: str) -> str:
    other = str(Path(path).with_suffix(suffix))
    return other if other != path else path + suffix


def _load_prior(path: str | None, variables) -> PriorKnowledge:
    if path is None:
        return PriorKnowledge()
    return PriorKnowledge.from_json(_read_json(path)).bind(variables)


def cmd_simulate(args, outputs: list[str]) -> dict:
    cfg = config_from_json(_read_json(args.config)) if args.config else (TsScmConfig() if args.kind == "ts" else ScmConfig())
    overrides = {k: v for k, v in (("seed", args.seed), ("n_samples", args.n)) if v is not None}
    cfg = replace(cfg, **overrides)
    cfg.validate()
    if isinstance(cfg, TsScmConfig):
        data, truth = gen_ts_instance(cfg)
    else:
        data, truth = gen_camuv_instance(cfg)
    _write(args.out, data.to_csv(), outputs)
    if args.truth:
        _write(args.truth, dumps(truth.to_json()), outputs)
    return {"config": config_to_json(cfg)}


def _emit_graph(graph, args, outputs: list[str]) -> None:
    primary = graph.to_dot() if args.format == "dot" else dumps(graph.to_json())
    _write(args.out, primary, outputs)
    if args.out:
        if args.format == "dot":
            _write(_sibling(args.out, ".json"), dumps(graph.to_json()), outputs)
        else:
            _write(_sibling(args.out, ".dot"), graph.to_dot(), outputs)


def cmd_discover(args, outputs: list[str]) -> dict:
    data = Dataset.from_csv(args.data)
    prior = _load_prior(args.prior, data.column_names)
    cfg = DiscoveryConfig(args.alpha, args.max_subset, prior)
    graph = discover(data, cfg)
    problems = validate_graph(graph)
    problems += [f"forbidden edge {a} -> {b}" for a, b in graph.directed if (a, b) in prior.forbidden]
    if problems:
        raise InvariantViolation("; ".join(problems))
    _emit_graph(graph, args, outputs)
    return {"config": {"alpha": args.alpha, "max_subset": args.max_subset, "n": data.n, "p": data.p}}


def cmd_discover_ts(args, outputs: list[str]) -> dict:
    data = Dataset.from_csv(args.data)
    if args.max_lag >= data.n:
        raise DataError(f"max lag {args.max_lag} must be smaller than the series length {data.n}")
    extra = PriorKnowledge.from_json(_read_json(args.prior)) if args.prior else PriorKnowledge()
    graph = discover_ts(data, args.max_lag, args.alpha, args.max_subset, extra)
    problems = graph.validate()
    if problems:
        raise InvariantViolation("; ".join(problems))
    for note in graph.diagnostics:
        log.info(note)
    _emit_graph(graph, args, outputs)
    return {"config": {"alpha": args.alpha, "max_subset": args.max_subset, "max_lag": args.max_lag, "n": data.n}}


def cmd_evaluate(args, outputs: list[str]) -> dict:
    truth_obj, graph_obj = _read_json(args.truth), _read_json(args.graph)
    excluded = _read_json(args.exclude).get("excluded", []) if args.exclude else []
    if "edges" in truth_obj:
        truth = TsGroundTruth.from_json(truth_obj)
        score = score_lag_graph(truth, LagGraph.from_json(graph_obj),
                                [(a, int(lag), b) for a, lag, b in excluded])
    else:
        truth = GroundTruth.from_json(truth_obj)
        score = score_directed(truth, CausalGraph.from_json(graph_obj), [tuple(e) for e in excluded])
    _write(args.out, dumps(score.to_json()), outputs)
    return {}


def cmd_benchmark(args, outputs: list[str]) -> dict:
    if args.protocol == "pk-sweep":
        sizes = args.n or [1000]
        rows = [r for n in sizes for r in pk_sweep(args.reps, n, args.seed, args.alpha, args.max_subset)]
        by = "pk_count"
    else:
        sizes = args.n or [200, 2000]
        rows = ts_sweep(args.reps, sizes, args.seed, args.alpha, args.max_subset, args.max_lag)
        by = "n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.as_list()])
    _write(args.out, buf.getvalue(), outputs)
    summary = summarize(rows, by)
    for key, vals in summary.items():
        log.warning("%s=%s precision=%.3f recall=%.3f f=%.3f (%d rows)", by, key, vals["precision"],
                    vals["recall"], vals["f_measure"], vals["count"])
    return {"config": {"protocol": args.protocol, "reps": args.reps, "sizes": sizes}, "summary": summary}


def cmd_replay(args, outputs: list[str]) -> dict:
    manifest = _read_json(args.manifest)
    argv = manifest.get("argv")
    if not isinstance(argv, list) or (argv and argv[0] == "replay"):
        raise DataError(f"{args.manifest}: no replayable argv")
    code = main(argv)
    if code:
        raise DataError(f"replayed command exited with {code}")
    return {"replayed": argv}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="camuv", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--version", action="version", version=f"camuv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output path (default: standard output)"):
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")

    s = sub.add_parser("simulate", help="generate a synthetic dataset and its ground truth")
    s.add_argument("--config", help="JSON config; {'kind': 'iid'|'ts', ...fields}")
    s.add_argument("--kind", choices=["iid", "ts"], default="iid")
    s.add_argument("--seed", type=int)
    s.add_argument("--n", type=int, help="number of samples")
    s.add_argument("--truth", help="ground-truth JSON path")
    common(s, "CSV path (default: standard output)")
    s.set_defaults(func=cmd_simulate)

    for name, func in (("discover", cmd_discover), ("discover-ts", cmd_discover_ts)):
        s = sub.add_parser(name, help="learn a causal graph from a CSV file")
        s.add_argument("data", help="CSV with a header row")
        s.add_argument("--alpha", type=float, default=0.01)
        s.add_argument("--max-subset", type=int, default=2, help="largest variable subset examined (d)")
        s.add_argument("--prior", help="JSON {'forbidden': [[cause, effect], ...]}")
        s.add_argument("--format", choices=["json", "dot"], default="json")
        if name == "discover-ts":
            s.add_argument("--max-lag", type=int, default=2)
        common(s)
        s.set_defaults(func=func)

    s = sub.add_parser("evaluate", help="score a learned graph against ground truth")
    s.add_argument("--truth", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--exclude", help="JSON {'excluded': [[cause, effect], ...]} (or [cause, lag, effect])")
    common(s)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("benchmark", help="repeated simulation sweeps")
    s.add_argument("protocol", choices=["pk-sweep", "ts-sweep"])
    s.add_argument("--reps", type=int, default=20)
    s.add_argument("--n", type=int, action="append", help="sample size (repeatable)")
    s.add_argument("--seed", type=int, default=0, help="seed of the first repetition")
    s.add_argument("--alpha", type=float, default=0.01)
    s.add_argument("--max-subset", type=int, default=2)
    s.add_argument("--max-lag", type=int, default=2)
    s.add_argument("--format", choices=["csv"], default="csv")
    common(s, "CSV path (default: standard output)")
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_replay, out=None)
    return p


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    outputs: list[str] = []
    try:
        extra = args.func(args, outputs)
    except InvariantViolation as exc:
        print(f"camuv: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except WatchdogError as exc:
        print(f"camuv: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, InfeasibleConfigError, OSError, KeyError, ValueError) as exc:
        print(f"camuv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    manifest_path = getattr(args, "manifest", None) if args.command != "replay" else None
    if manifest_path is None and args.command != "replay" and args.out:
        manifest_path = args.out + ".manifest.json"
    if manifest_path:
        manifest = {
            "command": args.command,
            "argv": argv,
            "seed": getattr(args, "seed", None),
            "inputs": [v for k in ("data", "prior", "config", "truth", "graph", "exclude")
                       if k != "truth" or args.command == "evaluate"
                       for v in [getattr(args, k, None)] if v],
            "outputs": {p: _sha256(p) for p in outputs},
            "version": __version__,
            "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "wall_clock_seconds": round(time.time() - started, 3),
            **extra,
        }
        Path(manifest_path).parent.mkdir(parents=True, exist_ok=True)
        Path(manifest_path).write_text(dumps(manifest), encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
