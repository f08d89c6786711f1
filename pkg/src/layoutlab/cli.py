"""Command line front end: serve, exec, route-all, eval, metrics."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .commands import execute, parse_script
from .errors import ExecutionError, LayoutLabError
from .evaluation import (
    CorpusSpec,
    EvalConfig,
    compute_metrics,
    oracle_backend,
    parse_results,
    prompt_for_case,
    run_bulk,
    serialize_corpus,
    serialize_results,
    synthesize_corpus,
)
from .layout import load_layout, snapshot, snapshot_hash
from .model_client import client_from_env
from .netlist import parse_netlist
from .routing import route_all
from .validator import validate_script


def _load(netlist_path: str, placement_path: str):
    netlist = parse_netlist(Path(netlist_path).read_text())
    return netlist, load_layout(netlist, Path(placement_path).read_text())


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import LayoutService, create_app

    data_dir = Path(args.data_dir or os.environ.get("DATA_DIR", "data"))
    service = LayoutService(data_dir, kb_dir=args.kb_dir and Path(args.kb_dir))
    uvicorn.run(create_app(service), host=args.host, port=args.port)
    return 0


def _cmd_exec(args) -> int:
    netlist, l = _load(args.netlist, args.placement)
    text = Path(args.script).read_text()
    report = validate_script(text, netlist, l)
    if report.syntax or report.logic:
        for hit in report.syntax + report.logic:
            print(f"{hit.rule} at command {hit.index}: {hit.message}", file=sys.stderr)
        return 1
    try:
        log = execute(l, parse_script(text))
    except ExecutionError as exc:
        print(f"command {exc.index} ({exc.command}) failed: {exc.cause}", file=sys.stderr)
        return 1
    for entry in log:
        print(f"{entry.index}: {entry.command} -> {', '.join(entry.ops)}")
    print(f"final snapshot hash {snapshot_hash(l)}")
    if args.out:
        Path(args.out).write_text(snapshot(l))
    return 0


def _cmd_route_all(args) -> int:
    _, l = _load(args.netlist, args.placement)
    report = route_all(l)
    for net in report.routed:
        print(f"routed {net}")
    for net, reason in report.failed:
        print(f"failed {net}: {reason}", file=sys.stderr)
    print(f"final snapshot hash {snapshot_hash(l)}")
    if args.out:
        Path(args.out).write_text(snapshot(l))
    return 1 if report.failed else 0


def _cmd_eval(args) -> int:
    spec_doc = json.loads(Path(args.spec).read_text())
    spec = CorpusSpec(
        spec_doc["n_valid"],
        spec_doc["n_invalid"],
        (spec_doc.get("min_commands", 5), spec_doc.get("max_commands", 40)),
        spec_doc.get("seed", 0),
    )
    netlist, l = _load(args.netlist, args.placement)
    corpus = synthesize_corpus(spec, netlist, l)
    config = EvalConfig(netlist, l, backend=lambda case: "", jobs=args.jobs)
    if args.backend == "echo-oracle":
        config.backend = oracle_backend(corpus)
    else:
        client = client_from_env()
        if client is None:
            print("no model backend configured in the environment", file=sys.stderr)
            return 2
        config.backend = lambda case: client.complete(
            "generator", prompt_for_case(case, config)
        )
    results = run_bulk(corpus, config)
    table = compute_metrics(results)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "corpus.jsonl").write_text(serialize_corpus(corpus))
    (out_dir / "results.jsonl").write_text(serialize_results(results))
    (out_dir / "metrics.txt").write_text(table.render())
    (out_dir / "metrics.json").write_text(json.dumps(table.to_doc(), indent=2) + "\n")
    print(table.render(), end="")
    return 0


def _cmd_metrics(args) -> int:
    results = parse_results(Path(args.results).read_text())
    print(compute_metrics(results).render(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layoutlab")
    sub = parser.add_subparsers(dest="verb", required=True)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--kb-dir", default=None)
    serve.set_defaults(func=_cmd_serve)

    exec_p = sub.add_parser("exec", help="validate and run a command script")
    exec_p.add_argument("script")
    exec_p.add_argument("--netlist", required=True)
    exec_p.add_argument("--placement", required=True)
    exec_p.add_argument("--out", default=None, help="write the final snapshot here")
    exec_p.set_defaults(func=_cmd_exec)

    route = sub.add_parser("route-all", help="route every stale net by priority")
    route.add_argument("--netlist", required=True)
    route.add_argument("--placement", required=True)
    route.add_argument("--out", default=None)
    route.set_defaults(func=_cmd_route_all)

    ev = sub.add_parser("eval", help="synthesize a corpus and score a backend on it")
    ev.add_argument("--spec", required=True, help="corpus spec JSON file")
    ev.add_argument("--netlist", required=True)
    ev.add_argument("--placement", required=True)
    ev.add_argument("--backend", choices=("echo-oracle", "scripted", "remote"),
                    default="echo-oracle")
    ev.add_argument("--jobs", type=int, default=1)
    ev.add_argument("--out-dir", default="eval-out")
    ev.set_defaults(func=_cmd_eval)

    met = sub.add_parser("metrics", help="recompute the metric table from results")
    met.add_argument("results")
    met.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LayoutLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
