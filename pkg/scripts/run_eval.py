#!/usr/bin/env python3
"""Run the full-scale scripted evaluation and write the metric artifacts.

Defaults to the reference corpus size (1134 valid + 116 invalid requests)
against the echo-oracle backend, which answers from the ground truth and so
must score 100% in every category; point MODEL_ENDPOINT (or FIXTURE_PATH)
at a real backend with --backend remote to measure one.
"""

import argparse
import json
import sys
from pathlib import Path

from layoutlab.evaluation import (
    CorpusSpec,
    EvalConfig,
    compute_metrics,
    oracle_backend,
    prompt_for_case,
    run_bulk,
    serialize_corpus,
    serialize_results,
    synthesize_corpus,
)
from layoutlab.layout import load_layout
from layoutlab.model_client import client_from_env
from layoutlab.netlist import parse_netlist

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--netlist", type=Path, default=ROOT / "fixtures" / "ota.ckt")
    ap.add_argument(
        "--placement", type=Path, default=ROOT / "fixtures" / "ota_placement.txt"
    )
    ap.add_argument("--n-valid", type=int, default=1134)
    ap.add_argument("--n-invalid", type=int, default=116)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--backend", choices=("echo-oracle", "remote"), default="echo-oracle")
    ap.add_argument("--out-dir", type=Path, default=ROOT / "eval_out")
    args = ap.parse_args()

    netlist = parse_netlist(args.netlist.read_text())
    layout = load_layout(netlist, args.placement.read_text())
    spec = CorpusSpec(args.n_valid, args.n_invalid, (5, 40), args.seed)
    corpus = synthesize_corpus(spec, netlist, layout)
    config = EvalConfig(netlist, layout, backend=lambda case: "", jobs=args.jobs)
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
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "corpus.jsonl").write_text(serialize_corpus(corpus))
    (args.out_dir / "results.jsonl").write_text(serialize_results(results))
    (args.out_dir / "metrics.txt").write_text(table.render())
    (args.out_dir / "metrics.json").write_text(
        json.dumps(table.to_doc(), indent=2) + "\n"
    )
    print(table.render(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
