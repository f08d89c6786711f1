#!/usr/bin/env python3
"""Replay the bundled OTA dialogue end to end and print what each turn did."""

import argparse
from pathlib import Path

from layoutlab.knowledge import load_corpus
from layoutlab.layout import load_layout, snapshot_hash
from layoutlab.model_client import ScriptedClient
from layoutlab.netlist import parse_netlist
from layoutlab.pipeline import PipelineContext, run_pipeline

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixtures", type=Path, default=ROOT / "fixtures")
    ap.add_argument("--knowledge", type=Path, default=ROOT / "knowledge")
    args = ap.parse_args()

    netlist = parse_netlist((args.fixtures / "ota.ckt").read_text(), name="ota")
    ctx = PipelineContext(
        netlist=netlist,
        layout=load_layout(
            netlist, (args.fixtures / "ota_placement.txt").read_text()
        ),
        client=ScriptedClient.from_jsonl(args.fixtures / "ota_case_study.jsonl"),
        kb=load_corpus(args.knowledge),
    )
    turns = [
        t
        for t in (args.fixtures / "ota_case_study_turns.txt").read_text().splitlines()
        if t
    ]
    for i, turn in enumerate(turns, start=1):
        result = run_pipeline(ctx, turn)
        print(f"--- turn {i}: {turn}")
        print(result.reply.strip())
        for entry in result.executed:
            print(f"  executed: {entry.command}")
        print()

    pairs = ", ".join(f"({p.a},{p.b})" for p in ctx.layout.sym_pairs)
    routed = sorted(n for n, r in ctx.layout.nets.items() if r.routed)
    print(f"symmetry pairs: {pairs}")
    print(f"routed nets: {', '.join(routed)}")
    print(f"final snapshot hash: {snapshot_hash(ctx.layout)}")


if __name__ == "__main__":
    main()
