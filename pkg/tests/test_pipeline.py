import random
from pathlib import Path

import pytest

from layoutlab.errors import (
    GroundingFailureError,
    ModelUnavailableError,
    PipelineTerminationError,
    RoutingError,
    UnparseableSolutionListError,
)
from layoutlab.knowledge import load_corpus
from layoutlab.layout import load_layout, snapshot_hash
from layoutlab.model_client import ScriptedClient
from layoutlab.netlist import parse_netlist
from layoutlab.pipeline import (
    PipelineContext,
    RequestKind,
    Solution,
    adapt,
    classify_request,
    grounding_facts,
    heuristic_kind,
    parse_solutions,
    refine,
    route_message,
    run_pipeline,
)

FIXTURES = Path(__file__).parent.parent / "fixtures"
CORPUS = Path(__file__).parent.parent / "knowledge"


def fresh_ctx(ota_netlist, ota_placement_text, client, with_kb=True):
    return PipelineContext(
        netlist=ota_netlist,
        layout=load_layout(ota_netlist, ota_placement_text),
        client=client,
        kb=load_corpus(CORPUS) if with_kb else None or _empty_kb(),
    )


def _empty_kb():
    from layoutlab.knowledge import KnowledgeStore

    return KnowledgeStore()


# ---------- message routing ----------


def test_route_single_segment():
    msgs = route_message("---To Designer---\nHere are options.")
    assert len(msgs) == 1
    assert msgs[0].recipient == "Designer"
    assert msgs[0].body == "Here are options."


def test_route_multiple_segments():
    raw = "---To Designer---\nfirst\n---To Adapter---\nsecond part\n"
    msgs = route_message(raw)
    assert [(m.recipient, m.body) for m in msgs] == [
        ("Designer", "first"),
        ("Adapter", "second part"),
    ]


def test_route_lowercase_recipient_accepted():
    assert route_message("---To designer---\nx")[0].recipient == "Designer"


def test_route_leading_text_rejected():
    with pytest.raises(RoutingError):
        route_message("preamble\n---To Designer---\nx")


def test_route_unknown_recipient_rejected():
    with pytest.raises(RoutingError):
        route_message("---To Everyone---\nx")


def test_route_missing_delimiter_rejected():
    with pytest.raises(RoutingError):
        route_message("just prose with no routing")


# ---------- request classification ----------


def test_heuristic_concrete_examples():
    for text in (
        "add symmetry between M6 and M7",
        "Move M3 to column 10 row 14",
        "swap the positions of M1 and M2",
        "set the wire width of net013 to 3",
    ):
        assert heuristic_kind(text) is RequestKind.CONCRETE, text


def test_heuristic_abstract_examples():
    for text in (
        "Enhance the matching of the differential pairs",
        "Improve the CMRR",
        "reduce parasitic resistance on the output",
        "the layout needs better noise performance",
    ):
        assert heuristic_kind(text) is RequestKind.ABSTRACT, text


def test_classify_uses_client_reply():
    c = ScriptedClient({("classifier", 0): "This request is Abstract."})
    assert classify_request("whatever", c) is RequestKind.ABSTRACT


def test_classify_first_mention_wins():
    c = ScriptedClient({("classifier", 0): "Concrete, though it sounds abstract."})
    assert classify_request("whatever", c) is RequestKind.CONCRETE


def test_classify_falls_back_without_client():
    assert classify_request("Improve the CMRR") is RequestKind.ABSTRACT


def test_classify_no_fallback_raises():
    with pytest.raises(ModelUnavailableError):
        classify_request("Improve the CMRR", client=None, allow_fallback=False)


# ---------- solution parsing and refine plumbing ----------


def test_parse_solutions_numbered():
    text = (
        "Several levers exist.\n"
        "1. Enhance symmetry with symAdd on the input pair\n"
        "2) Widen power wires using wireWidth\n"
        "prose in between is skipped\n"
        "3. Raise priority via netPriority\n"
    )
    sols = parse_solutions(text)
    assert [s.text for s in sols] == [
        "Enhance symmetry with symAdd on the input pair",
        "Widen power wires using wireWidth",
        "Raise priority via netPriority",
    ]
    assert sols[0].commands == ("symAdd",)
    assert sols[1].commands == ("wireWidth",)


def test_parse_solutions_empty_raises():
    with pytest.raises(UnparseableSolutionListError):
        parse_solutions("no list here, just prose")


def test_refine_requires_exactly_one_source():
    c = ScriptedClient({("refiner", 0): "---To Designer---\nx"})
    with pytest.raises(ValueError):
        refine(c)
    with pytest.raises(ValueError):
        refine(c, solutions=[Solution("a", ())], designer_feedback="b")


# ---------- grounding ----------


def test_grounding_differential_pairs(ota_netlist):
    facts = grounding_facts("apply symmetry to the differential pairs", ota_netlist)
    assert "M34/M35" in facts and "PTAIL" in facts
    assert "devices:" in facts and "nets:" in facts


def test_grounding_missing_family_raises():
    bare = parse_netlist("M1 outp inp vss vss nmos\n", name="bare")
    with pytest.raises(GroundingFailureError):
        grounding_facts("match the capacitor bank", bare)


def test_adapt_round_trips_scripted_requests(ota_netlist):
    rng = random.Random(20260822)
    devices = list(ota_netlist.devices)
    templates = (
        "add symmetry between {a} and {b}",
        "move {a} next to {b}",
        "swap {a} with {b}",
        "raise the routing priority of the net on {a}",
    )
    for trial in range(50):
        wanted = []
        for _ in range(rng.randint(1, 5)):
            a, b = rng.sample(devices, 2)
            wanted.append(rng.choice(templates).format(a=a, b=b))
        style = trial % 3
        if style == 0:
            body = "\n".join(f"{i + 1}. {r}" for i, r in enumerate(wanted))
        elif style == 1:
            body = "\n".join(f"- {r}" for r in wanted)
        else:
            body = "\n".join(wanted)
        raw = f"---To Generator---\n{body}" if trial % 2 == 0 else body
        client = ScriptedClient({("adapter", 0): raw})
        got = adapt("handle the differential pairs", ota_netlist, client)
        assert got == wanted, f"trial {trial}"


def test_adapt_empty_output_raises(ota_netlist):
    client = ScriptedClient({("adapter", 0): "---To Generator---\n\n"})
    with pytest.raises(GroundingFailureError):
        adapt("differential symmetry", ota_netlist, client)


# ---------- full scripted conversation ----------


def _replay_case_study(ota_netlist, ota_placement_text):
    client = ScriptedClient.from_jsonl(FIXTURES / "ota_case_study.jsonl")
    ctx = fresh_ctx(ota_netlist, ota_placement_text, client)
    turns = [
        t for t in (FIXTURES / "ota_case_study_turns.txt").read_text().splitlines() if t
    ]
    results = [run_pipeline(ctx, t) for t in turns]
    return ctx, results


def test_case_study_replay(ota_netlist, ota_placement_text):
    ctx, results = _replay_case_study(ota_netlist, ota_placement_text)
    assert len(results) == 6

    assert results[0].kind is RequestKind.ABSTRACT
    assert not results[0].executed
    assert ctx.pending_solutions is None  # consumed by the feedback turn

    # feedback turn adapted into three generated scripts
    assert len(results[1].executed) == 3

    pairs = {tuple(sorted((p.a, p.b))) for p in ctx.layout.sym_pairs}
    assert pairs == {
        ("M34", "M35"),
        ("M70", "M71"),
        ("M1", "M1"),
        ("C2", "C3"),
        ("R1", "R2"),
    }

    for net in ("PTAIL", "net0130", "net0132", "VIM", "VIP", "net096", "net092"):
        assert ctx.layout.nets[net].routed, net

    for net in ("net0130", "VIM", "net0132", "VIP"):
        assert ctx.layout.priority_of(net) == 10, net
    for net in ("net096", "net092"):
        assert ctx.layout.priority_of(net) == 8, net

    for r in results[1:]:
        assert r.report is not None and r.report.overall


def test_case_study_replay_deterministic(ota_netlist, ota_placement_text):
    hashes = []
    for _ in range(3):
        ctx, results = _replay_case_study(ota_netlist, ota_placement_text)
        trace = tuple(
            e.snapshot_hash for r in results for e in r.executed
        ) + (snapshot_hash(ctx.layout),)
        hashes.append(trace)
    assert hashes[0] == hashes[1] == hashes[2]


def test_concrete_request_skips_analysis(ota_netlist, ota_placement_text):
    client = ScriptedClient(
        {
            ("classifier", 0): "Concrete",
            ("generator", 0): (
                'Moving the device.\n\n{"status": "ok", '
                '"commands": ["deviceMove M1 5 6"], "notes": ""}'
            ),
        }
    )
    ctx = fresh_ctx(ota_netlist, ota_placement_text, client)
    result = run_pipeline(ctx, "move M1 to 5 6")
    assert result.kind is RequestKind.CONCRETE
    assert len(result.executed) == 1
    roles = {e.role for e in ctx.transcript}
    assert "analyzer" not in roles
    assert "refiner" not in roles
    assert "adapter" not in roles


def test_needs_info_status_returns_prose(ota_netlist, ota_placement_text):
    client = ScriptedClient(
        {
            ("classifier", 0): "Concrete",
            ("generator", 0): (
                'Which device should move?\n\n{"status": "needs_info", '
                '"commands": [], "notes": "ambiguous device"}'
            ),
        }
    )
    ctx = fresh_ctx(ota_netlist, ota_placement_text, client)
    result = run_pipeline(ctx, "move it left")
    assert result.executed == []
    assert "Which device" in result.reply


def test_invalid_script_not_executed(ota_netlist, ota_placement_text):
    client = ScriptedClient(
        {
            ("classifier", 0): "Concrete",
            ("generator", 0): (
                'Done.\n\n{"status": "ok", "commands": ["deviceMove M999 4 4"], '
                '"notes": ""}'
            ),
        }
    )
    ctx = fresh_ctx(ota_netlist, ota_placement_text, client)
    before = snapshot_hash(ctx.layout)
    result = run_pipeline(ctx, "move M999")
    assert result.executed == []
    assert not result.report.overall
    assert any(h.rule == "S3" for h in result.report.syntax)
    assert snapshot_hash(ctx.layout) == before


def test_unusable_model_output_reported(ota_netlist, ota_placement_text):
    client = ScriptedClient(
        {("classifier", 0): "Concrete", ("generator", 0): "no payload at all"}
    )
    ctx = fresh_ctx(ota_netlist, ota_placement_text, client)
    result = run_pipeline(ctx, "move M1 somewhere")
    assert result.report is not None
    assert not result.report.formatting_ok
    assert result.executed == []


# ---------- refinement loop bound ----------


def _loop_responses(analyzer_turns=8, refiner_turns=16):
    responses = {("classifier", 0): "Abstract"}
    for t in range(analyzer_turns):
        responses[("analyzer", t)] = (
            f"Round {t} ideas follow.\n"
            "1. Enhance symmetry via symAdd\n"
            "2. Raise net priority via netPriority\n"
        )
    for t in range(refiner_turns):
        if t % 2 == 0:
            responses[("refiner", t)] = (
                "---To Designer---\nOptions: symmetry, or priority changes."
            )
        else:
            responses[("refiner", t)] = (
                "---To Analyzer---\nThe designer wants a different direction."
            )
    return responses


def test_refine_loop_progresses_through_modifications(
    ota_netlist, ota_placement_text
):
    ctx = fresh_ctx(
        ota_netlist, ota_placement_text, ScriptedClient(_loop_responses())
    )
    run_pipeline(ctx, "Improve the noise behaviour")
    for _ in range(7):
        result = run_pipeline(ctx, "Not quite; rethink this.")
        assert result.kind is RequestKind.ABSTRACT
    assert ctx.refine_rounds == 8


def test_refine_loop_terminates_on_ninth_round(ota_netlist, ota_placement_text):
    ctx = fresh_ctx(
        ota_netlist, ota_placement_text, ScriptedClient(_loop_responses())
    )
    before = snapshot_hash(ctx.layout)
    run_pipeline(ctx, "Improve the noise behaviour")
    for _ in range(7):
        run_pipeline(ctx, "Not quite; rethink this.")
    with pytest.raises(PipelineTerminationError):
        run_pipeline(ctx, "Still not right.")
    assert snapshot_hash(ctx.layout) == before


def test_pipeline_without_client_on_abstract_raises(
    ota_netlist, ota_placement_text
):
    ctx = fresh_ctx(ota_netlist, ota_placement_text, None)
    with pytest.raises(ModelUnavailableError):
        run_pipeline(ctx, "Improve the CMRR")
