import json

import pytest

from layoutlab.errors import FormatError, UnknownLabelError
from layoutlab.layout import load_layout
from layoutlab.netlist import parse_netlist
from layoutlab.placement import sym_add
from layoutlab.routing import route_net
from layoutlab.validator import (
    FunctionalityGrades,
    check_envelope,
    check_response,
    judge_validity,
    validate_script,
)


def payload(status="ok", commands=(), notes=""):
    return json.dumps({"status": status, "commands": list(commands), "notes": notes})


@pytest.fixture
def ota(ota_netlist, ota_placement_text):
    return ota_netlist, load_layout(ota_netlist, ota_placement_text)


@pytest.fixture
def routed_pair():
    n = parse_netlist("R1 na a resistor\nR2 na b resistor")
    l = load_layout(n, "grid 16 16\nR1 1 7 1 1 R0\nR2 14 7 1 1 R0")
    route_net(l, "na")
    return n, l


def test_envelope_extracts_trailing_payload():
    text = "I suggest pairing the input devices {M6, M7}.\n\n" + payload(
        commands=["symAdd M6 M7"]
    )
    env = check_envelope(text)
    assert env.status == "ok"
    assert env.commands == ["symAdd M6 M7"]
    assert "pairing" in env.prose
    assert "{" not in env.prose.split("pairing")[1] or "M6, M7" in env.prose


def test_envelope_prose_only_fails():
    with pytest.raises(FormatError, match="no payload"):
        check_envelope("just words, no structure")


def test_envelope_two_payloads_fail():
    with pytest.raises(FormatError, match="ambiguous"):
        check_envelope(payload() + "\nand also\n" + payload())


def test_envelope_broken_json_fails():
    with pytest.raises(FormatError, match="malformed"):
        check_envelope('{"status": "ok", "commands": [}')


def test_envelope_unknown_status_fails():
    with pytest.raises(FormatError, match="status"):
        check_envelope(payload(status="fine"))


def test_envelope_commands_must_be_strings():
    with pytest.raises(FormatError, match="commands"):
        check_envelope('{"status": "ok", "commands": [3]}')


def test_envelope_inside_fence():
    text = "plan:\n```json\n" + payload() + "\n```\n"
    assert check_envelope(text).status == "ok"


def test_validate_clean_script(ota):
    n, l = ota
    report = validate_script("symAdd M36 M37\ndeviceSwap M38 M39\nnetPriority VIM 10", n, l)
    assert report.syntax == [] and report.logic == []
    assert report.overall


def test_validate_arity_is_s2(ota):
    n, l = ota
    report = validate_script("deviceMove M3 100", n, l)
    assert [h.rule for h in report.syntax] == ["S2"]
    assert report.syntax[0].index == 0


def test_validate_unknown_command_is_s1(ota):
    n, l = ota
    report = validate_script("moveIt M36 1 2", n, l)
    assert [h.rule for h in report.syntax] == ["S1"]


def test_validate_unknown_refs_are_s3(ota):
    n, l = ota
    report = validate_script(
        "deviceMove M99 2 2\nnetPriority netX 5\narraySpace gX 1 1", n, l
    )
    assert [h.rule for h in report.syntax] == ["S3", "S3", "S3"]


def test_validate_ranges_are_s4(ota):
    n, l = ota
    report = validate_script(
        "deviceMove M36 99 2\nnetTopology VIM 99 99\nsymAdd M36 M37 200", n, l
    )
    assert [h.rule for h in report.syntax] == ["S4", "S4", "S4"]


def test_validate_wire_width_zero_is_s4(routed_pair):
    n, l = routed_pair
    report = validate_script("wireWidth na wire1 0", n, l)
    assert [h.rule for h in report.syntax] == ["S4"]


def test_validate_missing_wire_is_s3(routed_pair):
    n, l = routed_pair
    report = validate_script("wireWidth na wire9 2", n, l)
    assert [h.rule for h in report.syntax] == ["S3"]


def test_validate_double_sym_is_l1(ota):
    n, l = ota
    report = validate_script("symAdd M36 M37\nsymAdd M36 M38", n, l)
    assert report.syntax == []
    assert [h.rule for h in report.logic] == ["L1"]
    assert report.logic[0].index == 1


def test_validate_l1_counts_existing_pairs(ota):
    n, l = ota
    sym_add(l, "M36", "M37")
    report = validate_script("symAdd M37 M38", n, l)
    assert [h.rule for h in report.logic] == ["L1"]


def test_validate_same_pair_readd_allowed(ota):
    n, l = ota
    sym_add(l, "M36", "M37")
    report = validate_script("symAdd M37 M36", n, l)
    assert report.logic == []


def test_validate_array_space_before_add_is_l2(ota):
    n, l = ota
    report = validate_script(
        "arraySpace g1 2 2\narrayAdd g1 1 2 C2 C3", n, l
    )
    assert [h.rule for h in report.logic] == ["L2"]
    report2 = validate_script("arrayAdd g1 1 2 C2 C3\narraySpace g1 2 2", n, l)
    assert report2.logic == [] and report2.syntax == []


def test_validate_width_after_remove_is_l2(routed_pair):
    n, l = routed_pair
    report = validate_script("netRemove na\nwireWidth na wire1 2", n, l)
    assert [h.rule for h in report.logic] == ["L2"]
    healed = validate_script(
        "netRemove na\nnetReroute na\nwireWidth na wire1 2", n, l
    )
    assert healed.logic == [] and healed.syntax == []


def test_validate_wire_after_inline_reroute_is_dynamic(routed_pair):
    n, l = routed_pair
    report = validate_script("netReroute na\nwireWidth na wire7 2", n, l)
    assert report.syntax == [] and report.logic == []


def test_validate_array_shape_too_small_is_s2(ota):
    n, l = ota
    report = validate_script("arrayAdd g1 1 2 C2 C3 R1 R2", n, l)
    assert [h.rule for h in report.syntax] == ["S2"]


def test_report_doc_field_order(ota):
    n, l = ota
    doc = validate_script("symAdd M36 M37", n, l).to_doc()
    assert list(doc) == ["formatting", "validity", "syntax", "logic", "overall"]


def test_judge_validity_outcomes(ota):
    n, l = ota
    text_ok = "done\n" + payload(commands=["symAdd M36 M37"])
    report, env = check_response(text_ok, n, l, expected="valid")
    assert report.validity == "correctly_accepted"
    assert report.overall

    report, env = check_response(
        "no can do\n" + payload(status="invalid_request"), n, l, expected="invalid"
    )
    assert report.validity == "correctly_rejected"
    assert report.overall

    report, env = check_response(
        "no can do\n" + payload(status="invalid_request"), n, l, expected="valid"
    )
    assert report.validity == "wrong"
    assert not report.overall

    report, env = check_response(
        "ok\n" + payload(commands=["symAdd M99 M98"]), n, l, expected="valid"
    )
    assert report.validity == "wrong"


def test_judge_validity_rejects_bad_label(ota):
    n, l = ota
    report, env = check_response("x\n" + payload(), n, l)
    with pytest.raises(ValueError):
        judge_validity("maybe", report, env)


def test_check_response_formatting_failure(ota):
    n, l = ota
    report, env = check_response("thoughts only", n, l, expected="valid")
    assert env is None
    assert not report.formatting_ok
    assert report.validity == "wrong"


def test_grades_distribution():
    g = FunctionalityGrades()
    for label in ["A", "A", "B"]:
        g.add(label)
    dist = g.distribution()
    assert dist["A"] * 3 == 2 and dist["B"] * 3 == 1 and dist["C"] == 0
    assert sum(dist.values()) == 1


def test_grades_empty_and_bad_label():
    g = FunctionalityGrades()
    assert g.distribution() == {}
    with pytest.raises(UnknownLabelError):
        g.add("D")


def test_grades_always_sum_to_one():
    import itertools
    for combo in itertools.product("ABC", repeat=4):
        g = FunctionalityGrades()
        for label in combo:
            g.add(label)
        assert sum(g.distribution().values()) == 1
