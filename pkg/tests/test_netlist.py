import random
from fractions import Fraction

import pytest

from layoutlab.errors import DuplicateDeviceError, NetlistSyntaxError, UnknownNetError
from layoutlab.netlist import (
    KIND_TERMINALS,
    DiffPair,
    find_differential_pairs,
    find_matched_groups,
    format_rational,
    net_terminals,
    parse_netlist,
    parse_rational,
    serialize_netlist,
)

OTA_CARD = "M34 net0130 VIM PTAIL VDD pmos W=2 L=1"


def random_netlist_text(rng: random.Random) -> str:
    """Small random but well-formed netlist for round-trip checks."""
    lines = []
    nets = [f"n{i}" for i in range(rng.randint(3, 8))] + ["VDD", "GND"]
    for i in range(rng.randint(1, 12)):
        kind = rng.choice(["nmos", "pmos", "resistor", "capacitor"])
        n_terms = len(KIND_TERMINALS[kind])
        if kind == "capacitor":
            n_terms = rng.choice([2, 3])
        terms = [rng.choice(nets) for _ in range(n_terms)]
        params = []
        if kind in ("nmos", "pmos"):
            params = [f"W={rng.randint(1, 9)}", f"L={rng.randint(1, 3)}"]
        elif rng.random() < 0.8:
            params = [f"value={rng.randint(1, 99)}/{rng.randint(1, 7)}"]
        prefix = {"nmos": "M", "pmos": "M", "resistor": "R", "capacitor": "C"}[kind]
        lines.append(" ".join([f"{prefix}{i}", *terms, kind, *params]))
    return "\n".join(lines) + "\n"


def test_parse_single_card():
    n = parse_netlist(OTA_CARD)
    dev = n.devices["M34"]
    assert dev.kind == "pmos"
    assert dev.terminals == ["net0130", "VIM", "PTAIL", "VDD"]
    assert dev.params == {"W": Fraction(2), "L": Fraction(1)}


def test_parse_empty_text():
    n = parse_netlist("")
    assert n.devices == {} and n.nets == {}


def test_comments_and_blank_lines_ignored():
    n = parse_netlist("# header\n\nR1 a b resistor value=2k  # trailing\n")
    assert list(n.devices) == ["R1"]
    assert n.devices["R1"].params["value"] == Fraction(2000)


def test_case_preserved():
    n = parse_netlist("m1 Out in GND GND nmos W=1 L=1")
    assert "m1" in n.devices
    assert n.devices["m1"].terminals[0] == "Out"


def test_duplicate_device_rejected():
    with pytest.raises(DuplicateDeviceError):
        parse_netlist("R1 a b resistor\nR1 c d resistor")


@pytest.mark.parametrize(
    "bad",
    [
        "M1 a b c d unipolar W=1",  # unknown kind
        "M1 a b nmos W=1 L=1",  # arity
        "R1 a b resistor value=abc",  # bad number
        "R1 a b resistor value=-3",  # negative param
        "justonetoken",
    ],
)
def test_malformed_cards_raise(bad):
    with pytest.raises(NetlistSyntaxError):
        parse_netlist(bad)


def test_grounded_cap_three_terminals():
    n = parse_netlist("C3 VIM net096 GND capacitor value=1p")
    assert n.devices["C3"].terminals == ["VIM", "net096", "GND"]
    assert n.devices["C3"].terminal_names() == ("p", "n", "sub")


@pytest.mark.parametrize(
    "token,expected",
    [
        ("2", Fraction(2)),
        ("1p", Fraction(1, 10**12)),
        ("2k", Fraction(2000)),
        ("3meg", Fraction(3 * 10**6)),
        ("1.5u", Fraction(3, 2 * 10**6)),
        ("7/4", Fraction(7, 4)),
    ],
)
def test_parse_rational(token, expected):
    assert parse_rational(token) == expected


def test_format_rational_round_trips():
    for v in [Fraction(2), Fraction(1, 10**12), Fraction(7, 4), Fraction(-3, 8)]:
        assert parse_rational(format_rational(v)) == v


def test_serialize_round_trip_random():
    for seed in range(20):
        rng = random.Random(1000 + seed)
        text = random_netlist_text(rng)
        n1 = parse_netlist(text)
        n2 = parse_netlist(serialize_netlist(n1))
        assert n1 == n2


def test_parse_determinism():
    rng = random.Random(7)
    text = random_netlist_text(rng)
    assert parse_netlist(text) == parse_netlist(text)


def brute_force_pairs(n):
    out = []
    names = sorted(d for d in n.devices)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            da, db = n.devices[a], n.devices[b]
            if da.kind != db.kind or da.kind not in ("nmos", "pmos"):
                continue
            if "W" not in da.params or "L" not in da.params:
                continue
            if da.params.get("W") != db.params.get("W") or da.params.get(
                "L"
            ) != db.params.get("L"):
                continue
            if da.terminals[2] != db.terminals[2]:
                continue
            out.append(DiffPair(a=a, b=b, shared_net=da.terminals[2]))
    return sorted(out, key=lambda p: (p.a, p.b))


def test_diff_pairs_ota_fixture(ota_netlist):
    pairs = {(p.a, p.b) for p in find_differential_pairs(ota_netlist)}
    assert ("M34", "M35") in pairs


def test_diff_pairs_single_transistor():
    n = parse_netlist("M1 d g s b nmos W=1 L=1")
    assert find_differential_pairs(n) == []


def test_diff_pairs_match_brute_force():
    for seed in range(30):
        rng = random.Random(2000 + seed)
        n = parse_netlist(random_netlist_text(rng))
        assert find_differential_pairs(n) == brute_force_pairs(n)


def test_diff_pairs_invariant_under_declaration_order():
    text = "M2 d g s b nmos W=3 L=1\nM1 e g s b nmos W=3 L=1\n"
    flipped = "\n".join(reversed(text.strip().splitlines()))
    assert find_differential_pairs(parse_netlist(text)) == find_differential_pairs(
        parse_netlist(flipped)
    )


def test_matched_groups_caps(ota_netlist):
    groups = find_matched_groups(ota_netlist, "capacitor")
    assert ["C2", "C3"] in groups


def test_matched_groups_distinct_values():
    n = parse_netlist("C1 a b capacitor value=1\nC2 a b capacitor value=2")
    assert find_matched_groups(n, "capacitor") == []


def test_matched_groups_match_brute_force():
    for seed in range(30):
        rng = random.Random(3000 + seed)
        n = parse_netlist(random_netlist_text(rng))
        for kind in KIND_TERMINALS:
            got = find_matched_groups(n, kind)
            buckets = {}
            for d in n.devices.values():
                if d.kind == kind:
                    buckets.setdefault(tuple(sorted(d.params.items())), []).append(
                        d.name
                    )
            want = sorted(
                (sorted(v) for v in buckets.values() if len(v) >= 2),
                key=lambda g: g[0],
            )
            assert got == want


def test_net_terminals_ota(ota_netlist):
    atts = net_terminals(ota_netlist, "PTAIL")
    assert ("M34", "source") in atts
    assert ("M35", "source") in atts


def test_net_terminals_unknown():
    with pytest.raises(UnknownNetError):
        net_terminals(parse_netlist(""), "nope")


def test_terminal_conservation():
    for seed in range(20):
        rng = random.Random(4000 + seed)
        n = parse_netlist(random_netlist_text(rng))
        total = sum(len(net_terminals(n, net)) for net in n.nets)
        assert total == n.terminal_count()
