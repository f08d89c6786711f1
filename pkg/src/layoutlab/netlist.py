"""Netlist parsing and structural queries over circuit connectivity.

The `.ckt` format is one device card per line:

    <name> <net> <net> ... <kind> [key=value ...]

Kinds and terminal orders:

    nmos/pmos   drain gate source bulk
    resistor    p n
    capacitor   p n [sub]      (optional third terminal for a grounded cap)

`#` starts a comment running to end of line.  Names are case-preserving.
Parameter values are exact rationals; SI suffixes (f p n u m k meg g) and
`num/den` fractions are accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DuplicateDeviceError, NetlistSyntaxError, UnknownNetError

KIND_TERMINALS = {
    "nmos": ("drain", "gate", "source", "bulk"),
    "pmos": ("drain", "gate", "source", "bulk"),
    "resistor": ("p", "n"),
    "capacitor": ("p", "n", "sub"),
}

# Kinds whose third terminal is optional.
_OPTIONAL_THIRD = {"capacitor"}

_SI_SUFFIXES = {
    "f": Fraction(1, 10**15),
    "p": Fraction(1, 10**12),
    "n": Fraction(1, 10**9),
    "u": Fraction(1, 10**6),
    "m": Fraction(1, 10**3),
    "k": Fraction(10**3),
    "meg": Fraction(10**6),
    "g": Fraction(10**9),
}

_NUMBER_RE = re.compile(r"^(-?\d+(?:\.\d+)?)([a-zA-Z]*)$")


def parse_rational(token: str) -> Fraction:
    """Parse an exact rational: plain/decimal number, SI suffix, or num/den."""
    if "/" in token:
        num, _, den = token.partition("/")
        return Fraction(int(num), int(den))
    m = _NUMBER_RE.match(token)
    if not m:
        raise ValueError(f"not a number: {token!r}")
    value = Fraction(m.group(1))
    suffix = m.group(2).lower()
    if suffix:
        if suffix not in _SI_SUFFIXES:
            raise ValueError(f"unknown SI suffix {suffix!r}")
        value *= _SI_SUFFIXES[suffix]
    return value


def format_rational(value: Fraction) -> str:
    """Render a rational so that parse_rational reads it back exactly."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass
class Device:
    name: str
    kind: str
    terminals: list[str]  # net names, in KIND_TERMINALS order
    params: dict[str, Fraction] = field(default_factory=dict)

    def terminal_names(self) -> tuple[str, ...]:
        return KIND_TERMINALS[self.kind][: len(self.terminals)]

    @property
    def source_net(self) -> str | None:
        if self.kind in ("nmos", "pmos"):
            return self.terminals[2]
        return None


@dataclass(frozen=True)
class DiffPair:
    a: str
    b: str
    shared_net: str


@dataclass
class Netlist:
    name: str
    devices: dict[str, Device] = field(default_factory=dict)
    nets: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def terminal_count(self) -> int:
        return sum(len(d.terminals) for d in self.devices.values())


def parse_netlist(text: str, name: str = "netlist") -> Netlist:
    """Parse `.ckt` text into a Netlist; raises on any malformed card."""
    netlist = Netlist(name=name)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        params: dict[str, Fraction] = {}
        while tokens and "=" in tokens[-1]:
            key, _, val = tokens.pop().partition("=")
            if not key:
                raise NetlistSyntaxError(lineno, "parameter with empty key")
            try:
                params[key] = parse_rational(val)
            except ValueError as exc:
                raise NetlistSyntaxError(lineno, str(exc)) from exc
        if len(tokens) < 2:
            raise NetlistSyntaxError(lineno, "expected <name> <net...> <kind>")
        kind = tokens[-1]
        if kind not in KIND_TERMINALS:
            raise NetlistSyntaxError(lineno, f"unknown device kind {kind!r}")
        dev_name, nets = tokens[0], tokens[1:-1]
        expected = KIND_TERMINALS[kind]
        low = len(expected) - 1 if kind in _OPTIONAL_THIRD else len(expected)
        if not (low <= len(nets) <= len(expected)):
            raise NetlistSyntaxError(
                lineno, f"{kind} takes {low}-{len(expected)} terminals, got {len(nets)}"
            )
        if any(v < 0 for v in params.values()):
            raise NetlistSyntaxError(lineno, "negative parameter value")
        if dev_name in netlist.devices:
            raise DuplicateDeviceError(dev_name)
        device = Device(name=dev_name, kind=kind, terminals=list(nets), params=params)
        netlist.devices[dev_name] = device
        for term_name, net in zip(device.terminal_names(), nets):
            netlist.nets.setdefault(net, []).append((dev_name, term_name))
    return netlist


def serialize_netlist(n: Netlist) -> str:
    """Canonical `.ckt` text; parse_netlist(serialize_netlist(n)) == n structurally."""
    lines = []
    for dev in n.devices.values():
        parts = [dev.name, *dev.terminals, dev.kind]
        parts += [f"{k}={format_rational(v)}" for k, v in sorted(dev.params.items())]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def find_differential_pairs(n: Netlist) -> list[DiffPair]:
    """All unordered MOS pairs with matching kind, W, L and a common source net."""
    pairs = []
    mos = [d for d in n.devices.values() if d.kind in ("nmos", "pmos")]
    mos.sort(key=lambda d: d.name)
    for i, da in enumerate(mos):
        for db in mos[i + 1 :]:
            if da.kind != db.kind:
                continue
            if da.source_net != db.source_net:
                continue
            if "W" not in da.params or "L" not in da.params:
                continue
            if da.params.get("W") != db.params.get("W"):
                continue
            if da.params.get("L") != db.params.get("L"):
                continue
            pairs.append(DiffPair(a=da.name, b=db.name, shared_net=da.source_net))
    pairs.sort(key=lambda p: (p.a, p.b))
    return pairs


def find_matched_groups(n: Netlist, kind: str) -> list[list[str]]:
    """Partition devices of `kind` into groups with identical params (size >= 2)."""
    buckets: dict[tuple, list[str]] = {}
    for dev in n.devices.values():
        if dev.kind != kind:
            continue
        key = tuple(sorted(dev.params.items()))
        buckets.setdefault(key, []).append(dev.name)
    groups = [sorted(names) for names in buckets.values() if len(names) >= 2]
    groups.sort(key=lambda g: g[0])
    return groups


def net_terminals(n: Netlist, net: str) -> list[tuple[str, str]]:
    """All (device, terminal) attachments of `net`, by device name then terminal index."""
    if net not in n.nets:
        raise UnknownNetError(net)

    def sort_key(att: tuple[str, str]):
        dev_name, term = att
        return (dev_name, KIND_TERMINALS[n.devices[dev_name].kind].index(term))

    return sorted(n.nets[net], key=sort_key)
