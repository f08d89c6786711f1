"""Deterministic sanity checks over agent responses and edit scripts.

A response ends in one JSON payload carrying status and script lines; the
checks split into formatting (payload well-formed), validity (status agrees
with the request label), four syntax rules S1-S4, and two logic rules L1-L2.
Violations are data, not exceptions, so reports aggregate cleanly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .commands import (
    ArrayAdd,
    ArraySpace,
    DeviceMove,
    DeviceSwap,
    NetPriority,
    NetRemove,
    NetReroute,
    NetTopology,
    ScannedLine,
    SymAdd,
    WireSpacing,
    WireWidth,
    scan_script,
)
from .errors import (
    BadNumberError,
    CommandArityError,
    FormatError,
    UnknownCommandError,
    UnknownLabelError,
)
from .layout import Layout
from .netlist import Netlist

STATUSES = ("ok", "invalid_request", "needs_info")
GRADE_LABELS = ("A", "B", "C")


@dataclass
class ResponseEnvelope:
    prose: str
    status: str
    commands: list[str]
    notes: str


@dataclass
class RuleHit:
    rule: str
    index: int
    message: str


@dataclass
class ValidationReport:
    formatting_ok: bool = True
    formatting_reason: str = ""
    validity: str = ""
    syntax: list[RuleHit] = field(default_factory=list)
    logic: list[RuleHit] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return (
            self.formatting_ok
            and self.validity != "wrong"
            and not self.syntax
            and not self.logic
        )

    def to_doc(self) -> dict:
        return {
            "formatting": {"ok": self.formatting_ok, "reason": self.formatting_reason},
            "validity": self.validity,
            "syntax": [
                {"rule": h.rule, "index": h.index, "message": h.message}
                for h in self.syntax
            ],
            "logic": [
                {"rule": h.rule, "index": h.index, "message": h.message}
                for h in self.logic
            ],
            "overall": self.overall,
        }


def _brace_regions(text: str):
    """Balanced top-level {...} spans, JSON string escapes respected."""
    depth = 0
    start = 0
    in_str = False
    esc = False
    for i, ch in enumerate(text):
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"' and depth > 0:
            in_str = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                yield start, i + 1


def check_envelope(text: str) -> ResponseEnvelope:
    """Extract the single JSON payload; anything else fails formatting."""
    payloads = []
    saw_broken_status_block = False
    for start, end in _brace_regions(text):
        raw = text[start:end]
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            if '"status"' in raw:
                saw_broken_status_block = True
            continue
        if isinstance(doc, dict) and "status" in doc:
            payloads.append((start, end, doc))
    if len(payloads) > 1:
        raise FormatError("ambiguous payload")
    if not payloads:
        if saw_broken_status_block:
            raise FormatError("malformed payload")
        raise FormatError("no payload")
    start, end, doc = payloads[0]
    status = doc.get("status")
    if status not in STATUSES:
        raise FormatError(f"unknown status {status!r}")
    commands = doc.get("commands", [])
    if not isinstance(commands, list) or not all(isinstance(c, str) for c in commands):
        raise FormatError("commands must be a list of script lines")
    notes = doc.get("notes", "")
    if not isinstance(notes, str):
        raise FormatError("notes must be text")
    prose = (text[:start] + text[end:]).strip()
    return ResponseEnvelope(prose=prose, status=status, commands=commands, notes=notes)


def _wire_exists(l: Layout, net: str, index: int) -> bool:
    route = l.nets.get(net)
    return route is not None and any(w.index == index for w in route.wires)


def _check_wire_ref(
    hits_syntax,
    hits_logic,
    i: int,
    l: Layout,
    net: str,
    wire: int,
    removed: set,
    rerouted: set,
) -> None:
    if net in removed:
        hits_logic.append(
            RuleHit("L2", i, f"{net} was removed earlier and not rerouted")
        )
        return
    if net in rerouted:
        return
    if not _wire_exists(l, net, wire):
        hits_syntax.append(RuleHit("S3", i, f"{net} has no wire{wire}"))


def validate_script(
    source: str | list[ScannedLine],
    netlist: Netlist,
    l: Layout,
) -> ValidationReport:
    scanned = scan_script(source) if isinstance(source, str) else source
    report = ValidationReport()
    syntax, logic = report.syntax, report.logic

    groups_defined_later = {
        c.command.group
        for c in scanned
        if c.command is not None and isinstance(c.command, ArrayAdd)
    }
    known_groups = set(l.array_groups)
    sym_owner: dict[str, tuple] = {}
    for pair in l.sym_pairs:
        key = tuple(sorted((pair.a, pair.b)))
        sym_owner[pair.a] = key
        sym_owner[pair.b] = key
    removed_nets: set[str] = set()
    rerouted_nets: set[str] = set()
    width, height = l.grid.width, l.grid.height

    def known_device(i, name):
        if name not in netlist.devices:
            syntax.append(RuleHit("S3", i, f"unknown device {name}"))
            return False
        return True

    def known_net(i, name):
        if name not in netlist.nets:
            syntax.append(RuleHit("S3", i, f"unknown net {name}"))
            return False
        return True

    for i, line in enumerate(scanned):
        if line.error is not None:
            if isinstance(line.error, UnknownCommandError):
                syntax.append(RuleHit("S1", i, str(line.error)))
            elif isinstance(line.error, (CommandArityError, BadNumberError)):
                syntax.append(RuleHit("S2", i, str(line.error)))
            else:
                syntax.append(RuleHit("S2", i, str(line.error)))
            continue
        cmd = line.command
        if isinstance(cmd, DeviceMove):
            known_device(i, cmd.device)
            if not (0 <= cmd.x < width and 0 <= cmd.y < height):
                syntax.append(
                    RuleHit("S4", i, f"({cmd.x},{cmd.y}) outside {width}x{height} grid")
                )
        elif isinstance(cmd, DeviceSwap):
            known_device(i, cmd.a)
            known_device(i, cmd.b)
        elif isinstance(cmd, ArrayAdd):
            for m in cmd.members:
                known_device(i, m)
            if cmd.rows < 1 or cmd.cols < 1:
                syntax.append(RuleHit("S4", i, "array shape must be positive"))
            elif cmd.rows * cmd.cols < len(cmd.members):
                syntax.append(
                    RuleHit(
                        "S2",
                        i,
                        f"{cmd.rows}x{cmd.cols} cannot hold {len(cmd.members)} members",
                    )
                )
            known_groups.add(cmd.group)
        elif isinstance(cmd, ArraySpace):
            if cmd.group not in known_groups:
                if cmd.group in groups_defined_later:
                    logic.append(
                        RuleHit("L2", i, f"{cmd.group} is defined later in the script")
                    )
                else:
                    syntax.append(RuleHit("S3", i, f"unknown group {cmd.group}"))
            if cmd.hspace < 0 or cmd.vspace < 0:
                syntax.append(RuleHit("S4", i, "array spacing must be >= 0"))
        elif isinstance(cmd, SymAdd):
            ok = known_device(i, cmd.a) and known_device(i, cmd.b)
            if cmd.axis2 is not None and not (0 <= cmd.axis2 <= 2 * width):
                syntax.append(RuleHit("S4", i, f"axis {cmd.axis2} outside grid"))
            if ok:
                key = tuple(sorted((cmd.a, cmd.b)))
                for d in {cmd.a, cmd.b}:
                    owner = sym_owner.get(d)
                    if owner is not None and owner != key:
                        logic.append(
                            RuleHit("L1", i, f"{d} already has symmetry partner")
                        )
                        break
                else:
                    sym_owner[cmd.a] = key
                    sym_owner[cmd.b] = key
        elif isinstance(cmd, (NetRemove, NetReroute)):
            if known_net(i, cmd.net):
                if isinstance(cmd, NetRemove):
                    removed_nets.add(cmd.net)
                    rerouted_nets.discard(cmd.net)
                else:
                    removed_nets.discard(cmd.net)
                    rerouted_nets.add(cmd.net)
        elif isinstance(cmd, WireWidth):
            if known_net(i, cmd.net):
                _check_wire_ref(
                    syntax, logic, i, l, cmd.net, cmd.wire, removed_nets, rerouted_nets
                )
            if cmd.width < 1:
                syntax.append(RuleHit("S4", i, "wire width must be >= 1"))
        elif isinstance(cmd, WireSpacing):
            if known_net(i, cmd.net):
                _check_wire_ref(
                    syntax, logic, i, l, cmd.net, cmd.wire, removed_nets, rerouted_nets
                )
            if isinstance(cmd.other, str):
                known_device(i, cmd.other)
            elif known_net(i, cmd.other[0]):
                _check_wire_ref(
                    syntax,
                    logic,
                    i,
                    l,
                    cmd.other[0],
                    cmd.other[1],
                    removed_nets,
                    rerouted_nets,
                )
            if cmd.space < 0:
                syntax.append(RuleHit("S4", i, "spacing must be >= 0"))
        elif isinstance(cmd, NetPriority):
            known_net(i, cmd.net)
        elif isinstance(cmd, NetTopology):
            known_net(i, cmd.net)
            for x, y in cmd.points:
                if not (0 <= x < width and 0 <= y < height):
                    syntax.append(
                        RuleHit("S4", i, f"guide ({x},{y}) outside grid")
                    )
                    break
    return report


def judge_validity(
    expected: str, report: ValidationReport, envelope: ResponseEnvelope | None
) -> str:
    if expected not in ("valid", "invalid"):
        raise ValueError(f"expected label must be valid|invalid, got {expected!r}")
    if envelope is None:
        outcome = "wrong"
    elif expected == "invalid":
        outcome = "correctly_rejected" if envelope.status == "invalid_request" else "wrong"
    else:
        structurally_clean = (
            report.formatting_ok and not report.syntax and not report.logic
        )
        outcome = (
            "correctly_accepted"
            if envelope.status == "ok" and structurally_clean
            else "wrong"
        )
    report.validity = outcome
    return outcome


def check_response(
    text: str,
    netlist: Netlist,
    l: Layout,
    expected: str | None = None,
) -> tuple[ValidationReport, ResponseEnvelope | None]:
    """Full check of one raw agent response against its context."""
    try:
        envelope = check_envelope(text)
    except FormatError as exc:
        report = ValidationReport(formatting_ok=False, formatting_reason=exc.reason)
        if expected is not None:
            judge_validity(expected, report, None)
        return report, None
    report = validate_script("\n".join(envelope.commands), netlist, l)
    if expected is not None:
        judge_validity(expected, report, envelope)
    return report, envelope


@dataclass
class FunctionalityGrades:
    """Manual A/B/C labels; this side only stores and aggregates them."""

    labels: list[str] = field(default_factory=list)

    def add(self, label: str) -> None:
        if label not in GRADE_LABELS:
            raise UnknownLabelError(label)
        self.labels.append(label)

    def distribution(self) -> dict[str, Fraction]:
        if not self.labels:
            return {}
        total = len(self.labels)
        return {
            g: Fraction(self.labels.count(g), total) for g in GRADE_LABELS
        }
