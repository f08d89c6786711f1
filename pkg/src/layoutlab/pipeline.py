"""Dialogue orchestration: classify, analyze, refine, adapt, generate, run.

A designer turn either goes straight to command generation (concrete) or
through the analyze/refine loop (abstract) until the designer settles on a
solution.  All model traffic goes through one client; with a scripted
client the whole flow is deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .commands import COMMAND_NAMES, LogEntry, execute, parse_script
from .errors import (
    ExecutionError,
    FormatError,
    GroundingFailureError,
    LayoutLabError,
    ModelUnavailableError,
    PipelineTerminationError,
    RoutingError,
    UnparseableSolutionListError,
)
from .knowledge import KnowledgeStore, retrieve
from .layout import Layout, snapshot_hash
from .model_client import ModelClient
from .netlist import (
    Netlist,
    find_differential_pairs,
    find_matched_groups,
    serialize_netlist,
)
from .prompts import assemble_prompt, render_prompt
from .validator import ResponseEnvelope, ValidationReport, check_envelope, validate_script


class RequestKind(Enum):
    CONCRETE = "concrete"
    ABSTRACT = "abstract"


RECIPIENTS = ("Designer", "Classifier", "Analyzer", "Refiner", "Adapter", "Generator")

_DELIMITER_RE = re.compile(r"^---To ([A-Za-z]+)---[ \t]*$", re.MULTILINE)

# goal/performance vocabulary marks a request abstract
_ABSTRACT_WORDS = (
    "improve", "enhance", "optimize", "optimise", "reduce", "minimize",
    "minimise", "better", "matching", "mismatch", "cmrr", "psrr", "noise",
    "parasitic", "parasitics", "bandwidth", "gain", "offset", "crosstalk",
    "cross-talk", "performance", "robust", "yield", "tighter", "cleaner",
)

_OBJECT_RE = re.compile(r"\b(?:[MCRQ]\d+|net\w+|wire\d+|g\d+)\b")

_CONCRETE_WORDS = tuple(c.lower() for c in COMMAND_NAMES) + (
    "move", "swap", "symmetry", "symmetric", "array", "width", "spacing",
    "priority", "reroute", "remove", "route", "guide", "topology", "wire",
)


@dataclass(frozen=True)
class AgentMessage:
    sender: str
    recipient: str
    body: str


@dataclass(frozen=True)
class Solution:
    text: str
    commands: tuple[str, ...]


@dataclass
class TranscriptEntry:
    role: str
    text: str
    meta: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"role": self.role, "text": self.text, "meta": self.meta}


@dataclass
class TurnResult:
    kind: RequestKind | None
    reply: str
    executed: list[LogEntry] = field(default_factory=list)
    report: ValidationReport | None = None
    envelope: ResponseEnvelope | None = None


@dataclass
class PipelineContext:
    netlist: Netlist
    layout: Layout
    client: ModelClient | None = None
    kb: KnowledgeStore = field(default_factory=KnowledgeStore)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    pending_solutions: list[Solution] | None = None
    refine_rounds: int = 0
    max_refine_rounds: int = 8
    retrieval_k: int = 3

    def say(self, role: str, text: str, **meta) -> None:
        self.transcript.append(TranscriptEntry(role, text, dict(meta)))


def route_message(raw: str, sender: str = "refiner") -> list[AgentMessage]:
    matches = list(_DELIMITER_RE.finditer(raw))
    if not matches:
        raise RoutingError("no recipient delimiter in output")
    if raw[: matches[0].start()].strip():
        raise RoutingError("text before the first recipient delimiter")
    out = []
    for i, m in enumerate(matches):
        recipient = m.group(1).capitalize()
        if recipient not in RECIPIENTS:
            raise RoutingError(f"unknown recipient {m.group(1)!r}")
        end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
        out.append(AgentMessage(sender, recipient, raw[m.end():end].strip()))
    return out


def heuristic_kind(text: str) -> RequestKind:
    lowered = text.lower()
    if any(w in lowered for w in _ABSTRACT_WORDS):
        return RequestKind.ABSTRACT
    if _OBJECT_RE.search(text) or any(w in lowered for w in _CONCRETE_WORDS):
        return RequestKind.CONCRETE
    return RequestKind.ABSTRACT


def classify_request(
    text: str,
    client: ModelClient | None = None,
    allow_fallback: bool = True,
) -> RequestKind:
    if client is not None:
        response = client.complete(
            "classifier",
            render_prompt(assemble_prompt("classifier", {"request": text})),
        )
        lowered = response.lower()
        first_abstract = lowered.find("abstract")
        first_concrete = lowered.find("concrete")
        if first_abstract >= 0 and (first_concrete < 0 or first_abstract < first_concrete):
            return RequestKind.ABSTRACT
        if first_concrete >= 0:
            return RequestKind.CONCRETE
    if not allow_fallback:
        raise ModelUnavailableError("no classifier backend and fallback disabled")
    return heuristic_kind(text)


_ENUM_RE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")


def parse_solutions(text: str) -> list[Solution]:
    items = []
    for line in text.splitlines():
        m = _ENUM_RE.match(line)
        if m is None:
            continue
        body = m.group(1)
        names = tuple(c for c in COMMAND_NAMES if c in body)
        items.append(Solution(text=body, commands=names))
    if not items:
        raise UnparseableSolutionListError("no enumerated solutions in output")
    return items


def analyze(
    request: str, kb: KnowledgeStore, client: ModelClient | None, k: int = 3
) -> list[Solution]:
    if client is None:
        raise ModelUnavailableError("analysis needs a model backend")
    chunks = retrieve(request, kb, k) if len(kb) else []
    prompt = assemble_prompt("analyzer", {"request": request}, knowledge=chunks)
    return parse_solutions(client.complete("analyzer", render_prompt(prompt)))


def refine(
    client: ModelClient | None,
    solutions: list[Solution] | None = None,
    designer_feedback: str | None = None,
) -> list[AgentMessage]:
    if (solutions is None) == (designer_feedback is None):
        raise ValueError("refine takes exactly one input source")
    if client is None:
        raise ModelUnavailableError("refinement needs a model backend")
    slots = {
        "high_level_solutions": (
            "\n".join(f"{i + 1}. {s.text}" for i, s in enumerate(solutions))
            if solutions
            else "n/a"
        ),
        "designer_feedback": designer_feedback or "n/a",
    }
    raw = client.complete("refiner", render_prompt(assemble_prompt("refiner", slots)))
    return route_message(raw, sender="refiner")


_FAMILY_QUERIES = (
    ("differential", "differential pairs"),
    ("diff pair", "differential pairs"),
    ("capacitor", "matched capacitors"),
    ("resistor", "matched resistors"),
)


def grounding_facts(solution_text: str, netlist: Netlist) -> str:
    """Netlist queries driven by what the solution mentions; misses raise."""
    lowered = solution_text.lower()
    facts = []
    wants_pairs = "differential" in lowered or "diff pair" in lowered
    if wants_pairs:
        pairs = find_differential_pairs(netlist)
        if not pairs:
            raise GroundingFailureError("solution needs differential pairs; none found")
        facts.append(
            "differential pairs: "
            + "; ".join(f"{p.a}/{p.b} sharing {p.shared_net}" for p in pairs)
        )
    for keyword, label in (("capacitor", "capacitor"), ("resistor", "resistor")):
        if keyword in lowered:
            groups = find_matched_groups(netlist, kind=keyword)
            if not groups:
                raise GroundingFailureError(
                    f"solution needs matched {keyword}s; none found"
                )
            facts.append(
                f"matched {keyword}s: "
                + "; ".join("/".join(g) for g in groups)
            )
    facts.append("devices: " + ", ".join(netlist.devices))
    facts.append("nets: " + ", ".join(sorted(netlist.nets)))
    return "\n".join(facts)


_BULLET_RE = re.compile(r"^\s*(?:\d+[.)]|[-*])\s+")


def adapt(
    solution_text: str, netlist: Netlist, client: ModelClient | None
) -> list[str]:
    if client is None:
        raise ModelUnavailableError("adaptation needs a model backend")
    facts = grounding_facts(solution_text, netlist)
    prompt = assemble_prompt(
        "adapter", {"solution": solution_text, "netlist_facts": facts}
    )
    raw = client.complete("adapter", render_prompt(prompt))
    if _DELIMITER_RE.search(raw):
        body = "\n".join(
            m.body for m in route_message(raw, sender="adapter")
            if m.recipient == "Generator"
        )
    else:
        body = raw
    requests = []
    for line in body.splitlines():
        stripped = _BULLET_RE.sub("", line).strip()
        if stripped:
            requests.append(stripped)
    if not requests:
        raise GroundingFailureError("adapter produced no concrete requests")
    return requests


def _context_text(netlist: Netlist, l: Layout) -> str:
    text = serialize_netlist(netlist)
    if text.count("\n") > 200:
        text = "(netlist stored in the knowledge base)"
    routed = sorted(n for n, r in l.nets.items() if r.routed)
    return (
        f"grid {l.grid.width} {l.grid.height}\n"
        f"routed nets: {', '.join(routed) if routed else 'none'}\n"
        f"netlist:\n{text}"
    )


def generate_commands(
    request: str,
    netlist: Netlist,
    l: Layout,
    client: ModelClient | None,
) -> tuple[str, ResponseEnvelope]:
    if client is None:
        raise ModelUnavailableError("command generation needs a model backend")
    prompt = assemble_prompt(
        "generator", {"request": request, "context": _context_text(netlist, l)}
    )
    raw = client.complete("generator", render_prompt(prompt))
    return raw, check_envelope(raw)


def _run_concrete(ctx: PipelineContext, request: str) -> TurnResult:
    try:
        raw, envelope = generate_commands(request, ctx.netlist, ctx.layout, ctx.client)
    except FormatError as exc:
        report = ValidationReport(formatting_ok=False, formatting_reason=exc.reason)
        reply = f"The generated response was not usable ({exc.reason})."
        ctx.say("system", reply, request=request)
        return TurnResult(RequestKind.CONCRETE, reply, report=report)
    script_text = "\n".join(envelope.commands)
    report = validate_script(script_text, ctx.netlist, ctx.layout)
    ctx.say("generator", raw, status=envelope.status)
    if envelope.status != "ok":
        reply = envelope.prose or envelope.notes or f"Request status: {envelope.status}."
        return TurnResult(RequestKind.CONCRETE, reply, report=report, envelope=envelope)
    if report.syntax or report.logic:
        hits = report.syntax + report.logic
        reply = "The script failed validation: " + "; ".join(
            f"{h.rule} at {h.index}: {h.message}" for h in hits
        )
        ctx.say("system", reply)
        return TurnResult(RequestKind.CONCRETE, reply, report=report, envelope=envelope)
    script = parse_script(script_text)
    try:
        log = execute(ctx.layout, script)
    except ExecutionError as exc:
        reply = (
            f"Command {exc.index} ({exc.command}) failed: {exc.cause}. "
            "Earlier commands in this script were kept."
        )
        ctx.say("system", reply, failed_index=exc.index,
                snapshot=snapshot_hash(ctx.layout))
        return TurnResult(RequestKind.CONCRETE, reply, report=report, envelope=envelope)
    final_hash = log[-1].snapshot_hash if log else snapshot_hash(ctx.layout)
    ctx.say("system", f"executed {len(log)} commands", snapshot=final_hash)
    prose = envelope.prose.strip()
    reply = (prose + "\n\n" if prose else "") + f"Applied {len(log)} commands."
    return TurnResult(
        RequestKind.CONCRETE, reply, executed=log, report=report, envelope=envelope
    )


def _present_solutions(ctx: PipelineContext, source_text: str) -> TurnResult:
    if ctx.refine_rounds >= ctx.max_refine_rounds:
        raise PipelineTerminationError(
            f"refinement did not converge in {ctx.max_refine_rounds} rounds"
        )
    ctx.refine_rounds += 1
    solutions = analyze(source_text, ctx.kb, ctx.client, k=ctx.retrieval_k)
    ctx.say("analyzer", "\n".join(f"{i+1}. {s.text}" for i, s in enumerate(solutions)))
    messages = refine(ctx.client, solutions=solutions)
    reply_parts = [m.body for m in messages if m.recipient == "Designer"]
    if not reply_parts:
        raise RoutingError("refiner did not address the designer")
    ctx.pending_solutions = solutions
    reply = "\n\n".join(reply_parts)
    ctx.say("refiner", reply)
    return TurnResult(RequestKind.ABSTRACT, reply)


def _handle_feedback(ctx: PipelineContext, text: str) -> TurnResult:
    messages = refine(ctx.client, designer_feedback=text)
    ctx.say("refiner", "\n".join(f"To {m.recipient}: {m.body}" for m in messages))
    for message in messages:
        if message.recipient == "Adapter":
            ctx.pending_solutions = None
            ctx.refine_rounds = 0
            requests = adapt(message.body, ctx.netlist, ctx.client)
            ctx.say("adapter", "\n".join(requests))
            combined = TurnResult(RequestKind.ABSTRACT, "")
            replies = []
            for request in requests:
                result = _run_concrete(ctx, request)
                replies.append(result.reply)
                combined.executed.extend(result.executed)
                combined.report = result.report
                combined.envelope = result.envelope
            combined.reply = "\n\n".join(replies)
            return combined
        if message.recipient == "Analyzer":
            return _present_solutions(ctx, message.body)
    reply_parts = [m.body for m in messages if m.recipient == "Designer"]
    if reply_parts:
        return TurnResult(RequestKind.ABSTRACT, "\n\n".join(reply_parts))
    raise RoutingError("refiner output had no actionable recipient")


def run_pipeline(ctx: PipelineContext, designer_text: str) -> TurnResult:
    """One designer turn through the agent graph."""
    ctx.say("designer", designer_text)
    if ctx.pending_solutions is not None:
        return _handle_feedback(ctx, designer_text)
    kind = classify_request(designer_text, ctx.client)
    ctx.say("classifier", kind.value)
    if kind is RequestKind.CONCRETE:
        return _run_concrete(ctx, designer_text)
    return _present_solutions(ctx, designer_text)
