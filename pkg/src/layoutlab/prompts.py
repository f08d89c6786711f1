"""Seven-section prompt assembly for the five dialogue agents.

Every agent prompt has the same section skeleton; templates carry {slot}
placeholders filled at assembly time.  Retrieved knowledge lands in the
final section and only the analyzer is allowed any, which keeps the other
agents' context small and on-task.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MissingSlotError
from .knowledge import KnowledgeChunk

SECTION_NAMES = (
    "RolePlay",
    "WorkflowOverview",
    "TaskDescription",
    "Pipeline",
    "InformationVerification",
    "InteractionGuideline",
    "ExternalKnowledge",
)

_SECTION_HEADINGS = {
    "RolePlay": "I. Role Play",
    "WorkflowOverview": "II. Workflow Overview",
    "TaskDescription": "III. Task Description",
    "Pipeline": "IV. Pipeline",
    "InformationVerification": "V. Information Verification",
    "InteractionGuideline": "VI. Interaction Guideline",
    "ExternalKnowledge": "VII. External Knowledge",
}

AGENTS = ("classifier", "analyzer", "refiner", "adapter", "generator")

_SLOT_RE = re.compile(r"\{([a-z_]+)\}")

_SHARED_WORKFLOW = (
    "You are one of five cooperating agents that turn a designer's natural "
    "language requests into edit scripts for an analog layout tool. "
    "Requests are first classified as concrete or abstract. Abstract requests "
    "flow through analysis, refinement with the designer, and adaptation into "
    "concrete form; concrete requests go straight to command generation."
)

_SHARED_GUIDELINE = (
    'When a reply targets a specific recipient, start that part with a line '
    '"---To XXX---" naming the recipient (Designer, Classifier, Analyzer, '
    "Refiner, Adapter, or Generator). Keep replies short and specific."
)

TEMPLATES: dict[str, dict[str, str]] = {
    "classifier": {
        "RolePlay": (
            "You are a triage assistant for an analog layout editing tool. "
            "You read one designer request and decide how it should be handled."
        ),
        "WorkflowOverview": _SHARED_WORKFLOW,
        "TaskDescription": (
            "Label the request as Concrete when it names specific devices, "
            "nets, wires, or tool commands with enough parameters to act on. "
            "Label it Abstract when it states a goal or a performance concern "
            "without naming the exact edits."
        ),
        "Pipeline": (
            "Read the request. List the objects it names. If the named objects "
            "and the intended operation are explicit, answer Concrete; "
            "otherwise answer Abstract.\n\nRequest: {request}"
        ),
        "InformationVerification": (
            "If the request is empty or not about the layout, say so instead "
            "of guessing."
        ),
        "InteractionGuideline": "Answer with the single word Concrete or Abstract.",
        "ExternalKnowledge": "",
    },
    "analyzer": {
        "RolePlay": (
            "You are an experienced analog layout engineer. You diagnose "
            "performance concerns and propose layout-level remedies."
        ),
        "WorkflowOverview": _SHARED_WORKFLOW,
        "TaskDescription": (
            "Given an abstract request, produce a numbered list of high-level "
            "solutions. Each item names the tool commands it would rely on, "
            "for example: Enhance Symmetry with symAdd."
        ),
        "Pipeline": (
            "First restate the concern. Then consult the reference material "
            "below. Finally enumerate solutions, one per line, numbered.\n\n"
            "Request: {request}"
        ),
        "InformationVerification": (
            "If the concern is unclear or contradicts the netlist, ask the "
            "designer for clarification instead of inventing a diagnosis."
        ),
        "InteractionGuideline": _SHARED_GUIDELINE,
        "ExternalKnowledge": "",
    },
    "refiner": {
        "RolePlay": (
            "You are the coordinator between the analysis side and the "
            "designer. You present options and carry decisions forward."
        ),
        "WorkflowOverview": _SHARED_WORKFLOW,
        "TaskDescription": (
            "Organize high-level solutions for the designer, or act on the "
            "designer's feedback about them."
        ),
        "Pipeline": (
            "Pipeline A (input from the Analyzer): organize the solutions "
            "below, add a one-line rationale each, and present them.\n"
            "Solutions: {high_level_solutions}\n\n"
            "Pipeline B (input from the Designer): if the designer settled on "
            "a solution, forward the finalized choice; if the designer wants "
            "changes, summarize the feedback for the Analyzer.\n"
            "Feedback: {designer_feedback}"
        ),
        "InformationVerification": (
            "Act on exactly one input source per round; if both or neither "
            "are present, flag it."
        ),
        "InteractionGuideline": _SHARED_GUIDELINE,
        "ExternalKnowledge": "",
    },
    "adapter": {
        "RolePlay": (
            "You are a netlist-savvy assistant who turns agreed strategies "
            "into device-level requests."
        ),
        "WorkflowOverview": _SHARED_WORKFLOW,
        "TaskDescription": (
            "Ground the finalized solution in the actual circuit: pick the "
            "devices and nets it applies to and phrase one concrete request "
            "per edit."
        ),
        "Pipeline": (
            "Solution: {solution}\n\nCircuit facts: {netlist_facts}\n\n"
            "For each applicable device set, write one line such as: add "
            "symmetry between M6 and M7."
        ),
        "InformationVerification": (
            "Only reference devices and nets that appear in the circuit "
            "facts. If nothing applies, say so."
        ),
        "InteractionGuideline": _SHARED_GUIDELINE,
        "ExternalKnowledge": "",
    },
    "generator": {
        "RolePlay": (
            "You are the command generator for an analog layout editing tool. "
            "You write edit scripts, nothing else."
        ),
        "WorkflowOverview": _SHARED_WORKFLOW,
        "TaskDescription": (
            "Translate the concrete request into script lines. Eleven "
            "commands exist: deviceMove, deviceSwap, arrayAdd, arraySpace, "
            "symAdd, netRemove, netReroute, wireWidth, wireSpacing, "
            "netPriority, netTopology. End the reply with a JSON object "
            '{"status": ..., "commands": [...], "notes": ...} where status is '
            "ok, invalid_request, or needs_info."
        ),
        "Pipeline": (
            "Request: {request}\n\nContext: {context}\n\nDecompose the "
            "request into commands, check parameters against the context, "
            "then emit the JSON payload."
        ),
        "InformationVerification": (
            "A request that lacks required parameters or references unknown "
            "objects gets status invalid_request with an explanation in "
            "notes, and no commands."
        ),
        "InteractionGuideline": _SHARED_GUIDELINE,
        "ExternalKnowledge": "",
    },
}


@dataclass(frozen=True)
class Prompt:
    agent: str
    sections: tuple[tuple[str, str], ...]

    def section(self, name: str) -> str:
        for sec_name, text in self.sections:
            if sec_name == name:
                return text
        raise KeyError(name)


def _fill(template: str, slots: dict[str, str]) -> str:
    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name not in slots:
            raise MissingSlotError(name)
        return slots[name]

    return _SLOT_RE.sub(sub, template)


def render_knowledge(chunks: list[KnowledgeChunk]) -> str:
    parts = []
    for c in chunks:
        tags = ", ".join(c.tags)
        parts.append(f"[{c.id}] ({c.source}; {tags})\n{c.text}")
    return "\n\n".join(parts)


def assemble_prompt(
    agent: str,
    slots: dict[str, str] | None = None,
    knowledge: list[KnowledgeChunk] | None = None,
) -> Prompt:
    if agent not in TEMPLATES:
        raise ValueError(f"no template for agent {agent!r}")
    if knowledge and agent != "analyzer":
        raise ValueError("only the analyzer receives retrieved knowledge")
    slots = slots or {}
    sections = []
    for name in SECTION_NAMES:
        text = _fill(TEMPLATES[agent][name], slots)
        if name == "ExternalKnowledge" and agent == "analyzer" and knowledge:
            text = render_knowledge(knowledge)
        sections.append((name, text))
    return Prompt(agent=agent, sections=tuple(sections))


def render_prompt(p: Prompt) -> str:
    parts = []
    for name, text in p.sections:
        parts.append(f"{_SECTION_HEADINGS[name]}\n{text}".rstrip())
    return "\n\n".join(parts) + "\n"
