"""Bulk evaluation: corpus synthesis, batch checking, metric tables.

Requests are synthesized from templates around known-good (or deliberately
broken) command scripts, so every label is provable at generation time.
Batch runs score the four sanity categories plus overall accuracy; a
separate report covers request classification.
"""

from __future__ import annotations

import json
import time
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from random import Random

from .commands import (
    ArrayAdd,
    ArraySpace,
    DeviceMove,
    DeviceSwap,
    NetPriority,
    NetRemove,
    NetReroute,
    NetTopology,
    SymAdd,
    WireSpacing,
    WireWidth,
)
from .errors import CorpusLabelError, EmptyLayoutError, EmptyResultsError
from .layout import Layout, load_layout
from .netlist import Netlist
from .pipeline import RequestKind
from .prompts import AGENTS, assemble_prompt, render_prompt
from .validator import FunctionalityGrades, check_response, validate_script

CATEGORIES = ("Formatting", "Validity", "Syntax", "Logic", "Overall")

DEFECTS = (
    "missing_parameter",
    "unknown_device",
    "unknown_net",
    "array_space_before_add",
    "wire_after_remove",
    "double_symmetry",
)


@dataclass(frozen=True)
class CorpusSpec:
    n_valid: int
    n_invalid: int
    commands_per_request: tuple[int, int] = (5, 40)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.commands_per_request
        if lo < 1 or hi < lo:
            raise ValueError(f"bad command count range {lo}..{hi}")
        if self.n_valid < 0 or self.n_invalid < 0:
            raise ValueError("corpus counts must be >= 0")


@dataclass(frozen=True)
class RequestCase:
    id: str
    text: str
    label: str  # valid | invalid
    script: str
    defect: str = ""  # not serialized; diagnostic only


@dataclass
class ResultRecord:
    id: str
    label: str
    raw: str
    outcome: str
    formatting: bool
    validity: bool
    syntax: bool
    logic: bool
    overall: bool
    hits: tuple[str, ...] = ()
    error: str = ""
    elapsed_s: float = 0.0  # excluded from serialization


@dataclass
class EvalConfig:
    netlist: Netlist
    layout: Layout
    backend: Callable[[RequestCase], str]
    jobs: int = 1
    single_agent: bool = False


# -- corpus synthesis ------------------------------------------------------

_KIND_SIZES = {"nmos": (6, 2), "pmos": (6, 2), "capacitor": (4, 4), "resistor": (2, 4)}

_INTROS = (
    "Apply the following edits to the layout:",
    "Here is the next batch of layout changes:",
    "Please run these layout operations in order:",
    "Execute this edit sequence on the current design:",
)


def default_placement(netlist: Netlist) -> str:
    """Row-packed placement text, deterministic in netlist order."""
    lines = []
    x, y, row_h = 2, 2, 0
    for name, dev in netlist.devices.items():
        w, h = _KIND_SIZES[dev.kind]
        if x + w > 40:
            x, y, row_h = 2, y + row_h + 2, 0
        lines.append(f"{name} {x} {y} {w} {h} R0")
        x += w + 2
        row_h = max(row_h, h)
    return "\n".join(lines) + "\n"


class _ScriptGen:
    """Samples command sequences that the static checks accept.

    Mirrors the checker's in-script state: symmetry ownership, groups
    defined so far, nets removed or rerouted.
    """

    def __init__(self, rng: Random, netlist: Netlist, l: Layout):
        self.rng = rng
        self.devices = sorted(netlist.devices)
        self.nets = sorted(netlist.nets)
        self.width = l.grid.width
        self.height = l.grid.height
        self.sym_owner: dict[str, tuple] = {}
        self.groups: list[str] = []
        self.group_seq = 0
        self.rerouted: set[str] = set()
        self.removed: set[str] = set()

    def _device(self) -> str:
        return self.rng.choice(self.devices)

    def _net(self) -> str:
        return self.rng.choice(self.nets)

    def free_devices(self) -> list[str]:
        return [d for d in self.devices if d not in self.sym_owner]

    def next_command(self):
        choices = [
            self._device_move,
            self._device_swap,
            self._net_priority,
            self._net_reroute,
            self._net_topology,
            self._net_remove,
            self._array_add,
            self._sym_add,
        ]
        if self.groups:
            choices.append(self._array_space)
        if self.rerouted:
            choices.append(self._wire_width)
            choices.append(self._wire_spacing)
        return self.rng.choice(choices)()

    def _device_move(self):
        return DeviceMove(
            self._device(),
            self.rng.randrange(self.width),
            self.rng.randrange(self.height),
        )

    def _device_swap(self):
        a, b = self.rng.sample(self.devices, 2)
        return DeviceSwap(a, b)

    def _net_priority(self):
        return NetPriority(self._net(), self.rng.randint(0, 10))

    def _net_reroute(self):
        net = self._net()
        self.removed.discard(net)
        self.rerouted.add(net)
        return NetReroute(net)

    def _net_remove(self):
        net = self._net()
        self.rerouted.discard(net)
        self.removed.add(net)
        return NetRemove(net)

    def _net_topology(self):
        points = tuple(
            (self.rng.randrange(self.width), self.rng.randrange(self.height))
            for _ in range(self.rng.randint(0, 3))
        )
        return NetTopology(self._net(), points)

    def _array_add(self):
        self.group_seq += 1
        group = f"g{self.group_seq}"
        self.groups.append(group)
        rows = self.rng.randint(1, 3)
        cols = self.rng.randint(1, 3)
        count = self.rng.randint(1, min(rows * cols, len(self.devices)))
        members = tuple(self.rng.sample(self.devices, count))
        return ArrayAdd(group, rows, cols, members)

    def _array_space(self):
        return ArraySpace(
            self.rng.choice(self.groups),
            self.rng.randint(0, 5),
            self.rng.randint(0, 5),
        )

    def _sym_add(self):
        free = self.free_devices()
        paired = sorted({o for o in self.sym_owner.values()})
        if paired and (len(free) < 2 or self.rng.random() < 0.25):
            a, b = self.rng.choice(paired)  # restating a pair is allowed
        elif len(free) >= 2 and self.rng.random() < 0.8:
            a, b = self.rng.sample(free, 2)
        elif free:
            a = b = self.rng.choice(free)
        else:
            a, b = self.rng.choice(paired)
        key = tuple(sorted((a, b)))
        self.sym_owner[a] = key
        self.sym_owner[b] = key
        axis2 = self.rng.randint(0, 2 * self.width) if self.rng.random() < 0.3 else None
        return SymAdd(a, b, axis2)

    def _wire_width(self):
        net = self.rng.choice(sorted(self.rerouted))
        return WireWidth(net, self.rng.randint(1, 3), self.rng.randint(1, 5))

    def _wire_spacing(self):
        net = self.rng.choice(sorted(self.rerouted))
        wire = self.rng.randint(1, 3)
        if self.rng.random() < 0.5:
            other = (self.rng.choice(sorted(self.rerouted)), self.rng.randint(1, 3))
        else:
            other = self._device()
        space = self.rng.randint(0, 6)
        direction = self.rng.choice(("both", "horizontal", "vertical"))
        return WireSpacing(net, wire, other, space, direction)


def _script_lines(gen: _ScriptGen, count: int) -> list[str]:
    return [" ".join(gen.next_command().tokens()) for _ in range(count)]


def _fresh_name(taken: Iterable[str], stem: str) -> str:
    taken = set(taken)
    n = 404
    while f"{stem}{n}" in taken:
        n += 1
    return f"{stem}{n}"


def _break_script(rng: Random, lines: list[str], gen: _ScriptGen) -> tuple[list[str], str]:
    """Plant one defect; returns the broken lines and the defect name."""
    defect = rng.choice(DEFECTS)
    lines = list(lines)
    if defect == "missing_parameter":
        targets = [
            i
            for i, line in enumerate(lines)
            if line.split()[0] in ("deviceMove", "deviceSwap", "netPriority", "wireWidth", "arraySpace")
        ]
        if targets:
            i = rng.choice(targets)
            lines[i] = " ".join(lines[i].split()[:-1])
        else:
            lines.append(f"deviceMove {rng.choice(gen.devices)}")
    elif defect == "unknown_device":
        lines.append(f"deviceSwap {rng.choice(gen.devices)} {_fresh_name(gen.devices, 'M')}")
    elif defect == "unknown_net":
        lines.append(f"netPriority {_fresh_name(gen.nets, 'net')} {rng.randint(0, 10)}")
    elif defect == "array_space_before_add":
        group = f"g{gen.group_seq + 1}"
        lines.append(f"arrayAdd {group} 2 2 {rng.choice(gen.devices)}")
        lines.insert(0, f"arraySpace {group} 1 1")
    elif defect == "wire_after_remove":
        net = rng.choice(gen.nets)
        lines.append(f"netRemove {net}")
        lines.append(f"wireWidth {net} wire1 2")
    else:  # double_symmetry
        a, b, c = rng.sample(gen.devices, 3)
        lines.append(f"symAdd {a} {b}")
        lines.append(f"symAdd {a} {c}")
    return lines, defect


def synthesize_corpus(
    spec: CorpusSpec, netlist: Netlist, l: Layout | None = None
) -> list[RequestCase]:
    if not netlist.devices:
        raise EmptyLayoutError("netlist has no devices")
    if l is None:
        l = load_layout(netlist, default_placement(netlist))
    rng = Random(spec.seed)
    lo, hi = spec.commands_per_request
    cases = []
    for i in range(spec.n_valid):
        gen = _ScriptGen(rng, netlist, l)
        lines = _script_lines(gen, rng.randint(lo, hi))
        script = "\n".join(lines)
        report = validate_script(script, netlist, l)
        if report.syntax or report.logic:
            raise CorpusLabelError(f"valid case rejected: {report.syntax + report.logic}")
        text = f"{rng.choice(_INTROS)} " + "; ".join(lines) + "."
        cases.append(RequestCase(f"v{i + 1:04d}", text, "valid", script))
    for i in range(spec.n_invalid):
        gen = _ScriptGen(rng, netlist, l)
        lines = _script_lines(gen, rng.randint(lo, hi))
        broken, defect = _break_script(rng, lines, gen)
        script = "\n".join(broken)
        report = validate_script(script, netlist, l)
        if not (report.syntax or report.logic):
            raise CorpusLabelError(f"planted defect {defect} went undetected")
        text = f"{rng.choice(_INTROS)} " + "; ".join(broken) + "."
        cases.append(RequestCase(f"x{i + 1:04d}", text, "invalid", script, defect))
    return cases


def serialize_corpus(cases: Iterable[RequestCase]) -> str:
    lines = [
        json.dumps(
            {"id": c.id, "text": c.text, "label": c.label, "ground_truth_script": c.script},
            sort_keys=True,
        )
        for c in cases
    ]
    return "\n".join(lines) + "\n" if lines else ""


def parse_corpus(text: str) -> list[RequestCase]:
    cases = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        cases.append(
            RequestCase(doc["id"], doc["text"], doc["label"], doc["ground_truth_script"])
        )
    return cases


# -- backends --------------------------------------------------------------


def oracle_backend(corpus: Iterable[RequestCase]) -> Callable[[RequestCase], str]:
    """Perfect reference backend: answers straight from the ground truth."""
    scripts = {c.id: c for c in corpus}

    def run(case: RequestCase) -> str:
        known = scripts[case.id]
        if known.label == "valid":
            doc = {
                "status": "ok",
                "commands": [ln for ln in known.script.splitlines() if ln],
                "notes": "",
            }
            return "Executing the requested sequence.\n\n" + json.dumps(doc)
        doc = {
            "status": "invalid_request",
            "commands": [],
            "notes": known.defect or "request is not executable as written",
        }
        return "This request cannot be executed as written.\n\n" + json.dumps(doc)

    return run


def prose_backend(case: RequestCase) -> str:
    return "The layout could benefit from wider supply wires and tighter symmetry."


def prompt_for_case(case: RequestCase, config: EvalConfig) -> str:
    context = f"grid {config.layout.grid.width} {config.layout.grid.height}"
    if config.single_agent:
        return merged_prompt(case.text, context)
    return render_prompt(
        assemble_prompt("generator", {"request": case.text, "context": context})
    )


def merged_prompt(request: str, context: str) -> str:
    """All agent prompts concatenated, for the one-agent ablation."""
    slots = {
        "classifier": {"request": request},
        "analyzer": {"request": request},
        "refiner": {"high_level_solutions": "n/a", "designer_feedback": "n/a"},
        "adapter": {"solution": "n/a", "netlist_facts": context},
        "generator": {"request": request, "context": context},
    }
    return "\n\n".join(
        render_prompt(assemble_prompt(agent, slots[agent])) for agent in AGENTS
    )


# -- bulk runs -------------------------------------------------------------


def _flags(label: str, report, envelope) -> tuple[bool, bool, bool, bool, bool]:
    formatting = report.formatting_ok
    if envelope is None:
        validity = False
    elif label == "invalid":
        validity = envelope.status == "invalid_request"
    else:
        validity = envelope.status == "ok"
    syntax = formatting and not report.syntax
    logic = formatting and not report.logic
    overall = report.validity not in ("", "wrong")
    return formatting, validity, syntax, logic, overall


def _run_one(case: RequestCase, config: EvalConfig) -> ResultRecord:
    start = time.perf_counter()
    try:
        raw = config.backend(case)
    except Exception as exc:
        return ResultRecord(
            case.id, case.label, "", "error", False, False, False, False, False,
            error=repr(exc), elapsed_s=time.perf_counter() - start,
        )
    report, envelope = check_response(
        raw, config.netlist, config.layout, expected=case.label
    )
    formatting, validity, syntax, logic, overall = _flags(case.label, report, envelope)
    hits = tuple(
        f"{h.rule}@{h.index}: {h.message}" for h in report.syntax + report.logic
    )
    return ResultRecord(
        case.id, case.label, raw, report.validity,
        formatting, validity, syntax, logic, overall,
        hits=hits, elapsed_s=time.perf_counter() - start,
    )


def run_bulk(
    corpus: Iterable[RequestCase],
    config: EvalConfig,
    existing: Iterable[ResultRecord] = (),
) -> list[ResultRecord]:
    done = {r.id: r for r in existing}
    todo = [c for c in corpus if c.id not in done]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            fresh = list(pool.map(lambda c: _run_one(c, config), todo))
    else:
        fresh = [_run_one(c, config) for c in todo]
    merged = list(done.values()) + fresh
    return sorted(merged, key=lambda r: r.id)


def serialize_results(results: Iterable[ResultRecord]) -> str:
    # timing is volatile, so it stays out of the canonical file
    lines = []
    for r in sorted(results, key=lambda r: r.id):
        doc = {
            "id": r.id, "label": r.label, "raw": r.raw, "outcome": r.outcome,
            "formatting": r.formatting, "validity": r.validity,
            "syntax": r.syntax, "logic": r.logic, "overall": r.overall,
            "hits": list(r.hits), "error": r.error,
        }
        lines.append(json.dumps(doc, sort_keys=True))
    return "\n".join(lines) + "\n" if lines else ""


def parse_results(text: str) -> list[ResultRecord]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        out.append(
            ResultRecord(
                doc["id"], doc["label"], doc["raw"], doc["outcome"],
                doc["formatting"], doc["validity"], doc["syntax"],
                doc["logic"], doc["overall"],
                hits=tuple(doc["hits"]), error=doc["error"],
            )
        )
    return out


# -- metrics ---------------------------------------------------------------


def percentage(passing: int, total: int) -> Decimal:
    """passing/total as a percent, two decimals, half-up."""
    if total <= 0:
        raise EmptyResultsError("no results to score")
    return (Decimal(passing) * 100 / Decimal(total)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )


@dataclass(frozen=True)
class MetricsTable:
    counts: dict[str, tuple[int, int]]  # category -> (passing, total)

    def pct(self, category: str) -> Decimal:
        passing, total = self.counts[category]
        return percentage(passing, total)

    def to_doc(self) -> dict:
        return {
            cat: {
                "passing": self.counts[cat][0],
                "total": self.counts[cat][1],
                "pct": str(self.pct(cat)),
            }
            for cat in CATEGORIES
        }

    def render(self) -> str:
        rows = [f"{'Category':<12} {'Pass':>6} {'Total':>6} {'Pct':>8}"]
        for cat in CATEGORIES:
            passing, total = self.counts[cat]
            rows.append(f"{cat:<12} {passing:>6} {total:>6} {str(self.pct(cat)):>7}%")
        return "\n".join(rows) + "\n"


def compute_metrics(results: list[ResultRecord]) -> MetricsTable:
    if not results:
        raise EmptyResultsError("no results to score")
    total = len(results)
    counts = {
        "Formatting": (sum(r.formatting for r in results), total),
        "Validity": (sum(r.validity for r in results), total),
        "Syntax": (sum(r.syntax for r in results), total),
        "Logic": (sum(r.logic for r in results), total),
        "Overall": (sum(r.overall for r in results), total),
    }
    return MetricsTable(counts)


# -- classification --------------------------------------------------------

_CONCRETE_TEMPLATES = (
    "add symmetry between {a} and {b}",
    "move {a} to column {x} row {y}",
    "swap the positions of {a} and {b}",
    "set the wire width of {net} to {w}",
    "raise the routing priority of {net} to {p}",
    "reroute {net}",
    "remove the routing of {net}",
    "arrange {a} and {b} in a 1 x 2 array",
    "add a guide point at {x} {y} for {net}",
    "keep {net} wires at least {w} cells away from {a}",
)

_ABSTRACT_TEMPLATES = (
    "improve the CMRR of this stage",
    "enhance the matching of the input devices",
    "reduce parasitic resistance on the output path",
    "minimize crosstalk between the sensitive lines",
    "the offset looks too high after extraction",
    "make the layout more robust against mismatch",
    "improve the noise performance",
    "optimize the bandwidth of the amplifier",
    "the PSRR needs to get better",
    "tighten up the layout for yield",
)

_POLITE = ("", "please ", "could you ", "next, ", "after that, ")


def synthesize_classification_corpus(
    n_concrete: int, n_abstract: int, seed: int, netlist: Netlist
) -> list[tuple[str, RequestKind]]:
    rng = Random(seed)
    devices = sorted(netlist.devices)
    nets = sorted(netlist.nets)
    out = []
    for _ in range(n_concrete):
        a, b = rng.sample(devices, 2)
        text = rng.choice(_POLITE) + rng.choice(_CONCRETE_TEMPLATES).format(
            a=a, b=b, net=rng.choice(nets),
            x=rng.randint(0, 40), y=rng.randint(0, 30),
            w=rng.randint(1, 4), p=rng.randint(1, 10),
        )
        out.append((text, RequestKind.CONCRETE))
    for _ in range(n_abstract):
        text = rng.choice(_POLITE) + rng.choice(_ABSTRACT_TEMPLATES)
        out.append((text, RequestKind.ABSTRACT))
    rng.shuffle(out)
    return out


def classification_report(
    labeled: Iterable[tuple[str, RequestKind]],
    classify: Callable[[str], RequestKind],
) -> dict:
    counts = {kind: [0, 0] for kind in RequestKind}
    for text, kind in labeled:
        counts[kind][1] += 1
        if classify(text) is kind:
            counts[kind][0] += 1
    report = {}
    for kind, (correct, total) in counts.items():
        if total == 0:
            continue
        accuracy = (Decimal(correct) * 100 / Decimal(total)).quantize(
            Decimal("0.1"), rounding=ROUND_HALF_UP
        )
        report[kind.value] = {"correct": correct, "total": total, "accuracy": accuracy}
    return report


# -- functionality worksheet -----------------------------------------------


def functionality_sample(
    results: list[ResultRecord], fraction: float = 0.02, seed: int = 0
) -> list[str]:
    """Stratified (by label) sample of sanity-passing result ids for grading."""
    passed = [r for r in results if r.overall]
    if not passed:
        return []
    k = max(1, round(len(results) * fraction))
    k = min(k, len(passed))
    rng = Random(seed)
    by_label: dict[str, list[str]] = {}
    for r in passed:
        by_label.setdefault(r.label, []).append(r.id)
    quotas = {
        label: round(k * len(ids) / len(passed)) for label, ids in by_label.items()
    }
    drift = k - sum(quotas.values())
    largest = max(by_label, key=lambda lb: len(by_label[lb]))
    quotas[largest] += drift
    chosen: list[str] = []
    for label in sorted(by_label):
        ids = sorted(by_label[label])
        take = min(quotas[label], len(ids))
        chosen.extend(rng.sample(ids, take))
    return sorted(chosen)


def emit_worksheet(sample_ids: list[str], corpus: Iterable[RequestCase]) -> str:
    texts = {c.id: c.text for c in corpus}
    lines = ["# append a grade of A, B, or C to each line"]
    for cid in sample_ids:
        text = texts[cid].replace("\t", " ")
        if len(text) > 100:
            text = text[:97] + "..."
        lines.append(f"{cid}\t{text}\tgrade:")
    return "\n".join(lines) + "\n"


def parse_worksheet(text: str) -> FunctionalityGrades:
    grades = FunctionalityGrades()
    for line in text.splitlines():
        if line.startswith("#") or "grade:" not in line:
            continue
        value = line.rsplit("grade:", 1)[1].strip()
        if value:
            grades.add(value)
    return grades
