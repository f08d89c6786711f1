"""Mutable layout state on an integer cell grid, plus metrics and snapshots.

Coordinates are cells; origins are lower-left corners.  Symmetry axes are
vertical and stored doubled (ax2 = 2x) so half-cell axes stay integral.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal

from .errors import (
    EmptyLayoutError,
    NetlistSyntaxError,
    OutOfBoundsError,
    OverlapError,
    UnknownDeviceError,
)
from .netlist import Netlist

Point = tuple[int, int]

MUTABLE_FIELDS = (
    "placements",
    "nets",
    "sym_pairs",
    "array_groups",
    "priorities",
    "topology_guides",
    "spacing_rules",
    "width_overrides",
)

ORIENTATIONS = ("R0", "MX", "MY", "R180")

SNAPSHOT_SCHEMA = "layout-snapshot@1"

# Margin added around the occupied extent when a placement file has no
# `grid` header.
_AUTO_MARGIN = 8


@dataclass
class GridSpec:
    width: int
    height: int
    cell_pitch: int = 1


@dataclass
class Placement:
    origin: Point
    size: tuple[int, int]
    orientation: str = "R0"
    pins: dict[str, Point] = field(default_factory=dict)

    def oriented_pin(self, name: str) -> Point:
        """Pin offset after applying the orientation, still body-relative."""
        px, py = self.pins[name]
        w, h = self.size
        if self.orientation in ("MY", "R180"):
            px = w - 1 - px
        if self.orientation in ("MX", "R180"):
            py = h - 1 - py
        return (px, py)

    def pin_position(self, name: str) -> Point:
        ox, oy = self.origin
        px, py = self.oriented_pin(name)
        return (ox + px, oy + py)

    def cells(self) -> set[Point]:
        ox, oy = self.origin
        w, h = self.size
        return {(ox + dx, oy + dy) for dx in range(w) for dy in range(h)}

    def center_x2(self) -> int:
        return 2 * self.origin[0] + self.size[0]


@dataclass
class SymPair:
    a: str
    b: str
    axis2: int  # 2x the axis x coordinate

    def is_self(self) -> bool:
        return self.a == self.b


@dataclass
class ArrayGroup:
    id: str
    members: list[str]
    rows: int
    cols: int
    hspace: int = 1
    vspace: int = 1
    origin: Point = (0, 0)


@dataclass
class Wire:
    index: int  # 1-based within its net
    layer: int
    path: list[Point]
    width: int = 1

    @property
    def label(self) -> str:
        return f"wire{self.index}"


@dataclass
class NetRoute:
    net: str
    wires: list[Wire] = field(default_factory=list)
    routed: bool = False


@dataclass
class SpacingRule:
    subject: tuple[str, int]  # (net, wire index)
    other: tuple[str, int] | str  # (net, wire index) or a device name
    min_space: int
    direction: str = "both"  # horizontal | vertical | both


@dataclass
class Layout:
    netlist: Netlist
    grid: GridSpec
    placements: dict[str, Placement] = field(default_factory=dict)
    nets: dict[str, NetRoute] = field(default_factory=dict)
    sym_pairs: list[SymPair] = field(default_factory=list)
    array_groups: dict[str, ArrayGroup] = field(default_factory=dict)
    priorities: dict[str, int] = field(default_factory=dict)
    topology_guides: dict[str, list[Point]] = field(default_factory=dict)
    spacing_rules: list[SpacingRule] = field(default_factory=list)
    width_overrides: dict[tuple[str, int], int] = field(default_factory=dict)

    # -- queries ---------------------------------------------------------

    def placement_of(self, device: str) -> Placement:
        if device not in self.placements:
            raise UnknownDeviceError(device)
        return self.placements[device]

    def priority_of(self, net: str) -> int:
        return self.priorities.get(net, 0)

    def sym_pair_of(self, device: str) -> SymPair | None:
        for pair in self.sym_pairs:
            if device in (pair.a, pair.b):
                return pair
        return None

    def array_group_of(self, device: str) -> ArrayGroup | None:
        for group in self.array_groups.values():
            if device in group.members:
                return group
        return None

    def pin_positions(self, net: str) -> list[tuple[str, str, Point]]:
        """Placed pin attachments of `net`: (device, terminal, position)."""
        out = []
        for dev_name, term in self.netlist.nets.get(net, []):
            pl = self.placements.get(dev_name)
            if pl is None:
                continue
            out.append((dev_name, term, pl.pin_position(term)))
        order = {
            (d, t): i
            for d in self.netlist.devices
            for i, t in enumerate(self.netlist.devices[d].terminal_names())
        }
        out.sort(key=lambda a: (a[0], order[(a[0], a[1])]))
        return out

    def bounding_box(self) -> tuple[int, int, int, int]:
        """(min_x, min_y, max_x_excl, max_y_excl) over device bodies."""
        if not self.placements:
            raise EmptyLayoutError()
        xs0 = [p.origin[0] for p in self.placements.values()]
        ys0 = [p.origin[1] for p in self.placements.values()]
        xs1 = [p.origin[0] + p.size[0] for p in self.placements.values()]
        ys1 = [p.origin[1] + p.size[1] for p in self.placements.values()]
        return (min(xs0), min(ys0), max(xs1), max(ys1))

    def check_bounds(self, device: str, pl: Placement) -> None:
        ox, oy = pl.origin
        w, h = pl.size
        if ox < 0 or oy < 0 or ox + w > self.grid.width or oy + h > self.grid.height:
            raise OutOfBoundsError(device, pl.origin)


def backup_state(l: Layout) -> dict:
    """Deep-copy the mutable fields so a failed operation can roll back."""
    import copy

    return {name: copy.deepcopy(getattr(l, name)) for name in MUTABLE_FIELDS}


def restore_state(l: Layout, state: dict) -> None:
    for name, value in state.items():
        setattr(l, name, value)


def rects_overlap(a: Placement, b: Placement) -> bool:
    ax, ay = a.origin
    bx, by = b.origin
    aw, ah = a.size
    bw, bh = b.size
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


def find_overlaps(l: Layout) -> list[tuple[str, str]]:
    names = sorted(l.placements)
    pairs = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            if rects_overlap(l.placements[a], l.placements[b]):
                pairs.append((a, b))
    return pairs


def default_pins(device_kind_terminals: tuple[str, ...], size: tuple[int, int]) -> dict[str, Point]:
    """Terminal pins along the bottom row, left to right, clamped to width."""
    w = size[0]
    return {t: (min(i, w - 1), 0) for i, t in enumerate(device_kind_terminals)}


# -- placement text ------------------------------------------------------


def parse_placement_text(text: str) -> tuple[GridSpec | None, dict[str, tuple]]:
    """Parse `<device> <x> <y> <w> <h> <orient>` lines, optional grid header."""
    grid = None
    rows: dict[str, tuple] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "grid":
            if grid is not None or rows:
                raise NetlistSyntaxError(lineno, "grid header must come first, once")
            if len(tokens) not in (3, 4):
                raise NetlistSyntaxError(lineno, "grid header takes W H [pitch]")
            w, h = int(tokens[1]), int(tokens[2])
            pitch = int(tokens[3]) if len(tokens) == 4 else 1
            grid = GridSpec(width=w, height=h, cell_pitch=pitch)
            continue
        if len(tokens) != 6:
            raise NetlistSyntaxError(
                lineno, "expected <device> <x> <y> <w> <h> <orient>"
            )
        name, x, y, w, h, orient = tokens
        if orient not in ORIENTATIONS:
            raise NetlistSyntaxError(lineno, f"unknown orientation {orient!r}")
        try:
            vals = tuple(int(t) for t in (x, y, w, h))
        except ValueError as exc:
            raise NetlistSyntaxError(lineno, str(exc)) from exc
        if name in rows:
            raise NetlistSyntaxError(lineno, f"device {name!r} placed twice")
        rows[name] = (*vals, orient)
    return grid, rows


def serialize_placement(l: Layout) -> str:
    lines = [f"grid {l.grid.width} {l.grid.height} {l.grid.cell_pitch}"]
    for name in sorted(l.placements):
        pl = l.placements[name]
        lines.append(
            f"{name} {pl.origin[0]} {pl.origin[1]} "
            f"{pl.size[0]} {pl.size[1]} {pl.orientation}"
        )
    return "\n".join(lines) + "\n"


def load_layout(netlist: Netlist, placed: str) -> Layout:
    """Bind placement text to a netlist; fresh layout with no constraints."""
    grid, rows = parse_placement_text(placed)
    for name in rows:
        if name not in netlist.devices:
            raise UnknownDeviceError(name)
    if grid is None:
        max_x = max((x + w for (x, y, w, h, o) in rows.values()), default=1)
        max_y = max((y + h for (x, y, w, h, o) in rows.values()), default=1)
        grid = GridSpec(width=max_x + _AUTO_MARGIN, height=max_y + _AUTO_MARGIN)
    l = Layout(netlist=netlist, grid=grid)
    for name, (x, y, w, h, orient) in rows.items():
        device = netlist.devices[name]
        pl = Placement(
            origin=(x, y),
            size=(w, h),
            orientation=orient,
            pins=default_pins(device.terminal_names(), (w, h)),
        )
        l.check_bounds(name, pl)
        l.placements[name] = pl
    overlaps = find_overlaps(l)
    if overlaps:
        raise OverlapError(overlaps)
    return l


# -- metrics -------------------------------------------------------------


def hpwl(l: Layout) -> int:
    total = 0
    for net in l.netlist.nets:
        pins = [pos for (_, _, pos) in l.pin_positions(net)]
        if len(pins) < 2:
            continue
        xs = [p[0] for p in pins]
        ys = [p[1] for p in pins]
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def bounding_area(l: Layout) -> int:
    x0, y0, x1, y1 = l.bounding_box()
    return (x1 - x0) * (y1 - y0)


def area_ratio(l: Layout, baseline: Layout) -> Decimal:
    """Occupied-bbox area quotient, rounded half-up to 2 decimals."""
    num = bounding_area(l)
    den = bounding_area(baseline)
    return (Decimal(num) / Decimal(den)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )


# -- snapshots -----------------------------------------------------------


def _spacing_other_doc(other: tuple[str, int] | str):
    if isinstance(other, str):
        return {"device": other}
    return {"net": other[0], "wire": other[1]}


def _spacing_other_from_doc(doc) -> tuple[str, int] | str:
    if "device" in doc:
        return doc["device"]
    return (doc["net"], doc["wire"])


def snapshot(l: Layout) -> str:
    """Canonical JSON for the layout; byte-stable for equal states."""
    doc = {
        "schema": SNAPSHOT_SCHEMA,
        "grid": {
            "width": l.grid.width,
            "height": l.grid.height,
            "cell_pitch": l.grid.cell_pitch,
        },
        "placements": {
            name: {
                "origin": list(pl.origin),
                "size": list(pl.size),
                "orientation": pl.orientation,
                "pins": {p: list(off) for p, off in sorted(pl.pins.items())},
            }
            for name, pl in sorted(l.placements.items())
        },
        "nets": {
            name: {
                "routed": route.routed,
                "wires": [
                    {
                        "index": w.index,
                        "layer": w.layer,
                        "width": w.width,
                        "path": [list(p) for p in w.path],
                    }
                    for w in route.wires
                ],
            }
            for name, route in sorted(l.nets.items())
        },
        "sym_pairs": [[p.a, p.b, p.axis2] for p in l.sym_pairs],
        "array_groups": {
            g.id: {
                "members": list(g.members),
                "rows": g.rows,
                "cols": g.cols,
                "hspace": g.hspace,
                "vspace": g.vspace,
                "origin": list(g.origin),
            }
            for g in sorted(l.array_groups.values(), key=lambda g: g.id)
        },
        "priorities": {n: p for n, p in sorted(l.priorities.items())},
        "topology_guides": {
            n: [list(p) for p in pts] for n, pts in sorted(l.topology_guides.items())
        },
        "spacing_rules": [
            {
                "subject": {"net": r.subject[0], "wire": r.subject[1]},
                "other": _spacing_other_doc(r.other),
                "min_space": r.min_space,
                "direction": r.direction,
            }
            for r in l.spacing_rules
        ],
        "width_overrides": {
            f"{net}:{wire}": w
            for (net, wire), w in sorted(l.width_overrides.items())
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def snapshot_hash(l: Layout) -> str:
    return hashlib.sha256(snapshot(l).encode()).hexdigest()


def layout_from_snapshot(text: str, netlist: Netlist) -> Layout:
    doc = json.loads(text)
    if doc.get("schema") != SNAPSHOT_SCHEMA:
        raise ValueError(f"unsupported snapshot schema {doc.get('schema')!r}")
    g = doc["grid"]
    l = Layout(
        netlist=netlist,
        grid=GridSpec(width=g["width"], height=g["height"], cell_pitch=g["cell_pitch"]),
    )
    for name, p in doc["placements"].items():
        l.placements[name] = Placement(
            origin=tuple(p["origin"]),
            size=tuple(p["size"]),
            orientation=p["orientation"],
            pins={k: tuple(v) for k, v in p["pins"].items()},
        )
    for name, r in doc["nets"].items():
        l.nets[name] = NetRoute(
            net=name,
            routed=r["routed"],
            wires=[
                Wire(
                    index=w["index"],
                    layer=w["layer"],
                    width=w["width"],
                    path=[tuple(p) for p in w["path"]],
                )
                for w in r["wires"]
            ],
        )
    l.sym_pairs = [SymPair(a=a, b=b, axis2=ax2) for a, b, ax2 in doc["sym_pairs"]]
    for gid, gr in doc["array_groups"].items():
        l.array_groups[gid] = ArrayGroup(
            id=gid,
            members=list(gr["members"]),
            rows=gr["rows"],
            cols=gr["cols"],
            hspace=gr["hspace"],
            vspace=gr["vspace"],
            origin=tuple(gr["origin"]),
        )
    l.priorities = dict(doc["priorities"])
    l.topology_guides = {
        n: [tuple(p) for p in pts] for n, pts in doc["topology_guides"].items()
    }
    l.spacing_rules = [
        SpacingRule(
            subject=(r["subject"]["net"], r["subject"]["wire"]),
            other=_spacing_other_from_doc(r["other"]),
            min_space=r["min_space"],
            direction=r["direction"],
        )
        for r in doc["spacing_rules"]
    ]
    for key, w in doc["width_overrides"].items():
        net, _, wire = key.rpartition(":")
        l.width_overrides[(net, int(wire))] = w
    return l


_X_FLIP = {"R0": "MY", "MY": "R0", "MX": "R180", "R180": "MX"}


def mirrored_layout(l: Layout, axis2: int) -> Layout:
    """Reflect every placement about the vertical line x = axis2 / 2.

    Orientations flip so pin cells land on the mirrored cells too; every pin
    x maps through the same x -> axis2 - 1 - x.
    """
    out = Layout(netlist=l.netlist, grid=replace(l.grid))
    for name, pl in l.placements.items():
        new_x2 = 2 * axis2 - pl.center_x2()
        out.placements[name] = Placement(
            origin=((new_x2 - pl.size[0]) // 2, pl.origin[1]),
            size=pl.size,
            orientation=_X_FLIP[pl.orientation],
            pins=dict(pl.pins),
        )
    return out
