"""Placement commands: moves, swaps, symmetry and array constraints, legalization.

Constraint repair priority is symmetry > array > free placement.  The
legalizer is a greedy shifter: scan devices in name order, push an
overlapping device rightward then upward to the nearest free spot, re-apply
constraints, and iterate to a fixpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ArrayConflictError,
    GroupExistsError,
    OutOfBoundsError,
    ShapeTooSmallError,
    SymConflictError,
    SymInfeasibleError,
    UnknownDeviceError,
    UnknownGroupError,
    UnplaceableError,
)
from .layout import (
    ArrayGroup,
    Layout,
    Placement,
    Point,
    SymPair,
    backup_state,
    rects_overlap,
    restore_state,
)

_MAX_LEGALIZE_ITERATIONS = 100


@dataclass
class LegalizeReport:
    moved: list[tuple[str, Point, Point]] = field(default_factory=list)
    iterations: int = 0
    group_id: str | None = None
    warnings: list[str] = field(default_factory=list)


def _origins(l: Layout) -> dict[str, Point]:
    return {name: pl.origin for name, pl in l.placements.items()}


def _finish(l: Layout, before: dict[str, Point], report: LegalizeReport) -> LegalizeReport:
    """Fill the moved list from net origin changes and mark stale routes."""
    report.moved = sorted(
        (name, before[name], pl.origin)
        for name, pl in l.placements.items()
        if before.get(name) != pl.origin
    )
    stale_nets = set()
    for name, _, _ in report.moved:
        stale_nets.update(l.netlist.devices[name].terminals)
    for net in stale_nets:
        route = l.nets.get(net)
        if route is not None:
            route.routed = False
    return report


def _set_center_x2(pl: Placement, x2: int) -> None:
    pl.origin = ((x2 - pl.size[0]) // 2, pl.origin[1])


def _mirror_partner(l: Layout, pair: SymPair, anchor: str) -> None:
    """Re-mirror the non-anchor member about the stored axis."""
    if pair.is_self():
        pl = l.placement_of(pair.a)
        _set_center_x2(pl, pair.axis2)
        return
    other = pair.b if anchor == pair.a else pair.a
    pa = l.placement_of(anchor)
    po = l.placement_of(other)
    po.origin = (po.origin[0], pa.origin[1])
    _set_center_x2(po, 2 * pair.axis2 - pa.center_x2())


def _lattice_targets(l: Layout, group: ArrayGroup) -> dict[str, Point]:
    cellw = max(l.placement_of(m).size[0] for m in group.members)
    cellh = max(l.placement_of(m).size[1] for m in group.members)
    ox, oy = group.origin
    targets = {}
    for k, member in enumerate(group.members):
        col, row = k % group.cols, k // group.cols
        targets[member] = (
            ox + col * (cellw + group.hspace),
            oy + row * (cellh + group.vspace),
        )
    return targets


def _repair_constraints(l: Layout, shifted: set[str]) -> bool:
    """Snap arrays to their lattice, then sym pairs to their mirror equation.

    A group or pair follows a member the shift pass just moved; otherwise the
    stored origin (arrays) or the first-named member (pairs) anchors it.
    """
    changed = False
    for gid in sorted(l.array_groups):
        group = l.array_groups[gid]
        movers = [m for m in group.members if m in shifted]
        if movers:
            k = group.members.index(movers[0])
            targets = _lattice_targets(l, group)
            dx = l.placement_of(movers[0]).origin[0] - targets[movers[0]][0]
            dy = l.placement_of(movers[0]).origin[1] - targets[movers[0]][1]
            group.origin = (group.origin[0] + dx, group.origin[1] + dy)
        for member, target in _lattice_targets(l, group).items():
            pl = l.placement_of(member)
            if pl.origin != target:
                pl.origin = target
                changed = True
    for pair in l.sym_pairs:
        if pair.is_self():
            pl = l.placement_of(pair.a)
            if pl.center_x2() != pair.axis2:
                _set_center_x2(pl, pair.axis2)
                changed = True
            continue
        anchor = pair.b if pair.b in shifted and pair.a not in shifted else pair.a
        other = pair.b if anchor == pair.a else pair.a
        pa, po = l.placement_of(anchor), l.placement_of(other)
        want_x2 = 2 * pair.axis2 - pa.center_x2()
        if po.center_x2() != want_x2 or po.origin[1] != pa.origin[1]:
            po.origin = (po.origin[0], pa.origin[1])
            _set_center_x2(po, want_x2)
            changed = True
    for name, pl in l.placements.items():
        l.check_bounds(name, pl)
    return changed


def _pinned_x(l: Layout, name: str, pl: Placement) -> int | None:
    """Sym members dodge vertically: their x is determined by axis and partner."""
    pair = l.sym_pair_of(name)
    if pair is None:
        return None
    if pair.is_self():
        return (pair.axis2 - pl.size[0]) // 2
    partner = pair.b if name == pair.a else pair.a
    partner_x2 = l.placement_of(partner).center_x2()
    return (2 * pair.axis2 - partner_x2 - pl.size[0]) // 2


def _shift_pass(l: Layout) -> set[str]:
    """One greedy pass: each device, in name order, dodges earlier devices."""
    shifted: set[str] = set()
    fixed: list[Placement] = []
    for name in sorted(l.placements):
        pl = l.placements[name]
        if any(rects_overlap(pl, other) for other in fixed):
            spot = _find_spot(l, pl, fixed, _pinned_x(l, name, pl))
            if spot is None:
                raise UnplaceableError(name)
            if spot != pl.origin:
                pl.origin = spot
                shifted.add(name)
        fixed.append(pl)
    return shifted


def _find_spot(
    l: Layout, pl: Placement, fixed: list[Placement], fixed_x: int | None = None
) -> Point | None:
    w, h = pl.size
    cx, cy = pl.origin
    probe = Placement(origin=pl.origin, size=pl.size)
    for y in range(cy, l.grid.height - h + 1):
        if fixed_x is not None:
            xs = [fixed_x]
        else:
            xs = range(cx if y == cy else 0, l.grid.width - w + 1)
        for x in xs:
            probe.origin = (x, y)
            if not any(rects_overlap(probe, other) for other in fixed):
                return (x, y)
    return None


def legalize(l: Layout) -> LegalizeReport:
    before = _origins(l)
    report = LegalizeReport()
    for iteration in range(1, _MAX_LEGALIZE_ITERATIONS + 1):
        report.iterations = iteration
        shifted = _shift_pass(l)
        repaired = _repair_constraints(l, shifted)
        if not shifted and not repaired:
            return _finish(l, before, report)
    raise UnplaceableError("no overlap-free constrained arrangement found")


def device_move(l: Layout, device: str, x: int, y: int) -> LegalizeReport:
    state = backup_state(l)
    try:
        pl = l.placement_of(device)
        dest = Placement(origin=(x, y), size=pl.size)
        l.check_bounds(device, dest)
        before = _origins(l)
        warnings = []
        group = l.array_group_of(device)
        if group is not None:
            group.members.remove(device)
            warnings.append(f"{device} left array group {group.id}")
            if not group.members:
                del l.array_groups[group.id]
        pl.origin = (x, y)
        pair = l.sym_pair_of(device)
        if pair is not None:
            _mirror_partner(l, pair, anchor=device)
        report = legalize(l)
        report.warnings = warnings
        return _finish(l, before, report)
    except Exception:
        restore_state(l, state)
        raise


def device_swap(l: Layout, vi: str, vj: str) -> LegalizeReport:
    state = backup_state(l)
    try:
        pi, pj = l.placement_of(vi), l.placement_of(vj)
        before = _origins(l)
        if vi != vj:
            pi.origin, pj.origin = pj.origin, pi.origin
            gi, gj = l.array_group_of(vi), l.array_group_of(vj)
            if gi is not None and gi is gj:
                a, b = gi.members.index(vi), gi.members.index(vj)
                gi.members[a], gi.members[b] = gi.members[b], gi.members[a]
        report = legalize(l)
        return _finish(l, before, report)
    except Exception:
        restore_state(l, state)
        raise


def sym_add(
    l: Layout,
    vi: str,
    vj: str,
    axis: int | None = None,
    axis2: int | None = None,
) -> LegalizeReport:
    state = backup_state(l)
    try:
        if axis is not None and axis2 is not None:
            raise ValueError("give axis or axis2, not both")
        pa, pb = l.placement_of(vi), l.placement_of(vj)
        existing_i, existing_j = l.sym_pair_of(vi), l.sym_pair_of(vj)
        same = existing_i is not None and existing_i is existing_j
        if existing_i is not None and not same:
            raise SymConflictError(vi)
        if existing_j is not None and not same:
            raise SymConflictError(vj)
        if vi != vj and pa.size[0] % 2 != pb.size[0] % 2:
            raise SymInfeasibleError(
                f"widths of {vi} and {vj} differ in parity; no integer mirror exists"
            )
        if axis is not None:
            axis2 = 2 * axis
        if axis2 is not None:
            if vi == vj and axis2 % 2 != pa.size[0] % 2:
                raise SymInfeasibleError(
                    f"doubled axis {axis2} cannot center {vi} of width {pa.size[0]}"
                )
        elif vi == vj:
            axis2 = pa.center_x2()
        else:
            axis2 = (pa.center_x2() + pb.center_x2()) // 2
        before = _origins(l)
        if same:
            existing_i.axis2 = axis2
        else:
            l.sym_pairs.append(SymPair(a=vi, b=vj, axis2=axis2))
        pair = l.sym_pair_of(vi)
        mirrored_x2 = 2 * axis2 - pa.center_x2()
        if not pair.is_self() and not (
            0 <= (mirrored_x2 - pb.size[0]) // 2 <= l.grid.width - pb.size[0]
        ):
            raise SymInfeasibleError(
                f"axis places {vj} outside the grid"
            )
        _mirror_partner(l, pair, anchor=vi)
        l.check_bounds(vj, pb)
        report = legalize(l)
        return _finish(l, before, report)
    except Exception:
        restore_state(l, state)
        raise


def array_add(
    l: Layout,
    devices: list[str],
    rows: int,
    cols: int,
    group_id: str | None = None,
) -> LegalizeReport:
    state = backup_state(l)
    try:
        for name in devices:
            l.placement_of(name)
        if rows * cols < len(devices):
            raise ShapeTooSmallError(rows, cols, len(devices))
        seen = set()
        for name in devices:
            if name in seen:
                raise ArrayConflictError(name)
            seen.add(name)
            if l.array_group_of(name) is not None:
                raise ArrayConflictError(name)
        if group_id is None:
            n = 1
            while f"g{n}" in l.array_groups:
                n += 1
            group_id = f"g{n}"
        elif group_id in l.array_groups:
            raise GroupExistsError(group_id)
        before = _origins(l)
        min_x = min(l.placement_of(d).origin[0] for d in devices)
        min_y = min(l.placement_of(d).origin[1] for d in devices)
        group = ArrayGroup(
            id=group_id,
            members=list(devices),
            rows=rows,
            cols=cols,
            origin=(min_x, min_y),
        )
        l.array_groups[group_id] = group
        report = legalize(l)
        report.group_id = group_id
        return _finish(l, before, report)
    except Exception:
        restore_state(l, state)
        raise


def array_space(l: Layout, group_id: str, hspace: int, vspace: int) -> LegalizeReport:
    state = backup_state(l)
    try:
        if group_id not in l.array_groups:
            raise UnknownGroupError(group_id)
        if hspace < 0 or vspace < 0:
            raise OutOfBoundsError(group_id, (hspace, vspace))
        before = _origins(l)
        group = l.array_groups[group_id]
        group.hspace, group.vspace = hspace, vspace
        report = legalize(l)
        report.group_id = group_id
        return _finish(l, before, report)
    except Exception:
        restore_state(l, state)
        raise
