"""Grid routing: A* pathfinding plus the net-level routing commands.

Two routing layers.  Layer 1 prefers horizontal runs, layer 2 vertical;
moving against a layer's preference costs one extra unit, and a via costs
`via_cost` (default 3).  Cells are (layer, x, y).  Ties break toward lower
y, then lower x, then lower layer, so every search is deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import (
    OutOfBoundsError,
    UnknownNetError,
    UnknownWireError,
    UnroutableError,
    WidthConflictError,
)
from .layout import (
    Layout,
    NetRoute,
    Point,
    SpacingRule,
    Wire,
    backup_state,
    restore_state,
)

Cell = tuple[int, int, int]  # (layer, x, y)

SNAP_RADIUS = 2
LAYERS = (1, 2)


@dataclass
class RoutingGrid:
    width: int
    height: int
    blocked: set[Cell] = field(default_factory=set)
    soft_cost: dict[Cell, int] = field(default_factory=dict)
    via_cost: int = 3
    direction_cost: int = 1
    # Cells a wide wire's flanks may cover even though its centerline cannot:
    # the bodies of the routed net's own terminal devices (landing regions).
    width_exempt: set[Cell] = field(default_factory=set)

    def in_bounds(self, cell: Cell) -> bool:
        layer, x, y = cell
        return layer in LAYERS and 0 <= x < self.width and 0 <= y < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked


@dataclass
class PathQuery:
    sources: set[Cell]
    targets: set[Cell]
    waypoints: list[Point] = field(default_factory=list)
    width: int = 1


@dataclass
class RouteAllReport:
    order: list[str] = field(default_factory=list)
    routed: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)


def width_offsets(width: int) -> range:
    """Symmetric expansion offsets for a wire of the given width."""
    return range(-((width - 1) // 2), width // 2 + 1)


def wire_occupied_cells(wire: Wire, width: int | None = None) -> set[Cell]:
    """Cells a wire covers after widening perpendicular to each segment."""
    w = wire.width if width is None else width
    cells: set[Cell] = set()
    path = wire.path
    if len(path) == 1:
        x, y = path[0]
        for dx in width_offsets(w):
            for dy in width_offsets(w):
                cells.add((wire.layer, x + dx, y + dy))
        return cells
    for (x1, y1), (x2, y2) in zip(path, path[1:]):
        horizontal = y1 == y2
        for px, py in ((x1, y1), (x2, y2)):
            for off in width_offsets(w):
                if horizontal:
                    cells.add((wire.layer, px, py + off))
                else:
                    cells.add((wire.layer, px + off, py))
    return cells


def net_occupied_cells(l: Layout, net: str) -> set[Cell]:
    route = l.nets.get(net)
    if route is None:
        return set()
    cells: set[Cell] = set()
    for wire in route.wires:
        cells |= wire_occupied_cells(wire)
    return cells


def _expand(cells: set[Cell], s: int, direction: str) -> set[Cell]:
    """Same-layer cells at directional distance < s from any input cell."""
    if s <= 0:
        return set(cells)
    out: set[Cell] = set()
    for layer, x, y in cells:
        if direction == "horizontal":
            for d in range(-s + 1, s):
                out.add((layer, x + d, y))
        elif direction == "vertical":
            for d in range(-s + 1, s):
                out.add((layer, x, y + d))
        else:
            for dx in range(-s + 1, s):
                for dy in range(-s + 1, s):
                    out.add((layer, x + dx, y + dy))
    return out


def _device_cells(l: Layout, device: str) -> set[Cell]:
    return {(1, x, y) for (x, y) in l.placement_of(device).cells()}


def _wire_by_id(l: Layout, net: str, wire_id: int) -> Wire | None:
    route = l.nets.get(net)
    if route is None:
        return None
    for wire in route.wires:
        if wire.index == wire_id:
            return wire
    return None


def _all_pin_cells(l: Layout) -> set[Cell]:
    cells = set()
    for name, pl in l.placements.items():
        for pin in pl.pins:
            x, y = pl.pin_position(pin)
            cells.add((1, x, y))
    return cells


def build_grid(l: Layout, net: str | None = None) -> RoutingGrid:
    """Blockage map for routing `net`: bodies, foreign wires, spacing halos."""
    blocked: set[Cell] = set()
    for name, pl in l.placements.items():
        blocked |= {(1, x, y) for (x, y) in pl.cells()}
    for other, route in l.nets.items():
        if other == net:
            continue
        blocked |= net_occupied_cells(l, other)
    if net is not None:
        for rule in l.spacing_rules:
            subject_net = rule.subject[0]
            if subject_net == net:
                if isinstance(rule.other, str):
                    blocked |= _expand(
                        _device_cells(l, rule.other), rule.min_space, rule.direction
                    )
                elif rule.other[0] != net:
                    wire = _wire_by_id(l, *rule.other)
                    if wire is not None:
                        blocked |= _expand(
                            wire_occupied_cells(wire), rule.min_space, rule.direction
                        )
            elif (
                not isinstance(rule.other, str)
                and rule.other[0] == net
                and subject_net != net
            ):
                wire = _wire_by_id(l, *rule.subject)
                if wire is not None:
                    blocked |= _expand(
                        wire_occupied_cells(wire), rule.min_space, rule.direction
                    )
    blocked -= _all_pin_cells(l)
    exempt: set[Cell] = set()
    if net is not None:
        for dev_name, _ in l.netlist.nets.get(net, []):
            if dev_name in l.placements:
                exempt |= _device_cells(l, dev_name)
    return RoutingGrid(
        width=l.grid.width,
        height=l.grid.height,
        blocked=blocked,
        width_exempt=exempt,
    )


def _passable_for_width(g: RoutingGrid, cell: Cell, width: int) -> bool:
    if not g.passable(cell):
        return False
    if width <= 1:
        return True
    layer, x, y = cell
    for dx in width_offsets(width):
        for dy in width_offsets(width):
            flank = (layer, x + dx, y + dy)
            if flank == cell:
                continue
            if not g.in_bounds(flank):
                return False
            if flank in g.blocked and flank not in g.width_exempt:
                return False
    return True


def _heuristic(cell: Cell, targets: set[Cell]) -> int:
    _, x, y = cell
    return min(abs(x - tx) + abs(y - ty) for (_, tx, ty) in targets)


def _neighbors(g: RoutingGrid, cell: Cell):
    layer, x, y = cell
    horizontal_layer = layer == 1
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        step = 1
        if (dy != 0 and horizontal_layer) or (dx != 0 and not horizontal_layer):
            step += g.direction_cost
        yield (layer, x + dx, y + dy), step
    yield ((2 if layer == 1 else 1), x, y), g.via_cost


def _search(g: RoutingGrid, sources: set[Cell], targets: set[Cell], width: int):
    """One A* run; returns (cost, path) or raises UnroutableError."""
    usable_sources = [c for c in sources if _passable_for_width(g, c, width)]
    usable_targets = {c for c in targets if g.passable(c)}
    if not usable_sources or not usable_targets:
        raise UnroutableError("no usable endpoint")
    best: dict[Cell, int] = {}
    parent: dict[Cell, Cell] = {}
    heap = []
    for cell in sorted(usable_sources, key=lambda c: (c[2], c[1], c[0])):
        best[cell] = 0
        layer, x, y = cell
        heapq.heappush(heap, (_heuristic(cell, usable_targets), y, x, layer))
    while heap:
        f, y, x, layer = heapq.heappop(heap)
        cell = (layer, x, y)
        g_cost = best[cell]
        if f - _heuristic(cell, usable_targets) > g_cost:
            continue
        if cell in usable_targets:
            path = [cell]
            while cell in parent:
                cell = parent[cell]
                path.append(cell)
            path.reverse()
            return g_cost, path
        for nxt, step in _neighbors(g, cell):
            if not _passable_for_width(g, nxt, width):
                continue
            cost = g_cost + step + g.soft_cost.get(nxt, 0)
            if nxt not in best or cost < best[nxt]:
                best[nxt] = cost
                parent[nxt] = cell
                nl, nx, ny = nxt
                heapq.heappush(
                    heap, (cost + _heuristic(nxt, usable_targets), ny, nx, nl)
                )
    raise UnroutableError("no path")


def _snap_disk(g: RoutingGrid, point: Point, radius: int = SNAP_RADIUS) -> set[Cell]:
    x, y = point
    cells = set()
    for layer in LAYERS:
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                if abs(dx) + abs(dy) <= radius:
                    cells.add((layer, x + dx, y + dy))
    return {c for c in cells if g.passable(c)}


def astar_path(g: RoutingGrid, q: PathQuery) -> list[Cell]:
    """Minimum-cost path visiting each waypoint's snap disk in order."""
    path: list[Cell] = []
    sources = set(q.sources)
    for waypoint in q.waypoints:
        disk = _snap_disk(g, waypoint)
        if not disk:
            raise UnroutableError(f"waypoint {waypoint} unreachable")
        _, leg = _search(g, sources, disk, q.width)
        path.extend(leg if not path else leg[1:])
        sources = {leg[-1]}
    _, leg = _search(g, sources, set(q.targets), q.width)
    path.extend(leg if not path else leg[1:])
    return path


def _paths_to_wires(path: list[Cell], start_index: int, widths) -> list[Wire]:
    """Split a cell path into per-layer wires.

    A via shows up as consecutive cells sharing (x, y) on both layers, so the
    transition point lands at the end of one run and the start of the next.
    """
    wires: list[Wire] = []
    index = start_index
    run: list[Point] = []
    run_layer = path[0][0]
    for layer, x, y in path:
        if layer != run_layer:
            wires.append(
                Wire(index=index, layer=run_layer, path=run, width=widths(index))
            )
            index += 1
            run = []
            run_layer = layer
        run.append((x, y))
    wires.append(Wire(index=index, layer=run_layer, path=run, width=widths(index)))
    return wires


def _net_width_hint(l: Layout, net: str) -> int:
    """Conservative search width: the widest override recorded for the net."""
    widths = [w for (n, _), w in l.width_overrides.items() if n == net]
    return max(widths, default=1)


def route_net(l: Layout, net: str) -> NetRoute:
    """Fresh-route a net: clear wires, then join pins to a growing tree."""
    if net not in l.netlist.nets:
        raise UnknownNetError(net)
    state = backup_state(l)
    try:
        l.nets[net] = NetRoute(net=net, wires=[], routed=False)
        pins = [pos for (_, _, pos) in l.pin_positions(net)]
        route = l.nets[net]
        if len(pins) < 2:
            route.routed = True
            return route
        guides = l.topology_guides.get(net, [])
        width = _net_width_hint(l, net)
        tree: set[Cell] = {(1, *pins[0])}
        remaining = pins[1:]
        next_index = 1
        first_connection = True
        while remaining:
            def tree_distance(pin: Point) -> int:
                return min(abs(pin[0] - x) + abs(pin[1] - y) for (_, x, y) in tree)

            nearest = min(remaining, key=lambda p: (tree_distance(p), remaining.index(p)))
            remaining.remove(nearest)
            source = (1, *nearest)
            if source in tree:
                continue
            grid = build_grid(l, net=net)
            query = PathQuery(
                sources={source},
                targets=set(tree),
                waypoints=list(guides) if first_connection else [],
                width=width,
            )
            try:
                path = astar_path(grid, query)
            except UnroutableError as exc:
                raise UnroutableError(net) from exc
            wires = _paths_to_wires(
                path, next_index, lambda i: l.width_overrides.get((net, i), 1)
            )
            route.wires.extend(wires)
            next_index += len(wires)
            tree |= set(path)
            first_connection = False
        route.routed = True
        return route
    except Exception:
        restore_state(l, state)
        raise


def route_all(l: Layout) -> RouteAllReport:
    """Route stale nets in descending priority, names ascending on ties."""
    report = RouteAllReport()
    names = sorted(l.netlist.nets, key=lambda n: (-l.priority_of(n), n))
    for net in names:
        route = l.nets.get(net)
        if route is not None and route.routed:
            continue
        if len(l.netlist.nets[net]) < 2:
            continue
        report.order.append(net)
        try:
            route_net(l, net)
            report.routed.append(net)
        except UnroutableError as exc:
            report.failed.append((net, str(exc)))
    return report


def net_remove(l: Layout, net: str) -> None:
    if net not in l.netlist.nets:
        raise UnknownNetError(net)
    l.nets[net] = NetRoute(net=net, wires=[], routed=False)


def net_reroute(l: Layout, net: str) -> NetRoute:
    state = backup_state(l)
    try:
        net_remove(l, net)
        return route_net(l, net)
    except Exception:
        restore_state(l, state)
        raise


def _min_distance(cells_a: set[Cell], cells_b: set[Cell], direction: str) -> int | None:
    """Smallest same-layer directional distance between two cell sets."""
    best: int | None = None
    for la, xa, ya in cells_a:
        for lb, xb, yb in cells_b:
            if la != lb:
                continue
            if direction == "horizontal":
                if ya != yb:
                    continue
                d = abs(xa - xb)
            elif direction == "vertical":
                if xa != xb:
                    continue
                d = abs(ya - yb)
            else:
                d = max(abs(xa - xb), abs(ya - yb))
            if best is None or d < best:
                best = d
    return best


def set_wire_width(l: Layout, net: str, wire_id: int, width: int) -> None:
    """Record a width override and widen the live wire, displacing losers."""
    if net not in l.netlist.nets:
        raise UnknownNetError(net)
    if width < 1:
        raise ValueError("wire width must be >= 1")
    wire = _wire_by_id(l, net, wire_id)
    if wire is None:
        raise UnknownWireError(net, wire_id)
    state = backup_state(l)
    try:
        l.width_overrides[(net, wire_id)] = width
        if width == wire.width:
            return
        wire.width = width
        pins = _all_pin_cells(l)
        for _ in range(10):
            subject_cells = net_occupied_cells(l, net) - pins
            conflict = None
            for other in sorted(l.nets):
                if other == net:
                    continue
                if subject_cells & (net_occupied_cells(l, other) - pins):
                    conflict = other
                    break
            if conflict is None:
                return
            loser = net if l.priority_of(conflict) > l.priority_of(net) else conflict
            try:
                net_reroute(l, loser)
            except UnroutableError as exc:
                raise WidthConflictError(net, f"wire{wire_id}", width) from exc
            if loser == net and _wire_by_id(l, net, wire_id) is None:
                raise WidthConflictError(net, f"wire{wire_id}", width)
        raise WidthConflictError(net, f"wire{wire_id}", width)
    except Exception:
        restore_state(l, state)
        raise


def set_wire_spacing(
    l: Layout,
    subject: tuple[str, int],
    other: tuple[str, int] | str,
    min_space: int,
    direction: str = "both",
) -> None:
    """Store a spacing rule; reroute the subject net if it sits too close."""
    if min_space < 0:
        raise ValueError("spacing must be >= 0")
    if direction not in ("horizontal", "vertical", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    subject_net, subject_wire = subject
    if subject_net not in l.netlist.nets:
        raise UnknownNetError(subject_net)
    if _wire_by_id(l, subject_net, subject_wire) is None:
        raise UnknownWireError(subject_net, subject_wire)
    if isinstance(other, str):
        l.placement_of(other)
        other_cells = _device_cells(l, other)
    else:
        if other[0] not in l.netlist.nets:
            raise UnknownNetError(other[0])
        other_wire = _wire_by_id(l, *other)
        if other_wire is None:
            raise UnknownWireError(other[0], other[1])
        other_cells = wire_occupied_cells(other_wire)
    state = backup_state(l)
    try:
        rule = SpacingRule(
            subject=subject, other=other, min_space=min_space, direction=direction
        )
        l.spacing_rules.append(rule)
        if min_space == 0:
            return
        current = _min_distance(
            net_occupied_cells(l, subject_net), other_cells, direction
        )
        if current is not None and current < min_space:
            net_reroute(l, subject_net)
            after = _min_distance(
                net_occupied_cells(l, subject_net), other_cells, direction
            )
            if after is not None and after < min_space:
                raise UnroutableError(f"{subject_net} at spacing {min_space}")
    except Exception:
        restore_state(l, state)
        raise


def set_net_priority(l: Layout, net: str, priority: int) -> None:
    """Set a net's priority; lower-priority routes sitting on its pins go stale."""
    if net not in l.netlist.nets:
        raise UnknownNetError(net)
    if l.priority_of(net) == priority:
        l.priorities[net] = priority
        return
    l.priorities[net] = priority
    pin_cells = {(1, *pos) for (_, _, pos) in l.pin_positions(net)}
    for other, route in l.nets.items():
        if other == net or not route.routed:
            continue
        if l.priority_of(other) < priority and net_occupied_cells(l, other) & pin_cells:
            route.routed = False


def set_net_topology(l: Layout, net: str, guides: list[Point]) -> None:
    """Store ordered guide points; the next routing pass follows them."""
    if net not in l.netlist.nets:
        raise UnknownNetError(net)
    for x, y in guides:
        if not (0 <= x < l.grid.width and 0 <= y < l.grid.height):
            raise OutOfBoundsError(net, (x, y))
    if guides:
        l.topology_guides[net] = [tuple(p) for p in guides]
    else:
        l.topology_guides.pop(net, None)
    route = l.nets.get(net)
    if route is not None:
        route.routed = False

