"""Line-oriented edit script language bridging dialogue agents and the engines.

Eleven commands cover placement edits (deviceMove, deviceSwap, arrayAdd,
arraySpace, symAdd) and routing edits (netRemove, netReroute, wireWidth,
wireSpacing, netPriority, netTopology).  One command per line, whitespace
tokens, `#` comments.  Wire references use the wireN label form.  Symmetry
axes travel in doubled coordinates so a line between two columns is
expressible.  wwSpacing is accepted as an alias and serializes as
wireSpacing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Union

from . import placement, routing
from .errors import (
    BadNumberError,
    CommandArityError,
    ExecutionError,
    LayoutLabError,
    UnknownCommandError,
)
from .layout import Layout, snapshot_hash

_WIRE_RE = re.compile(r"^wire([0-9]+)$")
_DIRECTIONS = ("horizontal", "vertical", "both")


@dataclass(frozen=True)
class DeviceMove:
    device: str
    x: int
    y: int

    name = "deviceMove"

    def tokens(self) -> list[str]:
        return [self.name, self.device, str(self.x), str(self.y)]


@dataclass(frozen=True)
class DeviceSwap:
    a: str
    b: str

    name = "deviceSwap"

    def tokens(self) -> list[str]:
        return [self.name, self.a, self.b]


@dataclass(frozen=True)
class ArrayAdd:
    group: str
    rows: int
    cols: int
    members: tuple[str, ...]

    name = "arrayAdd"

    def tokens(self) -> list[str]:
        return [self.name, self.group, str(self.rows), str(self.cols), *self.members]


@dataclass(frozen=True)
class ArraySpace:
    group: str
    hspace: int
    vspace: int

    name = "arraySpace"

    def tokens(self) -> list[str]:
        return [self.name, self.group, str(self.hspace), str(self.vspace)]


@dataclass(frozen=True)
class SymAdd:
    a: str
    b: str
    axis2: int | None = None

    name = "symAdd"

    def tokens(self) -> list[str]:
        out = [self.name, self.a, self.b]
        if self.axis2 is not None:
            out.append(str(self.axis2))
        return out


@dataclass(frozen=True)
class NetRemove:
    net: str

    name = "netRemove"

    def tokens(self) -> list[str]:
        return [self.name, self.net]


@dataclass(frozen=True)
class NetReroute:
    net: str

    name = "netReroute"

    def tokens(self) -> list[str]:
        return [self.name, self.net]


@dataclass(frozen=True)
class WireWidth:
    net: str
    wire: int
    width: int

    name = "wireWidth"

    def tokens(self) -> list[str]:
        return [self.name, self.net, f"wire{self.wire}", str(self.width)]


@dataclass(frozen=True)
class WireSpacing:
    net: str
    wire: int
    # either a (net, wire index) pair or a bare device name
    other: tuple[str, int] | str
    space: int
    direction: str = "both"

    name = "wireSpacing"

    def tokens(self) -> list[str]:
        out = [self.name, self.net, f"wire{self.wire}"]
        if isinstance(self.other, str):
            out.append(self.other)
        else:
            out.extend([self.other[0], f"wire{self.other[1]}"])
        out.append(str(self.space))
        if self.direction != "both":
            out.append(self.direction)
        return out


@dataclass(frozen=True)
class NetPriority:
    net: str
    priority: int

    name = "netPriority"

    def tokens(self) -> list[str]:
        return [self.name, self.net, str(self.priority)]


@dataclass(frozen=True)
class NetTopology:
    net: str
    points: tuple[tuple[int, int], ...]

    name = "netTopology"

    def tokens(self) -> list[str]:
        out = [self.name, self.net]
        for x, y in self.points:
            out.extend([str(x), str(y)])
        return out


Command = Union[
    DeviceMove,
    DeviceSwap,
    ArrayAdd,
    ArraySpace,
    SymAdd,
    NetRemove,
    NetReroute,
    WireWidth,
    WireSpacing,
    NetPriority,
    NetTopology,
]

COMMAND_NAMES = (
    "deviceMove",
    "deviceSwap",
    "arrayAdd",
    "arraySpace",
    "symAdd",
    "netRemove",
    "netReroute",
    "wireWidth",
    "wireSpacing",
    "netPriority",
    "netTopology",
)


@dataclass
class CommandScript:
    commands: list[Command] = field(default_factory=list)
    source_lines: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.commands)


@dataclass
class ScannedLine:
    """One source line: either a parsed command or the error it produced."""

    line: int
    source: str
    command: Command | None = None
    error: LayoutLabError | None = None


def _int(token: str, line: int) -> int:
    try:
        return int(token, 10)
    except ValueError:
        raise BadNumberError(line, token) from None


def _wire_index(token: str, line: int) -> int:
    m = _WIRE_RE.match(token)
    if m is None:
        raise BadNumberError(line, token)
    return int(m.group(1))


def _parse_device_move(args: list[str], line: int) -> DeviceMove:
    if len(args) != 3:
        raise CommandArityError(line, "device x y", len(args))
    return DeviceMove(args[0], _int(args[1], line), _int(args[2], line))


def _parse_device_swap(args: list[str], line: int) -> DeviceSwap:
    if len(args) != 2:
        raise CommandArityError(line, "two devices", len(args))
    return DeviceSwap(args[0], args[1])


def _parse_array_add(args: list[str], line: int) -> ArrayAdd:
    if len(args) < 4:
        raise CommandArityError(line, "group rows cols members...", len(args))
    return ArrayAdd(
        args[0], _int(args[1], line), _int(args[2], line), tuple(args[3:])
    )


def _parse_array_space(args: list[str], line: int) -> ArraySpace:
    if len(args) != 3:
        raise CommandArityError(line, "group hspace vspace", len(args))
    return ArraySpace(args[0], _int(args[1], line), _int(args[2], line))


def _parse_sym_add(args: list[str], line: int) -> SymAdd:
    if len(args) not in (2, 3):
        raise CommandArityError(line, "two devices [axis]", len(args))
    axis2 = _int(args[2], line) if len(args) == 3 else None
    return SymAdd(args[0], args[1], axis2)


def _parse_net_remove(args: list[str], line: int) -> NetRemove:
    if len(args) != 1:
        raise CommandArityError(line, "net", len(args))
    return NetRemove(args[0])


def _parse_net_reroute(args: list[str], line: int) -> NetReroute:
    if len(args) != 1:
        raise CommandArityError(line, "net", len(args))
    return NetReroute(args[0])


def _parse_wire_width(args: list[str], line: int) -> WireWidth:
    if len(args) != 3:
        raise CommandArityError(line, "net wireN width", len(args))
    return WireWidth(args[0], _wire_index(args[1], line), _int(args[2], line))


def _direction(token: str, line: int) -> str:
    if token not in _DIRECTIONS:
        raise CommandArityError(line, "direction horizontal|vertical|both", 1)
    return token


def _parse_wire_spacing(args: list[str], line: int) -> WireSpacing:
    # net wireN net wireN space [dir]  |  net wireN device space [dir]
    if len(args) >= 5 and _WIRE_RE.match(args[3]):
        if len(args) not in (5, 6):
            raise CommandArityError(line, "net wireN net wireN space [dir]", len(args))
        direction = _direction(args[5], line) if len(args) == 6 else "both"
        return WireSpacing(
            args[0],
            _wire_index(args[1], line),
            (args[2], _wire_index(args[3], line)),
            _int(args[4], line),
            direction,
        )
    if len(args) in (4, 5):
        direction = _direction(args[4], line) if len(args) == 5 else "both"
        return WireSpacing(
            args[0],
            _wire_index(args[1], line),
            args[2],
            _int(args[3], line),
            direction,
        )
    raise CommandArityError(line, "net wireN (net wireN | device) space [dir]", len(args))


def _parse_net_priority(args: list[str], line: int) -> NetPriority:
    if len(args) != 2:
        raise CommandArityError(line, "net priority", len(args))
    return NetPriority(args[0], _int(args[1], line))


def _parse_net_topology(args: list[str], line: int) -> NetTopology:
    if len(args) < 1 or len(args) % 2 == 0:
        raise CommandArityError(line, "net x y pairs", len(args))
    coords = [_int(t, line) for t in args[1:]]
    points = tuple(zip(coords[0::2], coords[1::2]))
    return NetTopology(args[0], points)


_PARSERS: dict[str, Callable[[list[str], int], Command]] = {
    "deviceMove": _parse_device_move,
    "deviceSwap": _parse_device_swap,
    "arrayAdd": _parse_array_add,
    "arraySpace": _parse_array_space,
    "symAdd": _parse_sym_add,
    "netRemove": _parse_net_remove,
    "netReroute": _parse_net_reroute,
    "wireWidth": _parse_wire_width,
    "wireSpacing": _parse_wire_spacing,
    "wwSpacing": _parse_wire_spacing,
    "netPriority": _parse_net_priority,
    "netTopology": _parse_net_topology,
}


def scan_script(text: str) -> list[ScannedLine]:
    """Parse leniently: every non-blank line yields a command or an error."""
    out: list[ScannedLine] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        name, args = tokens[0], tokens[1:]
        parser = _PARSERS.get(name)
        if parser is None:
            out.append(
                ScannedLine(lineno, body, error=UnknownCommandError(lineno, name))
            )
            continue
        try:
            out.append(ScannedLine(lineno, body, command=parser(args, lineno)))
        except LayoutLabError as exc:
            out.append(ScannedLine(lineno, body, error=exc))
    return out


def parse_script(text: str) -> CommandScript:
    """Parse strictly: the first bad line raises."""
    script = CommandScript()
    for scanned in scan_script(text):
        if scanned.error is not None:
            raise scanned.error
        script.commands.append(scanned.command)
        script.source_lines.append(scanned.line)
    return script


def serialize_script(script: CommandScript) -> str:
    lines = [" ".join(cmd.tokens()) for cmd in script.commands]
    return "\n".join(lines) + ("\n" if lines else "")


def script_of(commands: list[Command]) -> CommandScript:
    return CommandScript(commands=list(commands), source_lines=list(range(1, len(commands) + 1)))


@dataclass
class LogEntry:
    index: int
    command: str
    ops: list[str]
    snapshot_hash: str


def _apply(l: Layout, cmd: Command) -> list[str]:
    """Dispatch one command to the engines; returns the op decomposition."""
    if isinstance(cmd, DeviceMove):
        placement.device_move(l, cmd.device, cmd.x, cmd.y)
        return [f"device_move {cmd.device} ({cmd.x},{cmd.y})"]
    if isinstance(cmd, DeviceSwap):
        placement.device_swap(l, cmd.a, cmd.b)
        return [f"device_swap {cmd.a} {cmd.b}"]
    if isinstance(cmd, ArrayAdd):
        placement.array_add(l, list(cmd.members), cmd.rows, cmd.cols, group_id=cmd.group)
        return [f"array_add {cmd.group} {cmd.rows}x{cmd.cols}"]
    if isinstance(cmd, ArraySpace):
        placement.array_space(l, cmd.group, cmd.hspace, cmd.vspace)
        return [f"array_space {cmd.group} {cmd.hspace} {cmd.vspace}"]
    if isinstance(cmd, SymAdd):
        placement.sym_add(l, cmd.a, cmd.b, axis2=cmd.axis2)
        return [f"sym_add {cmd.a} {cmd.b}"]
    if isinstance(cmd, NetRemove):
        routing.net_remove(l, cmd.net)
        return [f"net_remove {cmd.net}"]
    if isinstance(cmd, NetReroute):
        routing.net_reroute(l, cmd.net)
        return [f"net_remove {cmd.net}", f"route_net {cmd.net}"]
    if isinstance(cmd, WireWidth):
        routing.set_wire_width(l, cmd.net, cmd.wire, cmd.width)
        return [f"set_wire_width {cmd.net} wire{cmd.wire} {cmd.width}"]
    if isinstance(cmd, WireSpacing):
        routing.set_wire_spacing(l, (cmd.net, cmd.wire), cmd.other, cmd.space, cmd.direction)
        return [f"set_wire_spacing {cmd.net} wire{cmd.wire} {cmd.space} {cmd.direction}"]
    if isinstance(cmd, NetPriority):
        routing.set_net_priority(l, cmd.net, cmd.priority)
        return [f"set_net_priority {cmd.net} {cmd.priority}"]
    if isinstance(cmd, NetTopology):
        routing.set_net_topology(l, cmd.net, list(cmd.points))
        return [f"set_net_topology {cmd.net} {len(cmd.points)} points"]
    raise TypeError(f"not a command: {cmd!r}")


def execute(l: Layout, script: CommandScript) -> list[LogEntry]:
    """Run a script in order.

    Each engine op restores state on failure, so a raising command leaves
    the layout exactly as it was before that command; the error carries
    the failing index.
    """
    log: list[LogEntry] = []
    for index, cmd in enumerate(script.commands):
        text = " ".join(cmd.tokens())
        try:
            ops = _apply(l, cmd)
        except LayoutLabError as exc:
            raise ExecutionError(index, text, exc) from exc
        except ValueError as exc:
            raise ExecutionError(index, text, exc) from exc
        log.append(LogEntry(index, text, ops, snapshot_hash(l)))
    return log
