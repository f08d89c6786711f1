"""Exception types shared across the layoutlab engine, agents, and harness."""


class LayoutLabError(Exception):
    """Base class for all layoutlab errors."""


# --- netlist ---------------------------------------------------------------

class NetlistSyntaxError(LayoutLabError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateDeviceError(LayoutLabError):
    def __init__(self, name: str):
        super().__init__(f"duplicate device {name!r}")
        self.name = name


# --- shared referents ------------------------------------------------------

class UnknownDeviceError(LayoutLabError):
    def __init__(self, name: str):
        super().__init__(f"unknown device {name!r}")
        self.name = name


class UnknownNetError(LayoutLabError):
    def __init__(self, name: str):
        super().__init__(f"unknown net {name!r}")
        self.name = name


class UnknownGroupError(LayoutLabError):
    def __init__(self, group: str):
        super().__init__(f"unknown array group {group!r}")
        self.group = group


class UnknownWireError(LayoutLabError):
    def __init__(self, net: str, wire: int):
        super().__init__(f"net {net!r} has no wire{wire}")
        self.net = net
        self.wire = wire


# --- layout / placement ----------------------------------------------------

class OutOfBoundsError(LayoutLabError):
    pass


class OverlapError(LayoutLabError):
    def __init__(self, pairs):
        super().__init__(f"overlapping devices: {pairs}")
        self.pairs = list(pairs)


class EmptyLayoutError(LayoutLabError):
    pass


class SymConflictError(LayoutLabError):
    def __init__(self, device: str):
        super().__init__(f"device {device!r} already in a symmetry pair")
        self.device = device


class SymInfeasibleError(LayoutLabError):
    """Exact integer mirroring impossible (body widths of opposite parity)."""


class ArrayConflictError(LayoutLabError):
    def __init__(self, device: str):
        super().__init__(f"device {device!r} already in an array group")
        self.device = device


class GroupExistsError(LayoutLabError):
    def __init__(self, group: str):
        super().__init__(f"array group {group!r} already exists")
        self.group = group


class ShapeTooSmallError(LayoutLabError):
    pass


class UnplaceableError(LayoutLabError):
    pass


# --- routing ---------------------------------------------------------------

class UnroutableError(LayoutLabError):
    def __init__(self, what: str = "path"):
        super().__init__(f"unroutable: {what}")
        self.what = what


class WidthConflictError(LayoutLabError):
    pass


# --- command language ------------------------------------------------------

class UnknownCommandError(LayoutLabError):
    def __init__(self, line: int, name: str):
        super().__init__(f"line {line}: unknown command {name!r}")
        self.line = line
        self.name = name


class CommandArityError(LayoutLabError):
    def __init__(self, line: int, expected: str, got: int):
        super().__init__(f"line {line}: expected {expected} parameters, got {got}")
        self.line = line
        self.expected = expected
        self.got = got


class BadNumberError(LayoutLabError):
    def __init__(self, line: int, token: str):
        super().__init__(f"line {line}: bad number {token!r}")
        self.line = line
        self.token = token


class ExecutionError(LayoutLabError):
    def __init__(self, index: int, command: str, cause: Exception):
        super().__init__(f"command {index} ({command}) failed: {cause}")
        self.index = index
        self.command = command
        self.cause = cause


# --- validator / envelope --------------------------------------------------

class FormatError(LayoutLabError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class UnknownLabelError(LayoutLabError):
    pass


# --- agents ----------------------------------------------------------------

class MissingSlotError(LayoutLabError):
    def __init__(self, slot: str):
        super().__init__(f"prompt slot {{{slot}}} not provided")
        self.slot = slot


class ModelUnavailableError(LayoutLabError):
    pass


class UnparseableSolutionListError(LayoutLabError):
    pass


class RoutingError(LayoutLabError):
    """Agent message routing failure (bad or missing recipient delimiter)."""


class GroundingFailureError(LayoutLabError):
    pass


class PipelineTerminationError(LayoutLabError):
    """Refinement loop exceeded its iteration bound."""


# --- evaluation ------------------------------------------------------------

class EmptyResultsError(LayoutLabError):
    pass


class CorpusLabelError(LayoutLabError):
    """A synthesized request's label disagrees with the validator."""
