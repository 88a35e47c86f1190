"""Exception hierarchy shared across the platform."""


class FluidWozError(Exception):
    """Base class for all errors raised by this package."""


class NonFinite(FluidWozError):
    """An angle or coordinate was NaN or infinite."""


class IllegalTransition(FluidWozError):
    """A goal lifecycle edge that does not exist was requested."""


class ScenarioError(FluidWozError):
    """Invalid scenario configuration. `field` names the offending entry."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class DuplicateObjectId(ScenarioError):
    pass


class NonPositiveParameter(ScenarioError):
    pass


class OutOfBounds(ScenarioError):
    pass


class SpawnBlocked(ScenarioError):
    pass


class InvalidReference(ScenarioError):
    """resting_on or a holding reference names a missing/unsuitable object."""


class TargetBlocked(FluidWozError):
    """Path target lies in a blocked cell."""


class Unreachable(FluidWozError):
    """No path exists between the requested cells."""


class OutOfReach(FluidWozError):
    """Manipulation started farther from the target than reach_radius."""


class UnknownGoal(FluidWozError):
    """poll() was asked about a goal_id this session never issued."""


class DuplicateMark(FluidWozError):
    """A (command_id, kind) latency mark arrived twice; the first one wins."""


class IncompleteTrace(FluidWozError):
    """Not enough latency marks to compute any breakdown component."""


class EmptyLog(FluidWozError):
    """The log holds no latency_mark events to aggregate."""


class LogError(FluidWozError):
    pass


class IoError(LogError):
    pass


class RefusedExisting(LogError):
    """Refusing to overwrite or silently append to an existing file."""


class SchemaViolation(LogError):
    """Payload shape does not match the declared stream."""


class MalformedLine(LogError):
    def __init__(self, line_no: int, message: str = "malformed line"):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class NonMonotonicTimestamp(LogError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: t_mono_ms decreased")


class MissingScenarioHeader(LogError):
    """Line 1 of a session log must be the embedded scenario event."""


class InvalidRate(LogError):
    """snapshot_hz must divide the tick rate (or be 'every_tick')."""


class InvalidSpeed(FluidWozError):
    """Playback speed factor must be > 0."""


class CommandOutOfRange(FluidWozError):
    """A logged command is stamped before the session start tick."""


class ScriptParseError(FluidWozError):
    def __init__(self, line_no: int, message: str = "cannot parse"):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MalformedMessage(FluidWozError):
    """A client sent JSON the protocol cannot interpret."""


class PortInUse(FluidWozError):
    pass


class InvalidScenario(FluidWozError):
    """Scenario file failed validation before the server bound its port."""
