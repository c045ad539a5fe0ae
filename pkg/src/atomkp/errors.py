"""Exception hierarchy for the simulator and attack toolchain."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration, including mismatched field parameters."""


class NonInvertibleError(SimulationError):
    """Attempted inversion of zero in a prime field."""


class CurveError(SimulationError):
    """Invalid curve parameters or a point that is not on the curve."""


class ScalarError(SimulationError):
    """Scalar outside the range the hardware algorithm supports (k must be >= 2)."""


class FixtureError(SimulationError):
    """A generated fixture (pattern schedule, toy curve) failed its own validation."""


class ProgramError(SimulationError):
    """Malformed atomic program, e.g. a register read before any write."""


class BusContentionError(SimulationError):
    """Internal invariant violation: two sources scheduled on the bus in one cycle."""


class InputError(SimulationError):
    """An analysis utility was fed unusable input (e.g. an empty execution log)."""


class SegmentationError(SimulationError):
    """Trace length does not match the public timing model."""

    def __init__(self, expected: int, actual: int, message: str = ""):
        self.expected = expected
        self.actual = actual
        super().__init__(
            message or f"trace length {actual} is not a multiple of the atom length {expected}"
        )


class LabelParseError(SimulationError):
    """Classified labels do not match any doubling/addition signature sequence."""

    def __init__(self, offset: int, message: str = ""):
        self.offset = offset
        super().__init__(message or f"label stream diverges from the pattern signatures at offset {offset}")


class TraceFormatError(SimulationError):
    """A trace, annotation or report file does not follow the documented format."""
