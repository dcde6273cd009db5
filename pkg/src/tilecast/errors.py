"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration values."""


class ConfigParseError(ConfigError):
    """Malformed config file; carries the offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class OutOfGridError(ValueError):
    """A tile rectangle does not fit inside the grid."""


class PilotShortageError(ValueError):
    """Pilot sequence shorter than the number of streams it must separate."""


class DegenerateStreamError(ValueError):
    """A stream has a non-positive power coefficient; MMF is undefined."""


class PrecoderInfeasibleError(ValueError):
    """The precoder cannot be built (ZF needs more antennas than pilots)."""


class SingularPrecoderError(RuntimeError):
    """A rank-deficient channel estimate; retry with a fresh realization."""


class BoundInfeasibleError(ValueError):
    """Worst-case ZF SINR bound has a non-positive denominator."""


class StarvationError(ValueError):
    """A group rate is zero, so latency is unbounded."""
