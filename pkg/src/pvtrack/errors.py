"""Exception types raised across the package."""


class PVTrackError(Exception):
    """Base class for all errors raised by pvtrack."""


class NonConvergence(PVTrackError):
    """The implicit diode equation could not be solved within the iteration budget."""


class NoLight(PVTrackError):
    """Operation is undefined for a panel with zero irradiance."""


class DutyOutOfRange(PVTrackError):
    pass


class TargetAboveBus(PVTrackError):
    """A boost stage cannot hold the panel above the bus voltage."""


class InvalidK(PVTrackError):
    pass


class OutOfRange(PVTrackError):
    """Profile sampled outside of its defined time span."""


class EmptyTrace(PVTrackError):
    pass


class ZeroIdeal(PVTrackError):
    """A trace record has no ideal power to normalize against."""


class InsufficientSamples(PVTrackError):
    pass


class ZeroFundamental(PVTrackError):
    pass


class ConfigError(PVTrackError):
    """Scenario or panel configuration could not be parsed.

    ``key`` and ``line`` point at the offending entry when known.
    """

    def __init__(self, message, key=None, line=None):
        self.reason = message
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SimulationError(PVTrackError):
    """Wraps a model or controller failure with the step where it happened."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
