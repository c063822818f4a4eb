class ImpatientWalkError(Exception):
    """Base class for every error raised by this package."""


class DriftRangeError(ImpatientWalkError, ValueError):
    """A drift value b(x) falls outside the open interval (-1, 1)."""


class ScheduleError(ImpatientWalkError, ValueError):
    """A passage schedule violates s_0 = 1 or its declared monotonicity."""


class UnknownVertexError(ImpatientWalkError, ValueError):
    """A vertex (or step) is not part of the kernel's graph."""


class HorizonError(ImpatientWalkError, ValueError):
    """A query reaches past the recorded trajectory or an enumeration limit."""


class UnsupportedError(ImpatientWalkError, ValueError):
    """The requested graph or kernel/schedule combination is not handled."""


class ConfigError(ImpatientWalkError, ValueError):
    """An experiment configuration could not be parsed or validated."""


class InconclusiveError(ImpatientWalkError, RuntimeError):
    """A classification could not be certified within its horizon."""


class GateFailure(ImpatientWalkError, RuntimeError):
    """A prerequisite check of a harness experiment failed."""
