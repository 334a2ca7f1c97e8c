"""Exception hierarchy shared by the simulation modules."""


class MemcircError(Exception):
    """Base class for all errors raised by memcirc."""


class InvalidArgument(MemcircError, ValueError):
    """A precondition on an argument or configuration value is violated."""


class InvalidNetwork(InvalidArgument):
    pass


class SimulationAborted(MemcircError):
    """A model callback failed mid-integration."""

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last valid time {last_time!r})")
        self.last_time = last_time


class ConvergenceError(MemcircError):
    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class CurrentPauseError(MemcircError):
    pass


class NoAsymptoteError(MemcircError):
    pass


class ResonanceError(MemcircError):
    pass


class ChatteringError(MemcircError):
    pass
