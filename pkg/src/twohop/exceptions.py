"""Exception hierarchy shared by every module of the package."""


class TwoHopError(Exception):
    """Base class for all package errors."""


class InvalidInstanceError(TwoHopError, ValueError):
    """Malformed energy profile, gain, deadline or rate specification."""


class UnsupportedInstanceError(TwoHopError):
    """Instance lies outside the solved class (more than two arrivals per node)."""


class NotBracketedError(TwoHopError, ValueError):
    pass


class NoConvergenceError(TwoHopError, RuntimeError):
    pass


class InvalidIntervalError(TwoHopError, ValueError):
    pass


class DegenerateInstanceError(TwoHopError):
    """No admissible crossing / grid point exists for the instance."""


class ClassificationInconsistencyError(TwoHopError, RuntimeError):
    """The region chosen by the classifier produced no feasible candidate."""


class PreconditionViolatedError(TwoHopError, ValueError):
    pass


class ResolutionExceededError(TwoHopError, ValueError):
    """Requested oracle resolution would exceed the state-space budget."""


class SolverSelfCheckError(TwoHopError, RuntimeError):
    """A solver output failed the feasibility or optimality re-verification."""
