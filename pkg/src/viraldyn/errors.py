"""Exception hierarchy shared by every module of the package."""


class ViraldynError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ViraldynError, ValueError):
    """Parameters, states or configuration values that violate a contract."""


class ContractError(ViraldynError, ValueError):
    """A caller broke an operation precondition (wrong degree, bad step, ...)."""


class BracketError(ViraldynError):
    """Root bracketing failed; carries the last bracket that was tried."""

    def __init__(self, message, lo, hi):
        super().__init__(f"{message} (last bracket [{lo!r}, {hi!r}])")
        self.lo = lo
        self.hi = hi


class InconsistencyError(ViraldynError, ArithmeticError):
    """Internal numerical inconsistency, e.g. an arccos argument far outside [-1, 1]."""


class BlowUpError(ViraldynError, ArithmeticError):
    """The integrator produced a non-finite state."""

    def __init__(self, message, last_good_time):
        super().__init__(f"{message} (last good time t={last_good_time!r})")
        self.last_good_time = last_good_time


class RangeError(ViraldynError, ValueError):
    """A query time lies outside the span covered by a trajectory."""
