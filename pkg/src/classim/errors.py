"""Exception types shared across the package."""


class ClassimError(Exception):
    """Base class for all errors raised by classim."""


class ValidationError(ClassimError, ValueError):
    """A structural invariant on input data is violated."""


class SolverFailure(ClassimError, RuntimeError):
    """The LP/SDP engine did not return a certified optimum."""


class StrategyOverflowError(ClassimError, RuntimeError):
    """Deterministic-strategy enumeration would exceed the safety cap."""
