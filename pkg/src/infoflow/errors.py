"""Exception hierarchy shared by every module."""


class InfoFlowError(Exception):
    """Base class for all package errors."""


class OutOfRange(InfoFlowError, ValueError):
    pass


class NegativeConfinement(InfoFlowError, ValueError):
    pass


class BadDimension(InfoFlowError, ValueError):
    pass


class MismatchedResolution(InfoFlowError, ValueError):
    pass


class NonpositiveScale(InfoFlowError, ValueError):
    pass


class DegenerateState(InfoFlowError, ValueError):
    pass


class MassNotNormalized(InfoFlowError, ValueError):
    pass


class ZeroDensityPlateau(InfoFlowError, ValueError):
    pass


class GridMismatch(InfoFlowError, ValueError):
    pass


class InsufficientDerivatives(InfoFlowError, ValueError):
    pass


class NoStationaryState(InfoFlowError, ValueError):
    pass


class BisectionFailure(InfoFlowError, RuntimeError):
    pass


class InnerSolverDiverged(InfoFlowError, RuntimeError):
    pass


class MonotonicityViolation(InfoFlowError, RuntimeError):
    pass


class NonfiniteObjective(InfoFlowError, FloatingPointError):
    pass


class Blowup(InfoFlowError, FloatingPointError):
    pass


class InsufficientDecay(InfoFlowError, ValueError):
    pass


class InsufficientSignal(InfoFlowError, ValueError):
    pass


class NotSymmetric(InfoFlowError, ValueError):
    pass


class ZeroVector(InfoFlowError, ValueError):
    pass


class NegativeStep(InfoFlowError, ValueError):
    pass


class ConfigParse(InfoFlowError, ValueError):
    pass


class UnknownKind(InfoFlowError, ValueError):
    pass


class StepFailure(InfoFlowError, RuntimeError):
    """A JKO step failed inside a trajectory; carries the step index."""

    def __init__(self, n: int, cause: Exception):
        super().__init__(f"step {n} failed: {type(cause).__name__}: {cause}")
        self.n = n
        self.cause = cause
