from typing import Any, Dict, Optional


class BrakkeLabError(Exception):
    """Base class for every error raised by the library."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}

    def __str__(self):
        error_str = super().__str__()
        for key, value in self.context.items():
            error_str += f"\n  {key}: {value}"
        return error_str


class InvalidMesh(BrakkeLabError):
    """Raised by build_mesh when the input is not a valid surface."""


class NonManifold(InvalidMesh):
    pass


class DegenerateFace(InvalidMesh):
    pass


class InconsistentOrientation(InvalidMesh):
    pass


class NonFiniteInput(BrakkeLabError):
    pass


class NonPositiveScale(BrakkeLabError):
    pass


class PreconditionUnverified(BrakkeLabError):
    pass


class InvalidBall(BrakkeLabError):
    pass


class NegativeSample(BrakkeLabError):
    pass


# Numerical failures (exit code 3 in the CLI)
class NumericalFailure(BrakkeLabError):
    pass


class NumericalDegeneracy(NumericalFailure):
    pass


class SupNormViolation(NumericalFailure):
    pass


class MeshDegenerated(NumericalFailure):
    pass


class InsufficientTail(NumericalFailure):
    pass


class TimeAfterCenter(NumericalFailure):
    pass


class EmptySlice(NumericalFailure):
    pass


class InnerBallEmpty(NumericalFailure):
    pass


class NonNegativeTime(NumericalFailure):
    pass


# Trajectory coverage problems
class CoverageError(BrakkeLabError):
    pass


class WindowOutOfRange(CoverageError):
    pass


class WindowNotCovered(CoverageError):
    pass


class NoSnapshotNearTarget(CoverageError):
    pass


# Verification failures (exit code 4 in the CLI)
class VerificationFailure(BrakkeLabError):
    pass


class MissingArtifacts(VerificationFailure):
    pass
