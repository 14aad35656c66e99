"""Exception hierarchy shared across the package."""


class LesLabError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteSample(LesLabError):
    """A test function returned a non-finite value at a quadrature node."""


class ToleranceNotMet(LesLabError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class EigensolveFailure(LesLabError):
    """The symmetric tridiagonal eigensolver did not converge."""


class OutOfSupport(LesLabError):
    """An eigenvalue configuration lies outside the ensemble support."""


class DegenerateVariance(LesLabError):
    """The variance functional vanishes, so the normalized statistic is undefined."""


class MissingTail(LesLabError):
    """An eigenvalue fell outside [-1, 1] and no tail evaluator was supplied."""


class IllConditioned(LesLabError):
    """A moment matrix is too ill-conditioned for a trustworthy determinant."""


class TooLarge(LesLabError):
    """Requested matrix size exceeds the exact-oracle cap."""


class TooCloseToCut(LesLabError):
    """Evaluation point is too close to [-1, 1] for the quadrature accuracy statement."""


class BranchViolation(LesLabError):
    """Evaluation point lies on a branch cut."""


class OnContour(LesLabError):
    """Evaluation point lies on a parametrix jump contour."""


class WrongNeighborhood(LesLabError):
    """Evaluation point is outside the edge neighborhood of a conformal map."""


class ConfigError(LesLabError):
    """Invalid run configuration."""
