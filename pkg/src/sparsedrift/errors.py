"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument mistakes (wrong length,
negative tolerance, ...); the classes below name failure modes that callers
may want to catch individually.
"""


class SimulationDiverged(RuntimeError):
    """The Euler scheme produced a non-finite or exploding state."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"simulation diverged at step {step}")


class UnsupportedBasis(ValueError):
    """The dictionary cannot supply what was asked of it (e.g. Lipschitz bounds)."""


class MissingNoise(ValueError):
    """An operation needed recorded Brownian increments but the trajectory has none."""


class DegenerateCoordinate(ValueError):
    """A coordinate has zero curvature and no penalty; its update is undefined."""


class DegeneratePreEstimator(ValueError):
    """Every pre-estimate coordinate was pinned; adaptive weights are all infinite."""


class DegenerateParameter(ValueError):
    """A requested sparse parameter has no nonzero coordinates."""


class EmptySupport(ValueError):
    """The estimated support is empty; the standardized statistic is undefined."""


class SingularInformation(RuntimeError):
    """An active-block information matrix was numerically singular."""


class CvFailed(RuntimeError):
    """Every cross-validation fold was degenerate."""
