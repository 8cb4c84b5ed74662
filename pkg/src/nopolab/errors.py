"""Exception types shared across the package."""


class NopolabError(Exception):
    """Base class for all nopolab errors."""


class ParameterError(NopolabError):
    """Invalid physical or configuration parameters."""


class ScalingError(NopolabError):
    """Requested rescaling is undefined (e.g. critical frame with g = 0)."""


class ThresholdDomainError(NopolabError):
    """A below-threshold perturbative formula was evaluated at mu >= 1."""


class EstimationError(NopolabError):
    """Estimator preconditions not met (series too short, missing data)."""


class MissingRecordError(NopolabError):
    """A required trajectory record (e.g. noise increments) was not stored."""


class FaultBudgetError(NopolabError):
    """More than the tolerated fraction of trajectories diverged."""
