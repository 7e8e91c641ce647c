"""Exception hierarchy shared by all occlust modules."""


class OcclustError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(OcclustError):
    """Input data violates a precondition (non-finite, asymmetric, zero vector, ...)."""


class ParameterError(OcclustError):
    """A hyperparameter is out of range for the given data (k >= n, empty grid, ...)."""


class NumericalError(OcclustError):
    """A factorization or solve failed (matrix not SPD, singular system, ...)."""


class AffinityError(NumericalError):
    """Perplexity bisection failed to reach the target entropy."""


class DivergenceError(NumericalError):
    """An iterative optimization produced non-finite values."""


class DegeneracyError(OcclustError):
    """The input structure is too degenerate for the requested output
    (disconnected graph, no positive eigenvalues, isolated vertex, ...)."""


class UndefinedMetricError(OcclustError):
    """A metric is undefined for the given labeling (zero pairs, < 2 clusters)."""


class SelectionError(OcclustError):
    """Best-model or cluster-count selection had no valid candidate."""


class LoadError(OcclustError):
    """A corpus or config file could not be parsed."""


class ConfigError(LoadError):
    """An experiment configuration is malformed."""


class ContractError(OcclustError):
    """An API contract was violated by the caller (wrong stage order, length mismatch)."""


class DegenerateMetricWarning(UserWarning):
    """Flag emitted when ARI/AMI fall back to 0 on a degenerate denominator."""
