"""Exception types shared across the package."""


class DeepRandomError(Exception):
    """Base class for package-specific failures."""


class CapabilityError(DeepRandomError):
    """An exact mode was requested beyond the size it supports."""


class DispersionConstraintError(DeepRandomError):
    """No scrambling distribution satisfying the weight-band constraint was found."""


class ThresholdInfeasibleError(DeepRandomError):
    """Exhaustive permutation search found no permutation meeting the payoff target."""

    def __init__(self, message, best_value=None, best_perm=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_perm = best_perm


class NotMatureError(DeepRandomError):
    """A generator sequence was asked to elect before reaching its maturity step."""


class ReconciliationFailedError(DeepRandomError):
    """Key disagreement survived all reconciliation passes."""


class KernelConsistencyError(DeepRandomError):
    """A composed permutation kernel assigned unequal mass inside a support-size class."""
