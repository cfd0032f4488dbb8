"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument is outside the physically meaningful domain."""


class ConfigError(ValueError):
    """A configuration file or scenario definition is invalid."""


class EstimationError(RuntimeError):
    """An estimator cannot produce a value from the given counts."""


class FitError(EstimationError):
    """A curve fit has a degenerate design matrix."""


class ReconstructionError(EstimationError):
    """State reconstruction failed (rank-deficient or inconsistent input)."""


class ModelValidityWarning(UserWarning):
    """A parameter leaves the regime where the model assumptions hold."""
