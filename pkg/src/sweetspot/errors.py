"""Exception and warning types shared across the package."""


class SweetspotError(Exception):
    """Base class for errors raised by this package."""


class SingularKernel(SweetspotError):
    """A covariance matrix could not be factorised even after jitter escalation."""


class NoFeasibleCentre(SweetspotError):
    """The optimiser produced no candidate satisfying the feasibility test."""


class OutOfBounds(SweetspotError, ValueError):
    """A point lies outside the feasible box of a benchmark."""


class DegenerateDataWarning(UserWarning):
    """Model fitting fell back to default hyperparameters (e.g. constant responses)."""
