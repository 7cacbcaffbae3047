"""Exception types shared across the package."""


class DegenerateSystemError(RuntimeError):
    """Cholesky factorization failed even after jitter escalation."""


class ObjectiveError(RuntimeError):
    """An objective evaluation failed (crash, timeout, malformed reply)."""


class EmptyHistoryError(RuntimeError):
    """No hyperparameters have been recorded yet."""
