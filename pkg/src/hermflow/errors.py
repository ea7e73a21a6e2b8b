"""Package-wide error types, mapped to CLI exit codes."""
from __future__ import annotations


class ValidationError(ValueError):
    """Bad parameters or violated preconditions (CLI exit 2)."""


class NonConvergenceError(RuntimeError):
    """A numerical routine failed to meet its tolerance (CLI exit 3).

    Carries the best achieved tolerance when known.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class EmptyCloudError(ValidationError):
    """A nodal point cloud was empty where a distance was requested."""
