"""Exception types raised across the package.

Each type derives from the builtin a caller would naturally catch, so code written
against `ValueError` or `RuntimeError` keeps working.
"""


class DatasetError(ValueError):
    """A dataset directory, manifest, or tensor file is invalid."""


class CFLError(ValueError):
    """The finite-difference time step violates the stability bound."""

    def __init__(self, message: str, max_dt: float):
        super().__init__(message)
        self.max_dt = max_dt


class NumericalError(RuntimeError):
    """A NaN or Inf was produced while stepping a solver or training a network."""


class ArtifactMissingError(FileNotFoundError):
    """A prerequisite checkpoint or dataset is not present."""
