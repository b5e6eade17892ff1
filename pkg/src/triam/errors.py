"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError and DataFormatError are
user-input problems (exit 1); NumericError, FeasibilityError and
BacktrackingError abort a run (exit 2); I/O failures exit 3.
"""


class TriamError(Exception):
    """Base class for all package errors."""


class ShapeError(TriamError, ValueError):
    """Operand shapes are not conformable for the requested operation."""


class InfeasibleBoundsError(TriamError, ValueError):
    """A lower bound exceeds an upper bound at some entry."""


class FeasibilityError(TriamError, ValueError):
    """An activation-interval constraint admits no solution at some entry."""


class BacktrackingError(TriamError, RuntimeError):
    """The doubling search exhausted its budget without satisfying the
    majorization condition."""

    def __init__(self, message, last_gap=None):
        super().__init__(message)
        self.last_gap = last_gap


class NumericError(TriamError, RuntimeError):
    """A non-finite value appeared where the contract requires finite ones."""


class ConfigError(TriamError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class DataFormatError(TriamError, ValueError):
    """A dataset file violates the expected format."""
