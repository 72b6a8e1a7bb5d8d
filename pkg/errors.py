"""
Exception hierarchy for ptgain.

ScenarioError covers bad input (exit code 1 at the command line),
NumericalError covers failures during a computation (exit code 2).
"""


class PtGainError(Exception):
    """Base class for every error raised by ptgain."""


class ScenarioError(PtGainError, ValueError):
    """Invalid parameters, malformed scenario files or infeasible targets."""


class NumericalError(PtGainError, ArithmeticError):
    """A computation produced NaN/inf, broke an invariant or hit a singularity."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class LeakageError(NumericalError):
    """Population reached the highest Fock level of a truncated mode."""
