"""
Cox Stop-Loss - Error Hierarchy
===============================

Every failure the engine reports on purpose derives from EngineError.
The CLI maps these classes onto exit codes.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base exception for engine errors."""
    pass


class ParameterDomainError(EngineError, ValueError):
    """Distribution or model parameter outside its admissible range."""
    pass


class DomainError(EngineError, ValueError):
    """Function argument outside the function's domain."""
    pass


class GridError(DomainError):
    """Time grid is empty, non-monotone or does not start at 0."""
    pass


class CollisionError(EngineError):
    """Inserted jump time coincides with an existing jump time."""
    pass


class PayoffError(EngineError):
    """Payoff returned a negative or non-finite value, or K > M."""
    pass


class InputError(EngineError):
    """Malformed numerical input (e.g. unnormalized severity lattice)."""
    pass


class TruncationError(EngineError):
    """Recursion horizon exhausted before the mass target was reached."""

    def __init__(self, message: str, achieved_mass: float):
        super().__init__(message)
        self.achieved_mass = achieved_mass


class ModelError(EngineError):
    """Operation called with an intensity model it does not support."""
    pass


class NumericError(EngineError, ArithmeticError):
    """Non-finite value produced during an evaluation."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PrecisionLossError(NumericError):
    """Oscillatory quadrature lost all significant digits."""
    pass


class DegenerateConditioningError(NumericError):
    """Conditioning event has zero probability."""
    pass


class ContractViolationError(EngineError):
    """A functional broke its declared contract (e.g. exceeded its bound)."""
    pass


class ConfigError(EngineError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line
