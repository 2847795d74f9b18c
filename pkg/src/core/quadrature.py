"""
Cox Stop-Loss - Time Quadrature
===============================

Nodes and weights for integrating over [0, T].
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ParameterDomainError


class QuadratureRule(Enum):
    """Supported time-quadrature rules."""
    GAUSS_LEGENDRE = "gauss_legendre"
    TRAPEZOID = "trapezoid"

    @classmethod
    def from_string(cls, s: str) -> QuadratureRule:
        mapping = {
            "gauss_legendre": cls.GAUSS_LEGENDRE,
            "gauss-legendre": cls.GAUSS_LEGENDRE,
            "gl": cls.GAUSS_LEGENDRE,
            "trapezoid": cls.TRAPEZOID,
        }
        try:
            return mapping[s.lower()]
        except KeyError:
            raise ParameterDomainError(f"unknown quadrature rule '{s}'") from None


def time_nodes(T: float, rule: QuadratureRule | str = QuadratureRule.GAUSS_LEGENDRE,
               n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes and weights on [0, T].

    Gauss-Legendre nodes are interior points; the trapezoid rule uses n
    equally spaced points including both end points.
    """
    if isinstance(rule, str):
        rule = QuadratureRule.from_string(rule)
    if not T > 0:
        raise ParameterDomainError(f"horizon T must be positive, got {T}")

    if rule is QuadratureRule.GAUSS_LEGENDRE:
        if n < 1:
            raise ParameterDomainError("Gauss-Legendre needs at least one node")
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * T * (x + 1.0), 0.5 * T * w

    if n < 2:
        raise ParameterDomainError("trapezoid rule needs at least two nodes")
    nodes = np.linspace(0.0, T, n)
    weights = np.full(n, T / (n - 1))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return nodes, weights
