"""Incomplete gamma and Beta helpers used by bound formulas and defaults.

scipy only exposes the regularized upper gamma for positive order; the
envelope bounds need negative orders, reached by the downward recursion
Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a, which is stable for the
moderate (a, x) ranges that occur here.
"""

from __future__ import annotations

import math
from functools import lru_cache

import scipy.special as sc

__all__ = ["gamma_upper", "lower_gamma", "beta_fn"]


@lru_cache(maxsize=8192)
def gamma_upper(a: float, x: float) -> float:
    """Upper incomplete gamma integral of t^(a-1) e^(-t) over [x, inf), x > 0.

    The order ``a`` may be zero or negative.
    """
    a = float(a)
    x = float(x)
    if not x > 0.0:
        raise ValueError("gamma_upper requires x > 0")
    if a > 0.0:
        return float(sc.gammaincc(a, x) * sc.gamma(a))
    if a == 0.0:
        return float(sc.exp1(x))
    return (gamma_upper(a + 1.0, x) - x**a * math.exp(-x)) / a


def lower_gamma(a: float, x: float) -> float:
    """Lower incomplete gamma integral over [0, x]; requires a > 0."""
    if not a > 0.0:
        raise ValueError("lower_gamma requires a > 0")
    if x < 0.0:
        raise ValueError("lower_gamma requires x >= 0")
    return float(sc.gammainc(a, x) * sc.gamma(a))


def beta_fn(a: float, b: float) -> float:
    """Euler Beta function; rejects nonpositive arguments.

    Nonpositive arguments are exactly the convergence failures of the
    envelope-bound integrals, so they raise instead of returning the
    analytic continuation.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"beta_fn arguments must be positive, got ({a}, {b})")
    return float(sc.beta(a, b))
