"""Regularized incomplete beta function I_x(a, b).

Continued-fraction evaluation (modified Lentz), with the symmetry fallback
I_x(a,b) = 1 - I_{1-x}(b,a) when x is past the distribution bulk. This is
the strength transform's numerical core, so it is implemented here rather
than pulled from a library: the paired quadrature oracle in the test suite
must stay independent of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SpecPolicyError

_MAX_ITER = 300
_EPS = 1e-15
_TINY = 1e-300


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of the beta law; both must be positive."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise SpecPolicyError("INVALID_SHAPE", f"shapes must be positive, got ({self.a}, {self.b})")


def log_beta(p: BetaParams) -> float:
    """ln B(a, b) via log-gamma."""
    return math.lgamma(p.a) + math.lgamma(p.b) - math.lgamma(p.a + p.b)


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz algorithm."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        # even step
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + num / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + num / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def reg_inc_beta(x: float, p: BetaParams) -> float:
    """I_x(a, b), the regularized incomplete beta function, for x in [0, 1]."""
    a, b = p.a, p.b
    if not (0.0 <= x <= 1.0):
        raise SpecPolicyError("DOMAIN", f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        a * math.log(x) + b * math.log1p(-x) - log_beta(p)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(x, a, b) / a
    return 1.0 - math.exp(
        b * math.log1p(-x) + a * math.log(x) - log_beta(p)
    ) * _beta_cf(1.0 - x, b, a) / b
