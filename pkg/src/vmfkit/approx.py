"""Closed-form approximations to the radial negative entropy ``psi(r)``.

Three levels are provided:

``B``
    ``psi_B'(r) = r (D - r^2) / (1 - r^2)`` with its antiderivative and
    second derivative.
``Tilde1``
    ``psi~1'(r) = (D-1) r / (1 - r^2) + (D-1) r / Q(r)``, where
    ``Q(r) = r^4 + (D-2) r^2 + D - 1``, with exact antiderivative and
    second derivative.
``Tilde2``
    ``psi~2' = refine(psi~1'')``; first derivative only.

``refine`` maps an approximate second derivative ``g''`` to the first
derivative implied by the trace identity,
``(D-1) r / (1 - r^2 - 1/g''(r))``.  ``refine(psi_B'') == psi~1'`` exactly.

All functions accept scalars or numpy arrays for ``r``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NonPositiveDenominator
from .ode import psi_zero

# arithmetic operations in :func:`tilde2_prime` (constants folded per D)
TILDE2_OPERATION_COUNT = 20


class Level(enum.Enum):
    B = "B"
    TILDE1 = "Tilde1"
    TILDE2 = "Tilde2"


def _check(D, r):
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise DomainError("r must lie in [0, 1)")
    return int(D), arr


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# Banerjee-style level


def psi_b_prime(D, r):
    """``r (D - r^2) / (1 - r^2)``."""
    D, r = _check(D, r)
    w = r * r
    return _out(r * (D - w) / (1.0 - w))


def psi_b(D, r):
    """``r^2/2 + (1-D)/2 log(1 - r^2) + psi(0)``."""
    D, r = _check(D, r)
    return _out(0.5 * r * r + 0.5 * (1.0 - D) * np.log1p(-r * r) + psi_zero(D))


def psi_b_second(D, r):
    """``1 + (D-1)(1 + r^2) / (1 - r^2)^2``."""
    D, r = _check(D, r)
    w = r * r
    return _out(1.0 + (D - 1.0) * (1.0 + w) / ((1.0 - w) ** 2))


# ---------------------------------------------------------------------------
# First refinement


def _quartic(D, w):
    return (w + (D - 2.0)) * w + (D - 1.0)


def tilde1_prime(D, r):
    D, r = _check(D, r)
    w = r * r
    c1 = D - 1.0
    return _out(c1 * r / (1.0 - w) + c1 * r / _quartic(D, w))


def tilde1_second(D, r):
    D, r = _check(D, r)
    w = r * r
    c1 = D - 1.0
    a = 1.0 - w
    q = _quartic(D, w)
    p = c1 - (3.0 * w + (D - 2.0)) * w
    return _out(c1 * (1.0 + w) / (a * a) + c1 * p / (q * q))


def _tilde1_rational_integral(D, w):
    """``(D-1)/2 * int_0^w dt / (t^2 + 2 v t + D - 1)`` with ``v = D/2 - 1``."""
    c1 = D - 1.0
    v = 0.5 * D - 1.0
    disc = v * v - c1
    if disc > 0.0:
        s = math.sqrt(disc)
        lo = c1 / (v + s)  # v - s without cancellation
        hi = v + s
        return c1 / (4.0 * s) * (np.log1p(w / lo) - np.log1p(w / hi))
    # complex roots for D <= 6
    sigma = math.sqrt(-disc)
    return c1 / (2.0 * sigma) * (np.arctan((w + v) / sigma) - math.atan(v / sigma))


def tilde1_value(D, r):
    """Antiderivative of :func:`tilde1_prime` with value ``psi(0)`` at ``r = 0``."""
    D, r = _check(D, r)
    w = r * r
    return _out(psi_zero(D) + 0.5 * (1.0 - D) * np.log1p(-w) + _tilde1_rational_integral(D, w))


def tilde1(D, r):
    """``(psi~1, psi~1', psi~1'')`` at ``r``."""
    return tilde1_value(D, r), tilde1_prime(D, r), tilde1_second(D, r)


# ---------------------------------------------------------------------------
# Refinement operator


def refine(g_second, D):
    """Return ``r -> (D-1) r / (1 - r^2 - 1/g_second(r))``.

    The returned callable raises :class:`NonPositiveDenominator` when the
    denominator is not positive at any queried radius.
    """
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    c1 = float(D) - 1.0

    def refined(r):
        arr = np.asarray(r, dtype=float)
        den = 1.0 - arr * arr - 1.0 / np.asarray(g_second(r), dtype=float)
        if np.any(den <= 0.0):
            raise NonPositiveDenominator("refinement denominator 1 - r^2 - 1/g'' is not positive")
        return _out(c1 * arr / den)

    return refined


def tilde2_prime(D, r):
    """``refine(psi~1'')(r)`` evaluated in :data:`TILDE2_OPERATION_COUNT` operations."""
    D, r = _check(D, r)
    c1 = D - 1.0
    c2 = D - 2.0
    w = r * r
    a = 1.0 - w
    q = (w + c2) * w + c1
    p = c1 - (3.0 * w + c2) * w
    g2 = c1 * ((1.0 + w) / (a * a) + p / (q * q))
    return _out(c1 * r / (a - 1.0 / g2))


# ---------------------------------------------------------------------------
# Family wrapper


@dataclass(frozen=True)
class ApproxFamily:
    """One level of the approximation ladder at fixed dimension."""

    D: int
    level: Level = Level.TILDE1
    v: float = field(init=False)
    s: complex = field(init=False)

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.D}")
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "level", Level(self.level))
        v = self.D / 2.0 - 1.0
        object.__setattr__(self, "v", v)
        disc = v * v - (self.D - 1.0)
        # imaginary for D <= 6, where the arctangent form is used
        object.__setattr__(self, "s", math.sqrt(disc) if disc >= 0 else complex(0.0, math.sqrt(-disc)))

    @property
    def has_value(self) -> bool:
        return self.level is not Level.TILDE2

    def value(self, r):
        if self.level is Level.B:
            return psi_b(self.D, r)
        if self.level is Level.TILDE1:
            return tilde1_value(self.D, r)
        raise NotImplementedError("psi~2 is available as a first derivative only")

    def first(self, r):
        if self.level is Level.B:
            return psi_b_prime(self.D, r)
        if self.level is Level.TILDE1:
            return tilde1_prime(self.D, r)
        return tilde2_prime(self.D, r)

    def second(self, r):
        if self.level is Level.B:
            return psi_b_second(self.D, r)
        if self.level is Level.TILDE1:
            return tilde1_second(self.D, r)
        raise NotImplementedError("psi~2 is available as a first derivative only")

    def evaluate(self, r):
        """``(value, first, second)``; levels B and Tilde1 only."""
        if np.ndim(r) == 0 and self.level is not Level.TILDE2:
            return self._evaluate_scalar(float(r))
        return self.value(r), self.first(r), self.second(r)

    def _evaluate_scalar(self, r):
        # plain-float path for ODE right-hand sides called once per RK stage
        if not 0.0 <= r < 1.0:
            raise DomainError("r must lie in [0, 1)")
        D = self.D
        c1 = D - 1.0
        w = r * r
        a = 1.0 - w
        p0 = psi_zero(D)
        if self.level is Level.B:
            return (
                0.5 * w - 0.5 * c1 * math.log1p(-w) + p0,
                r * (D - w) / a,
                1.0 + c1 * (1.0 + w) / (a * a),
            )
        q = (w + (D - 2.0)) * w + c1
        p = c1 - (3.0 * w + (D - 2.0)) * w
        value = p0 - 0.5 * c1 * math.log1p(-w) + float(_tilde1_rational_integral(D, w))
        return value, c1 * r / a + c1 * r / q, c1 * (1.0 + w) / (a * a) + c1 * p / (q * q)
