"""Scalar special functions for the natural parametrization of the vMF family.

The log-partition is taken as

    Phi(kappa) = log I_v(kappa) - v log kappa - (D/2) log(2 pi),   v = D/2 - 1,

which normalizes ``exp(eta.x)`` against the uniform measure ``sigma / (2 pi)**D``
on the sphere (``sigma`` is surface measure).  All functions are pure.

``log_bessel_i`` is evaluated in double precision with three branches:

* ``v >= DEBYE_MIN_ORDER``: Debye uniform asymptotic expansion (A&S 9.7.7),
  uniformly valid in ``kappa``;
* ``v < DEBYE_MIN_ORDER`` and ``kappa <= SERIES_MAX_ARG``: log-domain power series;
* ``v < DEBYE_MIN_ORDER`` and ``kappa > SERIES_MAX_ARG``: Hankel large-argument expansion.

Validity envelope: ``0 <= v <= 5e4``, ``0 < kappa <= 1e6``, relative error below
1e-9 (checked against mpmath in the test-suite).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import DomainError

LOG_2PI = math.log(2.0 * math.pi)

DEBYE_MIN_ORDER = 25.0
SERIES_MAX_ARG = 1000.0
_DEBYE_TERMS = 12


class Representation(enum.Enum):
    PERRON = "perron"
    GAUSS = "gauss"


@dataclass(frozen=True)
class BesselRatioConfig:
    """Continued-fraction settings for ``I_v / I_{v-1}``.

    ``depth`` is the number of continued-fraction levels kept below the
    leading quotient.
    """

    depth: int = 20
    representation: Representation = Representation.PERRON

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 2:
            raise DomainError(f"continued-fraction depth must be an integer >= 2, got {self.depth}")
        object.__setattr__(self, "representation", Representation(self.representation))


L20_RATIO_CONFIG = BesselRatioConfig(depth=20)


def default_ratio_config(D: int) -> BesselRatioConfig:
    """Perron fraction deep enough for double precision at dimension ``D``.

    Depth 20 is sufficient once ``D >= 50``; smaller dimensions need up to
    ~50 levels near ``kappa ~ D`` (see the truncation tests).
    """
    return BesselRatioConfig(depth=20 if D >= 50 else 60)


def log_gamma(z):
    """Natural log of the Gamma function for ``z > 0``."""
    z = float(z)
    if not z > 0:
        raise DomainError(f"log_gamma requires z > 0, got {z}")
    return math.lgamma(z)


# ---------------------------------------------------------------------------
# Bessel ratio


def _perron(v, kappa, depth):
    tail = np.zeros_like(kappa)
    for j in range(depth, 0, -1):
        tail = (2.0 * v + 2.0 * j - 1.0) * kappa / (2.0 * v + j + 2.0 * kappa - tail)
    return kappa / (2.0 * v + kappa - tail)


def _gauss(v, kappa, depth):
    k2 = kappa * kappa
    tail = np.zeros_like(kappa)
    for j in range(depth, 0, -1):
        tail = k2 / (2.0 * (v + j) + tail)
    return kappa / (2.0 * v + tail)


def bessel_ratio(v, kappa, cfg: BesselRatioConfig = L20_RATIO_CONFIG):
    """Truncated continued fraction for ``I_v(kappa) / I_{v-1}(kappa)``.

    Accepts scalar or array ``kappa``.  Loss of precision is expected once
    ``kappa / v`` exceeds ~1e8, where the ratio is within 1e-8 of one.
    """
    if v < 0.5:
        raise DomainError(f"bessel_ratio requires v >= 0.5, got {v}")
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0):
        raise DomainError("bessel_ratio requires kappa >= 0")
    if cfg.representation is Representation.PERRON:
        out = _perron(float(v), k, cfg.depth)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(k > 0, _gauss(float(v), k, cfg.depth), 0.0)
    out = np.minimum(out, np.nextafter(1.0, 0.0))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# log I_v


def _debye_polynomials(n):
    """Coefficient lists (ascending powers of t) of Debye's u_k(t), k < n."""
    polys = [[Fraction(1)]]
    for _ in range(1, n):
        u = polys[-1]
        nxt = [Fraction(0)] * (len(u) + 3)
        # 1/2 t^2 (1 - t^2) u'(t)
        for i in range(1, len(u)):
            c = i * u[i]
            nxt[i + 1] += c / 2
            nxt[i + 3] -= c / 2
        # 1/8 int_0^t (1 - 5 s^2) u(s) ds
        for i, c in enumerate(u):
            nxt[i + 1] += c / (8 * (i + 1))
            nxt[i + 3] -= 5 * c / (8 * (i + 3))
        while nxt[-1] == 0:
            nxt.pop()
        polys.append(nxt)
    return [np.array([float(c) for c in p]) for p in polys]


_DEBYE_U = _debye_polynomials(_DEBYE_TERMS)


def _log_iv_debye(v, kappa):
    z = kappa / v
    sq = math.hypot(1.0, z)
    t = 1.0 / sq
    eta = sq + math.log(z) - math.log1p(sq)
    total = 0.0
    vk = 1.0
    for u in _DEBYE_U:
        total += np.polynomial.polynomial.polyval(t, u) / vk
        vk *= v
    return v * eta - 0.5 * math.log(2.0 * math.pi * v) + 0.5 * math.log(t) + math.log(total)


def _log_iv_series(v, kappa):
    n = int(kappa + 60)
    k = np.arange(n, dtype=float)
    q = 0.25 * kappa * kappa
    log_ratio = np.log(q) - np.log1p(k) - np.log(v + k + 1.0)
    log_terms = np.concatenate(([0.0], np.cumsum(log_ratio[:-1])))
    i = int(np.argmax(log_terms))
    scaled = np.exp(log_terms - log_terms[i])
    scaled[i] = 0.0
    log_sum = log_terms[i] + math.log1p(scaled.sum())
    return v * math.log(0.5 * kappa) - math.lgamma(v + 1.0) + log_sum


def _log_iv_hankel(v, kappa):
    mu = 4.0 * v * v
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * kappa)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return kappa - 0.5 * math.log(2.0 * math.pi * kappa) + math.log(total)


def _log_iv_scalar(v, kappa):
    if not kappa > 0:
        raise DomainError(f"log_bessel_i requires kappa > 0, got {kappa}")
    if v >= DEBYE_MIN_ORDER:
        return _log_iv_debye(v, kappa)
    if kappa <= SERIES_MAX_ARG:
        return _log_iv_series(v, kappa)
    return _log_iv_hankel(v, kappa)


def log_bessel_i(v, kappa):
    """``log I_v(kappa)`` for ``v >= 0`` and ``kappa > 0`` (scalar or array)."""
    v = float(v)
    if v < 0:
        raise DomainError(f"log_bessel_i requires v >= 0, got {v}")
    if np.ndim(kappa) == 0:
        return _log_iv_scalar(v, float(kappa))
    k = np.asarray(kappa, dtype=float)
    return np.array([_log_iv_scalar(v, x) for x in k.ravel()]).reshape(k.shape)


# ---------------------------------------------------------------------------
# Log-partition and its derivatives


def _check_dim(D):
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    return int(D)


def log_partition_at_zero(D):
    v = D / 2.0 - 1.0
    return -(v * math.log(2.0) + 0.5 * D * LOG_2PI + math.lgamma(D / 2.0))


def _log_partition_scalar(D, kappa):
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0.0:
        return log_partition_at_zero(D)
    v = D / 2.0 - 1.0
    return _log_iv_scalar(v, kappa) - v * math.log(kappa) - 0.5 * D * LOG_2PI


def log_partition(D, kappa):
    """Radial log-partition ``phi(kappa)``; continuous at ``kappa = 0``."""
    D = _check_dim(D)
    if np.ndim(kappa) == 0:
        return _log_partition_scalar(D, float(kappa))
    k = np.asarray(kappa, dtype=float)
    return np.array([_log_partition_scalar(D, x) for x in k.ravel()]).reshape(k.shape)


def grad_norm_phi(D, kappa, cfg: BesselRatioConfig | None = None):
    """``phi'(kappa) = I_{D/2}(kappa) / I_{D/2-1}(kappa)``, the mean resultant length."""
    D = _check_dim(D)
    return bessel_ratio(D / 2.0, kappa, cfg or default_ratio_config(D))


def natural_entropy(D, kappa, cfg: BesselRatioConfig | None = None):
    """Negative entropy of the vMF with concentration ``kappa``.

    Evaluates ``kappa phi_I'(kappa) - phi_I(kappa) - (D/2) log 2pi`` where
    ``phi_I = log I_v - v log kappa`` excludes the ``2 pi`` constant.  This
    equals ``kappa phi'(kappa) - Phi(kappa)``, i.e. the Legendre dual
    ``psi(phi'(kappa))``, and reduces to ``psi(0)`` at ``kappa = 0``.
    """
    D = _check_dim(D)
    ratio = grad_norm_phi(D, kappa, cfg)
    return np.asarray(kappa, dtype=float) * ratio - log_partition(D, kappa) if np.ndim(kappa) \
        else float(kappa) * ratio - log_partition(D, kappa)
