"""Concentration ``kappa`` from the mean resultant length ``r`` and dimension ``D``.

``kappa = psi'(r)`` is the inverse of ``phi'(kappa) = I_{D/2}/I_{D/2-1}``.
Available methods:

* truncated Newton-Raphson on ``phi'(kappa) - r`` started at ``psi_B'(r)``,
  with the Perron continued fraction for ``phi'`` and the analytic derivative
  ``phi'' = 1 - phi'^2 - (D-1) phi'/kappa``;
* open-loop closed forms ``psi_B'``, ``psi~1'``, ``psi~2'``;
* lookup in a solved ODE profile.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import approx
from .approx import Level
from .exceptions import DomainError, NotConverged
from .ode import DEFAULT_RADIUS, SolverConfig, get_profile, query
from .specfun import BesselRatioConfig, bessel_ratio, default_ratio_config

RESIDUAL_TOL = 1e-10
KAPPA_FLOOR = 1e-12
TILDE2_MIN_DIM = 10_000

# static cost model of one Newton step: continued fraction of depth L costs
# 6 operations per level below the top two plus 8 for the top, and the
# derivative and update another 8
_NR_SETUP_OPS = 5
_NR_STEP_OVERHEAD = 16
_CLOSED_FORM_OPS = {Level.B: 5, Level.TILDE1: 10, Level.TILDE2: approx.TILDE2_OPERATION_COUNT}
_ODE_LOOKUP_OPS = 40


class MethodKind(enum.Enum):
    NEWTON_RAPHSON = "nr"
    CLOSED_FORM = "closed_form"
    ODE_PROFILE = "ode"


@dataclass(frozen=True)
class KappaMethod:
    """Selector for a ``kappa`` estimator.

    Use the constructors :meth:`newton_raphson`, :meth:`closed_form` and
    :meth:`ode_profile` rather than the raw fields.
    """

    kind: MethodKind
    steps: int = 2
    depth: int = 20
    level: Level | None = None
    solver: SolverConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MethodKind(self.kind))
        if self.kind is MethodKind.NEWTON_RAPHSON:
            if int(self.steps) != self.steps or self.steps < 1:
                raise DomainError(f"Newton-Raphson needs M >= 1 steps, got {self.steps}")
            if int(self.depth) != self.depth or self.depth < 2:
                raise DomainError(f"continued-fraction depth must be >= 2, got {self.depth}")
        if self.kind is MethodKind.CLOSED_FORM:
            if self.level is None:
                raise DomainError("closed-form method needs a level")
            object.__setattr__(self, "level", Level(self.level))

    @classmethod
    def newton_raphson(cls, steps=2, depth=20):
        return cls(MethodKind.NEWTON_RAPHSON, steps=steps, depth=depth)

    @classmethod
    def closed_form(cls, level):
        return cls(MethodKind.CLOSED_FORM, level=Level(level))

    @classmethod
    def ode_profile(cls, solver: SolverConfig | None = None):
        return cls(MethodKind.ODE_PROFILE, solver=solver)

    @property
    def open_loop(self) -> bool:
        return self.kind is not MethodKind.NEWTON_RAPHSON

    def label(self) -> str:
        if self.kind is MethodKind.NEWTON_RAPHSON:
            return f"nr(M={self.steps},L={self.depth})"
        if self.kind is MethodKind.CLOSED_FORM:
            return self.level.value
        return "ode"


def default_method(D) -> KappaMethod:
    """Newton-Raphson below ``D = 1e4``, closed-form ``psi~2'`` above.

    Newton uses 4 steps at ``D = 2``, 3 up to ``D = 50`` and 2 beyond, the
    fewest that reach the ``1e-10`` residual on ``r`` in ``(0, 0.9995]``, with
    a continued fraction deep enough for double precision at that ``D``.
    """
    if D >= TILDE2_MIN_DIM:
        return KappaMethod.closed_form(Level.TILDE2)
    steps = 4 if D <= 2 else 3 if D <= 50 else 2
    return KappaMethod.newton_raphson(steps=steps, depth=default_ratio_config(D).depth)


@dataclass(frozen=True)
class KappaEstimate:
    kappa: float | np.ndarray
    residual: float | np.ndarray
    method: KappaMethod


def _check(D, r):
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise DomainError("r must lie in [0, 1)")
    return int(D), arr


def _newton(D, r, steps, cfg):
    v = D / 2.0
    kappa = np.asarray(approx.psi_b_prime(D, r), dtype=float)
    for _ in range(steps):
        a = bessel_ratio(v, kappa, cfg)
        dphi = 1.0 - a * a - (D - 1.0) * a / kappa
        kappa = np.maximum(kappa - (a - r) / dphi, KAPPA_FLOOR)
    return kappa


def _ode_kappa(D, r, solver):
    radius = max(DEFAULT_RADIUS, float(np.max(r)))
    cfg = solver or SolverConfig(checkpoints=(radius,))
    prof = get_profile(D, cfg)
    return np.array([query(prof, x)[1] for x in np.ravel(r)]).reshape(np.shape(r))


def kappa_residual(D, r, kappa, cfg: BesselRatioConfig | None = None):
    """``|phi'(kappa) - r|``."""
    k = np.asarray(kappa, dtype=float)
    out = np.abs(bessel_ratio(D / 2.0, k, cfg or default_ratio_config(D)) - np.asarray(r, dtype=float))
    return float(out) if out.ndim == 0 else out


def estimate_kappa_full(D, r, method: KappaMethod | None = None) -> KappaEstimate:
    """Estimate ``kappa`` and report the residual ``|phi'(kappa) - r|``.

    The Newton residual uses the method's own continued fraction; open-loop
    methods are scored with the default one.  Only Newton-Raphson raises
    :class:`NotConverged`.
    """
    D, arr = _check(D, r)
    method = method or default_method(D)
    positive = arr > 0.0
    safe = np.where(positive, arr, 0.5)
    if method.kind is MethodKind.NEWTON_RAPHSON:
        cfg = BesselRatioConfig(depth=method.depth)
        kappa = _newton(D, safe, method.steps, cfg)
    else:
        cfg = default_ratio_config(D)
        if method.kind is MethodKind.CLOSED_FORM:
            kappa = np.asarray(approx.ApproxFamily(D, method.level).first(safe), dtype=float)
        else:
            kappa = _ode_kappa(D, safe, method.solver)
    kappa = np.where(positive, kappa, 0.0)
    residual = np.where(positive, np.abs(bessel_ratio(D / 2.0, np.maximum(kappa, KAPPA_FLOOR), cfg) - safe), 0.0)
    worst = float(np.max(residual)) if residual.size else 0.0
    if method.kind is MethodKind.NEWTON_RAPHSON and worst > RESIDUAL_TOL:
        k_bad = float(np.ravel(kappa)[int(np.argmax(residual))])
        raise NotConverged(
            f"Newton-Raphson residual {worst:.3e} exceeds {RESIDUAL_TOL:g} (D={D}, {method.label()})",
            kappa=k_bad,
            residual=worst,
        )
    if arr.ndim == 0:
        return KappaEstimate(float(kappa), float(residual), method)
    return KappaEstimate(kappa, residual, method)


def estimate_kappa(D, r, method: KappaMethod | None = None):
    """``kappa`` with ``phi'(kappa) = r``; ``r = 0`` maps to ``0`` exactly."""
    return estimate_kappa_full(D, r, method).kappa


def operation_count(method: KappaMethod) -> int:
    """Static arithmetic-operation budget of ``method``.

    Newton-Raphson: ``5 + M (6 (L - 2) + 16)``.  The ODE figure covers one
    Hermite interpolation and excludes the node search.
    """
    if method.kind is MethodKind.NEWTON_RAPHSON:
        return _NR_SETUP_OPS + method.steps * (6 * (method.depth - 2) + _NR_STEP_OVERHEAD)
    if method.kind is MethodKind.CLOSED_FORM:
        return _CLOSED_FORM_OPS[method.level]
    return _ODE_LOOKUP_OPS
