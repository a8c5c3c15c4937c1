"""Radial negative-entropy profile psi(r) of the vMF family as an ODE solution.

On the sphere the trace of the covariance equals ``1 - |mu|**2``.  For the
radially symmetric negative entropy this reads

    1/psi''(r) + (D - 1) r / psi'(r) = 1 - r**2,

which is integrated outward from ``r = 0`` with ``psi(0)`` known in closed
form and ``psi'(0)`` replaced by a small positive slope ``eps``.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    BoundaryTooClose,
    DenominatorSingular,
    DomainError,
    OutOfRange,
    StepSizeUnderflow,
)
from .specfun import LOG_2PI, log_gamma

PROFILE_FORMAT_VERSION = 1
BOUNDARY_MARGIN = 1e-6
DEFAULT_RADIUS = 0.99
CACHE_ENV = "VMFKIT_CACHE_DIR"


class Mode(enum.Enum):
    DIRECT = "direct"
    DIFFERENCE = "difference"


def psi_zero(D) -> float:
    """``psi(0) = (D/2 - 1) log 2 + (D/2) log 2pi + log Gamma(D/2)``."""
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    return (D / 2.0 - 1.0) * math.log(2.0) + 0.5 * D * LOG_2PI + log_gamma(D / 2.0)


def default_epsilon(D) -> float:
    """Initial slope surrogate: 1e-6 up to D=10, log-linear to 1e-4 at D=1e4."""
    if D <= 10:
        return 1e-6
    if D >= 10_000:
        return 1e-4
    return 10.0 ** (-6.0 + 2.0 * (math.log10(D) - 1.0) / 3.0)


def ode_rhs(D, r, psi1) -> float:
    """``psi'' = psi' / ((1 - r^2) psi' + (1 - D) r)``."""
    den = (1.0 - r * r) * psi1 + (1.0 - D) * r
    if abs(den) < 1e-300:
        raise DenominatorSingular(f"ODE denominator vanished at r={r}, psi'={psi1} (D={D})")
    return psi1 / den


def trace_residual(D, r, psi1) -> float:
    """``1/psi'' + (D-1) r/psi' - (1 - r^2)`` with ``psi''`` taken from :func:`ode_rhs`."""
    return 1.0 / ode_rhs(D, r, psi1) + (D - 1) * r / psi1 - (1.0 - r * r)


# production runs use <= 1e-4 (see default_epsilon); larger values up to 1e-2
# are accepted for sensitivity studies of the initial condition
MAX_INITIAL_SLOPE = 1e-2


@dataclass(frozen=True)
class SolverConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    initial_slope_eps: float | None = None
    max_step: float = 0.01
    checkpoints: tuple = (DEFAULT_RADIUS,)
    mode: Mode = Mode.DIRECT

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(float(c) for c in self.checkpoints))
        object.__setattr__(self, "mode", Mode(self.mode))
        eps = self.initial_slope_eps
        if eps is not None and not 0.0 < eps <= MAX_INITIAL_SLOPE:
            raise DomainError(f"initial slope must lie in (0, {MAX_INITIAL_SLOPE:g}], got {eps}")
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_step <= 0:
            raise DomainError("tolerances and max_step must be positive")
        cps = self.checkpoints
        if not cps:
            raise DomainError("at least one checkpoint is required")
        if any(b < a for a, b in zip(cps, cps[1:])):
            raise DomainError("checkpoints must be sorted")
        if cps[0] < 0 or cps[-1] >= 1.0:
            raise DomainError("checkpoints must lie in [0, 1)")

    def epsilon(self, D) -> float:
        return self.initial_slope_eps if self.initial_slope_eps is not None else default_epsilon(D)

    def key(self, D) -> str:
        payload = json.dumps(
            [D, self.abs_tol, self.rel_tol, self.epsilon(D), self.max_step, self.checkpoints, self.mode.value]
        )
        return hashlib.sha1(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# difference between 5th and embedded 4th order weights
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _dopri_step(fun, t, y, f0, h):
    """One Dormand-Prince step for a 2-vector; returns (y_new, f_new, err_vec)."""
    k = [f0]
    for i in range(1, 7):
        a = _A[i]
        y0 = y[0] + h * sum(a[j] * k[j][0] for j in range(i))
        y1 = y[1] + h * sum(a[j] * k[j][1] for j in range(i))
        k.append(fun(t + _C[i] * h, (y0, y1)))
    y_new = (y0, y1)  # stage 7 sits at the 5th-order solution (FSAL)
    err = (
        h * sum(_E[j] * k[j][0] for j in range(7)),
        h * sum(_E[j] * k[j][1] for j in range(7)),
    )
    return y_new, k[6], err


def _integrate(fun, y0, targets, cfg: SolverConfig, h0):
    """Adaptive forward integration from 0, stopping exactly at every target.

    Returns the list of accepted ``(t, y)`` pairs including ``t = 0``.
    """
    t = 0.0
    y = y0
    f = fun(t, y)
    out = [(t, y)]
    h = h0
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    for target in targets:
        while t < target:
            h = min(h, cfg.max_step)
            landing = t + h >= target * (1.0 - 1e-15)
            step = target - t if landing else h
            try:
                y_new, f_new, err = _dopri_step(fun, t, y, f, step)
                scale0 = atol + rtol * max(abs(y[0]), abs(y_new[0]))
                scale1 = atol + rtol * max(abs(y[1]), abs(y_new[1]))
                enorm = math.sqrt(0.5 * ((err[0] / scale0) ** 2 + (err[1] / scale1) ** 2))
                ok = math.isfinite(enorm)
            except (DenominatorSingular, ZeroDivisionError, OverflowError):
                ok = False
            if ok and enorm <= 1.0:
                t = target if landing else t + step
                y, f = y_new, f_new
                out.append((t, y))
                factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
                h = step * factor if not landing else max(h, step * factor)
            else:
                factor = 0.2 if not ok else max(0.2, 0.9 * enorm ** -0.2)
                h = step * factor
            if h < 1e-15 * max(1.0, t) or h < 1e-300:
                raise StepSizeUnderflow(f"step size underflow at r={t}")
    return out


# ---------------------------------------------------------------------------
# Profiles


def _hermite(x0, x1, y0, y1, d0, d1, x):
    h = x1 - x0
    if h == 0.0:
        return y0
    s = (x - x0) / h
    # Fritsch-Carlson limiting keeps the interpolant monotone on monotone data
    delta = (y1 - y0) / h
    if delta == 0.0:
        d0 = d1 = 0.0
    elif delta > 0.0:
        a, b = d0 / delta, d1 / delta
        rho = a * a + b * b
        if rho > 9.0:
            tau = 3.0 / math.sqrt(rho)
            d0, d1 = tau * a * delta, tau * b * delta
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Immutable checkpointed solution ``(r, psi, psi')`` for one dimension.

    ``nodes`` holds every accepted solver step; all requested checkpoints are
    among them exactly.
    """

    D: int
    r: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray
    psi0: float
    epsilon: float
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    mode: Mode = Mode.DIRECT
    checkpoints: tuple = ()
    psi2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("r", "psi", "psi1"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        psi2 = np.array([ode_rhs(self.D, r, p) for r, p in zip(self.r, self.psi1)])
        psi2.setflags(write=False)
        object.__setattr__(self, "psi2", psi2)

    @property
    def nodes(self):
        return list(zip(self.r.tolist(), self.psi.tolist(), self.psi1.tolist()))

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def at_checkpoints(self):
        """Node values ``(r, psi, psi1)`` at the requested checkpoints."""
        idx = np.searchsorted(self.r, self.checkpoints)
        return [(float(self.r[i]), float(self.psi[i]), float(self.psi1[i])) for i in idx]

    def evaluate(self, r):
        return query(self, r)

    def to_json(self) -> dict:
        return {
            "format": "vmfkit-profile",
            "version": PROFILE_FORMAT_VERSION,
            "D": self.D,
            "epsilon": self.epsilon,
            "tolerances": {"abs": self.abs_tol, "rel": self.rel_tol},
            "mode": self.mode.value,
            "psi0": self.psi0,
            "checkpoints": list(self.checkpoints),
            "nodes": self.nodes,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RadialProfile":
        if doc.get("format") != "vmfkit-profile" or doc.get("version") != PROFILE_FORMAT_VERSION:
            from .exceptions import SchemaVersionError

            raise SchemaVersionError(f"unsupported profile document version {doc.get('version')!r}")
        nodes = np.asarray(doc["nodes"], dtype=float)
        return cls(
            D=int(doc["D"]),
            r=nodes[:, 0],
            psi=nodes[:, 1],
            psi1=nodes[:, 2],
            psi0=float(doc["psi0"]),
            epsilon=float(doc["epsilon"]),
            abs_tol=float(doc["tolerances"]["abs"]),
            rel_tol=float(doc["tolerances"]["rel"]),
            mode=Mode(doc["mode"]),
            checkpoints=tuple(doc["checkpoints"]),
        )


def _check_request(D, cfg):
    if int(D) != D or D < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {D}")
    if cfg.checkpoints[-1] > 1.0 - BOUNDARY_MARGIN:
        raise BoundaryTooClose(f"checkpoint {cfg.checkpoints[-1]} is within {BOUNDARY_MARGIN} of the sphere")


def _first_step(cfg):
    first = next((c for c in cfg.checkpoints if c > 0), cfg.checkpoints[-1])
    return min(1e-6, first / 10.0) if first > 0 else 1e-6


def solve_profile(D, cfg: SolverConfig | None = None) -> RadialProfile:
    """Integrate ``(psi, psi')`` outward from ``r = 0`` through all checkpoints."""
    cfg = cfg or SolverConfig()
    _check_request(D, cfg)
    if cfg.mode is not Mode.DIRECT:
        raise DomainError("solve_profile requires mode=direct; use solve_difference_profile")
    D = int(D)
    eps = cfg.epsilon(D)
    p0 = psi_zero(D)

    def fun(t, y):
        return (y[1], ode_rhs(D, t, y[1]))

    steps = _integrate(fun, (p0, eps), [c for c in cfg.checkpoints if c > 0], cfg, _first_step(cfg))
    r = [t for t, _ in steps]
    return RadialProfile(
        D=D,
        r=r,
        psi=[y[0] for _, y in steps],
        psi1=[y[1] for _, y in steps],
        psi0=p0,
        epsilon=eps,
        abs_tol=cfg.abs_tol,
        rel_tol=cfg.rel_tol,
        mode=Mode.DIRECT,
        checkpoints=cfg.checkpoints,
    )


def solve_difference_profile(D, cfg: SolverConfig, baseline) -> RadialProfile:
    """Integrate the correction ``f = psi - baseline`` and reconstruct ``psi``.

    ``baseline.evaluate(r)`` must return ``(value, first, second)`` of a
    closed-form approximation with ``value(0) = psi(0)``.  The correction
    starts at ``f(0) = psi(0) - value(0)`` and ``f'(0) = eps - first(0)``.
    """
    _check_request(D, cfg)
    if cfg.mode is not Mode.DIFFERENCE:
        raise DomainError("solve_difference_profile requires mode=difference")
    D = int(D)
    eps = cfg.epsilon(D)
    p0 = psi_zero(D)
    b0, b1, _ = baseline.evaluate(0.0)

    def fun(t, y):
        _, g1, g2 = baseline.evaluate(t)
        return (y[1], ode_rhs(D, t, g1 + y[1]) - g2)

    steps = _integrate(fun, (p0 - b0, eps - b1), [c for c in cfg.checkpoints if c > 0], cfg, _first_step(cfg))
    r, psi, psi1 = [], [], []
    for t, (f, f1) in steps:
        g0, g1, _ = baseline.evaluate(t)
        r.append(t)
        psi.append(g0 + f)
        psi1.append(g1 + f1)
    return RadialProfile(
        D=D,
        r=r,
        psi=psi,
        psi1=psi1,
        psi0=p0,
        epsilon=eps,
        abs_tol=cfg.abs_tol,
        rel_tol=cfg.rel_tol,
        mode=Mode.DIFFERENCE,
        checkpoints=cfg.checkpoints,
    )


def query(profile: RadialProfile, r):
    """Interpolate ``(psi, psi', psi'')`` at radius ``r``.

    ``psi`` and ``psi'`` come from monotone cubic Hermite interpolation using
    the exact node derivatives; ``psi''`` is the ODE right-hand side at the
    interpolated ``psi'``.
    """
    r = float(r)
    if r < 0.0 or r > profile.r_max:
        raise OutOfRange(f"r={r} outside solved range [0, {profile.r_max}]")
    rs = profile.r
    i = bisect.bisect_left(rs, r)
    if i < len(rs) and rs[i] == r:
        return float(profile.psi[i]), float(profile.psi1[i]), float(profile.psi2[i])
    lo, hi = i - 1, i
    x0, x1 = rs[lo], rs[hi]
    psi = _hermite(x0, x1, profile.psi[lo], profile.psi[hi], profile.psi1[lo], profile.psi1[hi], r)
    psi1 = _hermite(x0, x1, profile.psi1[lo], profile.psi1[hi], profile.psi2[lo], profile.psi2[hi], r)
    return float(psi), float(psi1), ode_rhs(profile.D, r, psi1)


# ---------------------------------------------------------------------------
# Cache


_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _disk_path(D, cfg):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"profile_D{D}_{cfg.key(D)}.json"


def get_profile(D, cfg: SolverConfig | None = None) -> RadialProfile:
    """Cached :func:`solve_profile`, keyed by ``(D, cfg)``.

    With ``VMFKIT_CACHE_DIR`` set, profiles are also persisted as JSON.
    """
    cfg = cfg or SolverConfig()
    key = (int(D), cfg.key(D))
    with _CACHE_LOCK:
        prof = _CACHE.get(key)
        if prof is not None:
            return prof
        path = _disk_path(int(D), cfg)
        if path is not None and path.exists():
            prof = RadialProfile.from_json(json.loads(path.read_text()))
        else:
            prof = solve_profile(D, cfg)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(prof.to_json()))
        _CACHE[key] = prof
        return prof


def clear_cache():
    with _CACHE_LOCK:
        _CACHE.clear()
