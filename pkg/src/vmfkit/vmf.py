"""The von Mises-Fisher distribution in mean and natural parametrization.

Densities are relative to the uniform measure ``sigma / (2 pi)**D`` on the
sphere, so ``log p(x | eta) = eta.x - Phi(eta)`` and equivalently
``log p(x | mu) = psi'(r)/r mu.(x - mu) + psi(r)`` with ``r = |mu|``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import approx
from .exceptions import DimensionMismatch, DomainError, EmptyData, NotUnitNorm
from .kappa import KappaMethod, estimate_kappa
from .ode import DEFAULT_RADIUS, SolverConfig, get_profile, psi_zero, query
from .specfun import grad_norm_phi, log_partition

UNIT_TOL = 1e-9


class PsiSource(enum.Enum):
    """How ``psi(r)`` and ``psi'(r)`` are evaluated in mean-space formulas.

    ``TILDE`` pairs ``psi~1`` for the value with ``psi~2'`` for the slope.
    """

    ODE = "ode"
    TILDE = "tilde"
    BANERJEE = "banerjee"


def psi_pair(D, r, source: PsiSource = PsiSource.ODE, solver: SolverConfig | None = None):
    """``(psi(r), psi'(r))`` from the chosen source; ``r`` scalar or array."""
    source = PsiSource(source)
    if source is PsiSource.TILDE:
        return approx.tilde1_value(D, r), approx.tilde2_prime(D, r)
    if source is PsiSource.BANERJEE:
        return approx.psi_b(D, r), approx.psi_b_prime(D, r)
    arr = np.asarray(r, dtype=float)
    radius = max(DEFAULT_RADIUS, float(np.max(arr)) if arr.size else 0.0)
    prof = get_profile(D, solver or SolverConfig(checkpoints=(radius,)))
    vals = np.array([query(prof, x)[:2] for x in arr.ravel()]).reshape(arr.shape + (2,))
    if arr.ndim == 0:
        return float(vals[0]), float(vals[1])
    return vals[..., 0], vals[..., 1]


def bregman_from_origin(D, r, source: PsiSource = PsiSource.ODE):
    """``D_Psi(0 || mu) = r psi'(r) - psi(r) + psi(0)``."""
    psi, psi1 = psi_pair(D, r, source)
    return np.asarray(r) * psi1 - psi + psi_zero(D)


def _unit_rows(x, D):
    if sp.issparse(x):
        x = sp.csr_matrix(x, dtype=float)
        norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
        cols = x.shape[1]
    else:
        x = np.asarray(x, dtype=float)
        norms = np.linalg.norm(x, axis=-1)
        cols = x.shape[-1]
    if cols != D:
        raise DimensionMismatch(f"data dimension {cols} != model dimension {D}")
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise NotUnitNorm("inputs must have unit norm")
    return x


def _dot(x, vec):
    out = x @ vec
    return np.asarray(out).ravel() if sp.issparse(x) or np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class VmfDistribution:
    """Immutable vMF with both parametrizations materialized at construction.

    ``mu`` is the mean ``E[X]`` (norm ``r < 1``) and ``eta`` the natural
    parameter (norm ``kappa``).  Build via :meth:`from_mean` or
    :meth:`from_natural`.
    """

    D: int
    mu: np.ndarray
    eta: np.ndarray
    r: float
    kappa: float

    @classmethod
    def from_mean(cls, mu, kappa_method: KappaMethod | None = None) -> "VmfDistribution":
        mu = np.array(mu, dtype=float)
        if mu.ndim != 1 or mu.size < 2:
            raise DomainError("mean must be a vector of length >= 2")
        r = float(np.linalg.norm(mu))
        if not r < 1.0:
            raise DomainError(f"mean norm must be < 1, got {r}")
        D = mu.size
        kappa = float(estimate_kappa(D, r, kappa_method))
        eta = mu * (kappa / r) if r > 0 else np.zeros(D)
        return cls._build(D, mu, eta, r, kappa)

    @classmethod
    def from_natural(cls, eta) -> "VmfDistribution":
        eta = np.array(eta, dtype=float)
        if eta.ndim != 1 or eta.size < 2 or not np.all(np.isfinite(eta)):
            raise DomainError("natural parameter must be a finite vector of length >= 2")
        D = eta.size
        kappa = float(np.linalg.norm(eta))
        r = float(grad_norm_phi(D, kappa)) if kappa > 0 else 0.0
        mu = eta * (r / kappa) if kappa > 0 else np.zeros(D)
        return cls._build(D, mu, eta, r, kappa)

    @classmethod
    def _build(cls, D, mu, eta, r, kappa):
        mu.setflags(write=False)
        eta.setflags(write=False)
        return cls(D=D, mu=mu, eta=eta, r=r, kappa=kappa)

    @property
    def direction(self) -> np.ndarray:
        if self.r == 0.0:
            out = np.zeros(self.D)
            out[0] = 1.0
            return out
        return self.mu / self.r

    def log_partition(self) -> float:
        return float(log_partition(self.D, self.kappa))


def log_density_natural(dist: VmfDistribution, x):
    """``eta.x - Phi(eta)`` for one unit vector or a batch of rows."""
    x = _unit_rows(x, dist.D)
    return _dot(x, dist.eta) - dist.log_partition()


def log_density_mean(dist: VmfDistribution, x, source: PsiSource = PsiSource.ODE):
    """``psi'(r)/r mu.(x - mu) + psi(r)`` for one unit vector or a batch of rows."""
    x = _unit_rows(x, dist.D)
    psi, psi1 = psi_pair(dist.D, dist.r, source)
    if dist.r == 0.0:
        return psi + 0.0 * _dot(x, dist.mu)
    return (psi1 / dist.r) * (_dot(x, dist.mu) - dist.r * dist.r) + psi


def bregman_divergence(x, dist: VmfDistribution, source: PsiSource = PsiSource.ODE):
    """Finite part ``grad Psi(mu).(mu - x) - Psi(mu)`` of ``D_Psi(x || mu)``.

    The omitted ``Psi(x)`` is infinite on the sphere but identical for every
    component, so it drops out of all comparisons between components.
    """
    return -log_density_mean(dist, x, source)


def mle_mean(data, weights=None) -> np.ndarray:
    """Weighted average of the rows of ``data``."""
    n = data.shape[0] if sp.issparse(data) else len(data)
    if n == 0:
        raise EmptyData("no data")
    if not sp.issparse(data):
        data = np.asarray(data, dtype=float)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0):
        raise DomainError("weights must be nonnegative with one entry per row")
    total = w.sum()
    if not total > 0:
        raise EmptyData("no positive weight")
    return np.asarray(data.T @ w).ravel() / total


# ---------------------------------------------------------------------------
# Sampling


def _householder_to(direction, x):
    """Rotate rows of ``x`` so that ``e1`` maps to ``direction``."""
    u = -direction.copy()
    u[0] += 1.0
    nu = np.linalg.norm(u)
    if nu < 1e-15:
        return x
    u /= nu
    return x - 2.0 * np.outer(x @ u, u)


def _sample_cosines(D, kappa, n, rng):
    """Wood's rejection sampler for ``w = x.direction``."""
    m = D - 1.0
    b = m / (2.0 * kappa + np.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * np.log1p(-x0 * x0)
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = max(16, int(1.3 * (n - filled)))
        z = rng.beta(0.5 * m, 0.5 * m, size=batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(batch)
        ok = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        take = w[ok][: n - filled]
        out[filled : filled + take.size] = take
        filled += take.size
    return out


def sample(dist: VmfDistribution, n: int, rng_seed=None) -> np.ndarray:
    """``n`` i.i.d. draws as rows of an ``(n, D)`` array; deterministic per seed.

    ``rng_seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    D = dist.D
    if dist.kappa == 0.0:
        g = rng.standard_normal((n, D))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    w = _sample_cosines(D, dist.kappa, n, rng)
    t = rng.standard_normal((n, D - 1))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    x = np.empty((n, D))
    x[:, 0] = w
    x[:, 1:] = np.sqrt(np.maximum(1.0 - w * w, 0.0))[:, None] * t
    return _householder_to(dist.direction, x)
