"""Gradients, Hessians and variance functions of radially symmetric functions.

For ``f(x) = g(|x|)`` the Hessian is a scaled identity plus a rank-one term
along ``x``:

    H = (g'(r)/r) I + (g''(r) - g'(r)/r) u u^T,   u = x / r.

Everything here works on that factored form; dense ``D x D`` matrices are
only built on request via :meth:`RadialMatrix.dense` (intended for tests and
small ``D``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

DENSE_LIMIT = 64


@dataclass(frozen=True)
class RadialDerivatives:
    r: float
    g1: float
    g2: float

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise DomainError(f"r must lie in [0, 1), got {self.r}")
        if self.g1 < 0 or self.g2 <= 0:
            raise DomainError("radial profile must have g1 >= 0 and g2 > 0")


@dataclass(frozen=True)
class RadialMatrix:
    """Symmetric matrix ``iso * I + radial_coef * u u^T`` with unit ``u``.

    ``iso`` is the tangential eigenvalue (multiplicity ``D - 1``) and
    ``iso + radial_coef`` the eigenvalue along ``u``.
    """

    iso: float
    radial_coef: float
    direction: np.ndarray

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    @property
    def radial_eig(self) -> float:
        return self.iso + self.radial_coef

    def matvec(self, y):
        y = np.asarray(y, dtype=float)
        return self.iso * y + self.radial_coef * self.direction * (self.direction @ y)

    def trace(self) -> float:
        return self.dim * self.iso + self.radial_coef

    def logdet(self) -> float:
        return (self.dim - 1) * np.log(self.iso) + np.log(self.radial_eig)

    def det(self) -> float:
        return self.iso ** (self.dim - 1) * self.radial_eig

    def inverse(self) -> "RadialMatrix":
        # Sherman-Morrison on the eigen-split
        inv_iso = 1.0 / self.iso
        return RadialMatrix(inv_iso, 1.0 / self.radial_eig - inv_iso, self.direction)

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_LIMIT:
            raise DomainError(f"refusing to materialize a {self.dim}x{self.dim} matrix (limit {DENSE_LIMIT})")
        u = self.direction
        return self.iso * np.eye(self.dim) + self.radial_coef * np.outer(u, u)

    def __array__(self, dtype=None, copy=None):
        out = self.dense()
        return out if dtype is None else out.astype(dtype)


def _split(mu):
    mu = np.asarray(mu, dtype=float)
    r = float(np.linalg.norm(mu))
    if r == 0.0:
        u = np.zeros_like(mu)
        u[0] = 1.0
        return r, u
    return r, mu / r


def radial_gradient(mu, g1):
    """``(g1 / |mu|) mu``; the zero vector at ``mu = 0``."""
    mu = np.asarray(mu, dtype=float)
    r = np.linalg.norm(mu)
    if r == 0.0:
        return np.zeros_like(mu)
    return (g1 / r) * mu


def radial_hessian_eigs(r, g1, g2, D):
    """Return ``(radial eigenvalue, tangential eigenvalue, tangential multiplicity)``.

    At ``r = 0`` the tangential eigenvalue takes its limit ``g1/r -> g2``.
    """
    if r == 0.0:
        return g2, g2, D - 1
    if not 0.0 < r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r}")
    return g2, g1 / r, D - 1


def radial_hessian(mu, g1, g2) -> RadialMatrix:
    r, u = _split(mu)
    _, tangential, _ = radial_hessian_eigs(r, g1, g2, u.shape[0])
    return RadialMatrix(tangential, g2 - tangential, u)


def variance_function(mu, g1, g2) -> RadialMatrix:
    """Covariance as a function of the mean, ``V(mu) = (Hessian of Psi)^-1``.

    ``V = (r/g1) I + (1/g2 - r/g1) u u^T``; isotropic ``I/g2`` at ``mu = 0``.
    """
    r, u = _split(mu)
    if r == 0.0:
        return RadialMatrix(1.0 / g2, 0.0, u)
    if g1 <= 0 or g2 <= 0:
        raise DomainError("variance function needs g1 > 0 and g2 > 0")
    tangential = r / g1
    return RadialMatrix(tangential, 1.0 / g2 - tangential, u)


def trace_bound_check(mean, cov) -> float:
    """Slack ``(1 - mean.mean) - trace(cov)``; zero iff all mass lies on the sphere."""
    mean = np.asarray(mean, dtype=float)
    tr = cov.trace() if isinstance(cov, RadialMatrix) else float(np.trace(np.asarray(cov, dtype=float)))
    return float(1.0 - mean @ mean - tr)
