"""Mixtures of vMF distributions fitted by EM.

Four variants: soft or hard assignment, each in mean parametrization
(Bregman clustering, densities through ``psi``) or natural parametrization
(densities through ``Phi``, concentrations by root finding).  Concentrations
can be tied across components.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .exceptions import DimensionMismatch, DomainError, EmptyData, LengthMismatch, SchemaVersionError
from .kappa import KappaMethod, estimate_kappa
from .approx import Level
from .ode import BOUNDARY_MARGIN
from .specfun import grad_norm_phi, log_partition
from .vmf import PsiSource, VmfDistribution, psi_pair

MODEL_SCHEMA = 1
EMPTY_CLUSTER_FRACTION = 1e-8
# mean-space resultant lengths are kept this far inside the unit ball
MAX_NORM = 1.0 - BOUNDARY_MARGIN


class ParamSpace(enum.Enum):
    MEAN = "mean"
    NATURAL = "natural"


class Assignment(enum.Enum):
    SOFT = "soft"
    HARD = "hard"


class Init(enum.Enum):
    RANDOM_RESPONSIBILITIES = "random"
    KMEANS_PP = "kmeans++"


_SOURCE_KAPPA = {
    PsiSource.TILDE: KappaMethod.closed_form(Level.TILDE2),
    PsiSource.BANERJEE: KappaMethod.closed_form(Level.B),
    PsiSource.ODE: KappaMethod.ode_profile(),
}


@dataclass(frozen=True)
class FitConfig:
    """EM settings.

    ``psi_source`` selects ``psi, psi'`` for mean-space densities;
    ``kappa_method`` the root finder for natural-space M-steps (``None``
    uses the dimension-based default).
    """

    iterations: int = 100
    assignment: Assignment = Assignment.SOFT
    seed: int = 0
    init: Init = Init.RANDOM_RESPONSIBILITIES
    param_space: ParamSpace = ParamSpace.MEAN
    tied: bool = False
    psi_source: PsiSource = PsiSource.TILDE
    kappa_method: KappaMethod | None = None

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise DomainError(f"iterations must be >= 1, got {self.iterations}")
        for name, kind in (("assignment", Assignment), ("init", Init), ("param_space", ParamSpace), ("psi_source", PsiSource)):
            object.__setattr__(self, name, kind(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """``K`` vMF components sharing dimension ``D``.

    ``params`` holds one row per component: the mean ``mu_k`` in mean space
    or the natural parameter ``eta_k`` in natural space.
    """

    weights: np.ndarray
    params: np.ndarray
    param_space: ParamSpace
    tied: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        p = np.array(self.params, dtype=float)
        object.__setattr__(self, "param_space", ParamSpace(self.param_space))
        if p.ndim != 2 or p.shape[0] != w.size or w.size < 1 or p.shape[1] < 2:
            raise DomainError("params must be K x D with one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise DomainError("weights must lie on the simplex")
        norms = np.linalg.norm(p, axis=1)
        if self.param_space is ParamSpace.MEAN and np.any(norms >= 1.0):
            raise DomainError("mean parameters must lie inside the unit ball")
        if self.tied and np.ptp(norms) > 1e-9 * max(1.0, norms.max()):
            raise DomainError("tied model must have equal component norms")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "params", p)

    @property
    def K(self) -> int:
        return self.params.shape[0]

    @property
    def D(self) -> int:
        return self.params.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.params, axis=1)

    def components(self, kappa_method: KappaMethod | None = None):
        if self.param_space is ParamSpace.MEAN:
            return [VmfDistribution.from_mean(p, kappa_method) for p in self.params]
        return [VmfDistribution.from_natural(p) for p in self.params]

    def to_natural(self, kappa_method: KappaMethod | None = None) -> "MixtureModel":
        if self.param_space is ParamSpace.NATURAL:
            return self
        r = self.norms
        kappa = np.atleast_1d(estimate_kappa(self.D, r, kappa_method))
        scale = np.divide(kappa, r, out=np.zeros_like(r), where=r > 0)
        return MixtureModel(self.weights, self.params * scale[:, None], ParamSpace.NATURAL, self.tied)

    def to_mean(self) -> "MixtureModel":
        if self.param_space is ParamSpace.MEAN:
            return self
        kappa = self.norms
        r = np.atleast_1d(grad_norm_phi(self.D, kappa))
        scale = np.divide(r, kappa, out=np.zeros_like(kappa), where=kappa > 0)
        return MixtureModel(self.weights, self.params * scale[:, None], ParamSpace.MEAN, self.tied)


@dataclass
class FitResult:
    model: MixtureModel
    objective: list = field(default_factory=list)
    responsibilities: np.ndarray | None = None
    reinitialized: int = 0

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.responsibilities, axis=1)


# ---------------------------------------------------------------------------
# EM steps


def as_data(data):
    """Data as a CSR matrix of unit rows (sparse-dense products are order-stable)."""
    X = sp.csr_matrix(data, dtype=float)
    if X.shape[0] == 0:
        raise EmptyData("no data")
    return X


def log_joint(model: MixtureModel, data, cfg: FitConfig | None = None) -> np.ndarray:
    """``log pi_k + log p(x_n | component k)`` as an ``N x K`` array."""
    cfg = cfg or FitConfig()
    X = as_data(data)
    if X.shape[1] != model.D:
        raise DimensionMismatch(f"data dimension {X.shape[1]} != model dimension {model.D}")
    dots = np.asarray(X @ model.params.T)
    norms = model.norms
    if model.param_space is ParamSpace.NATURAL:
        logp = dots - np.atleast_1d(log_partition(model.D, norms))[None, :]
    else:
        psi, psi1 = psi_pair(model.D, norms, cfg.psi_source)
        slope = np.divide(psi1, norms, out=np.zeros_like(norms), where=norms > 0)
        logp = slope[None, :] * (dots - (norms * norms)[None, :]) + np.asarray(psi)[None, :]
    with np.errstate(divide="ignore"):
        return logp + np.log(model.weights)[None, :]


def objective_from_joint(joint) -> float:
    """Average log-likelihood per datapoint (finite part)."""
    return float(np.mean(logsumexp(joint, axis=1)))


def _responsibilities(joint, assignment):
    if assignment is Assignment.HARD:
        out = np.zeros_like(joint)
        out[np.arange(joint.shape[0]), np.argmax(joint, axis=1)] = 1.0
        return out
    return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


def e_step(model: MixtureModel, data, cfg: FitConfig | None = None) -> np.ndarray:
    """Responsibilities: row-wise softmax (soft) or one-hot argmax (hard, ties to lowest index)."""
    cfg = cfg or FitConfig()
    return _responsibilities(log_joint(model, data, cfg), cfg.assignment)


def m_step(data, responsibilities, cfg: FitConfig | None = None, param_space=None, tied=None):
    """Moment-matching M-step; returns ``(model, number of reinitialized components)``.

    A component whose total responsibility falls below ``1e-8 N`` is moved to
    the datapoint with the lowest maximal responsibility.
    """
    cfg = cfg or FitConfig()
    space = ParamSpace(param_space if param_space is not None else cfg.param_space)
    tied = cfg.tied if tied is None else tied
    X = as_data(data)
    R = np.asarray(responsibilities, dtype=float)
    N, K = R.shape
    if X.shape[0] != N:
        raise LengthMismatch("responsibilities and data disagree in N")
    mass = R.sum(axis=0)
    sums = np.asarray((X.T @ R).T)
    empty = mass < EMPTY_CLUSTER_FRACTION * N
    safe = np.where(empty, 1.0, mass)
    mu = sums / safe[:, None]
    r = np.linalg.norm(mu, axis=1)
    weights = mass / N
    n_reinit = int(empty.sum())
    if n_reinit:
        order = np.argsort(R.max(axis=1), kind="stable")
        live = ~empty
        ref = float(np.average(r[live], weights=weights[live])) if live.any() else 0.5
        for k, n in zip(np.flatnonzero(empty), order):
            mu[k] = X[n].toarray().ravel() * ref
            r[k] = ref
            weights[k] = 1.0 / N
        weights = weights / weights.sum()
    directions = np.divide(mu, r[:, None], out=np.zeros_like(mu), where=r[:, None] > 0)
    r = np.minimum(r, MAX_NORM)
    if tied:
        r = np.full(K, float(weights @ r))
    if space is ParamSpace.MEAN:
        params = directions * r[:, None]
    else:
        kappa = np.atleast_1d(estimate_kappa(X.shape[1], r, cfg.kappa_method))
        params = directions * kappa[:, None]
    return MixtureModel(weights, params, space, tied), n_reinit


# ---------------------------------------------------------------------------
# Initialization and fitting


def _init_responsibilities(X, K, cfg, rng):
    N = X.shape[0]
    if cfg.init is Init.RANDOM_RESPONSIBILITIES:
        return rng.dirichlet(np.ones(K), size=N)
    # spherical k-means++ seeding on cosine distance, then nearest-centre assignment
    centres = [int(rng.integers(N))]
    best = 1.0 - np.asarray(X @ X[centres[0]].T.toarray()).ravel()
    for _ in range(1, K):
        p = np.maximum(best, 0.0)
        total = p.sum()
        idx = int(rng.choice(N, p=p / total)) if total > 0 else int(rng.integers(N))
        centres.append(idx)
        best = np.minimum(best, 1.0 - np.asarray(X @ X[idx].T.toarray()).ravel())
    sims = np.asarray(X @ X[centres].T.toarray())
    R = np.zeros((N, K))
    R[np.arange(N), np.argmax(sims, axis=1)] = 1.0
    return R


def initial_models(data, K, cfg: FitConfig | None = None):
    """Mean- and natural-space starting models from the same seeded responsibilities.

    The natural model's parameters are ``eta_k = grad Psi(mu_k)`` of the mean
    model's, so both start from the same distributions.
    """
    cfg = cfg or FitConfig()
    X = as_data(data)
    if X.shape[0] < K:
        raise DomainError(f"need at least K={K} datapoints, got {X.shape[0]}")
    rng = np.random.default_rng(cfg.seed)
    R = _init_responsibilities(X, K, cfg, rng)
    mean_model, _ = m_step(X, R, cfg, ParamSpace.MEAN)
    return mean_model, mean_model.to_natural(cfg.kappa_method)


def fit(data, K: int, cfg: FitConfig | None = None) -> FitResult:
    """Run ``cfg.iterations`` EM rounds.

    ``objective[t]`` is the average log-likelihood of the model entering
    round ``t``; the final entry scores the returned model.
    """
    cfg = cfg or FitConfig()
    if int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K}")
    X = as_data(data)
    mean_model, natural_model = initial_models(X, K, cfg)
    model = mean_model if cfg.param_space is ParamSpace.MEAN else natural_model
    trace = []
    n_reinit = 0
    for _ in range(cfg.iterations):
        joint = log_joint(model, X, cfg)
        trace.append(objective_from_joint(joint))
        R = _responsibilities(joint, cfg.assignment)
        model, k = m_step(X, R, cfg)
        n_reinit += k
    joint = log_joint(model, X, cfg)
    trace.append(objective_from_joint(joint))
    return FitResult(model, trace, _responsibilities(joint, cfg.assignment), n_reinit)


# ---------------------------------------------------------------------------
# Evaluation


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(labels_true, labels_pred) -> float:
    """``2 I(Y; C) / (H(Y) + H(C))`` with natural logarithms."""
    y = np.asarray(labels_true)
    c = np.asarray(labels_pred)
    if y.shape != c.shape or y.ndim != 1:
        raise LengthMismatch("label sequences must be 1-D and of equal length")
    n = y.size
    if n == 0:
        raise EmptyData("no labels")
    _, yi = np.unique(y, return_inverse=True)
    _, ci = np.unique(c, return_inverse=True)
    table = np.zeros((yi.max() + 1, ci.max() + 1))
    np.add.at(table, (yi, ci), 1.0)
    hy = _entropy(table.sum(axis=1), n)
    hc = _entropy(table.sum(axis=0), n)
    if hy == 0.0 and hc == 0.0:
        return 1.0
    if hy == 0.0 or hc == 0.0:
        return 0.0
    joint = table[table > 0] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[table > 0] / (n * n)
    mi = float((joint * np.log(joint / outer)).sum())
    return min(1.0, max(0.0, 2.0 * mi / (hy + hc)))


# ---------------------------------------------------------------------------
# Persistence


def model_to_dict(model: MixtureModel) -> dict:
    if model.param_space is ParamSpace.MEAN:
        comps = []
        for mu, r in zip(model.params, model.norms):
            direction = mu / r if r > 0 else np.eye(1, model.D).ravel()
            comps.append({"direction": direction.tolist(), "norm": float(r)})
    else:
        comps = [{"eta": eta.tolist()} for eta in model.params]
    return {
        "schema": MODEL_SCHEMA,
        "D": model.D,
        "K": model.K,
        "tied": bool(model.tied),
        "param_space": model.param_space.value,
        "weights": model.weights.tolist(),
        "components": comps,
    }


def model_from_dict(doc: dict) -> MixtureModel:
    if doc.get("schema") != MODEL_SCHEMA:
        raise SchemaVersionError(f"unsupported model schema {doc.get('schema')!r}")
    space = ParamSpace(doc["param_space"])
    if space is ParamSpace.MEAN:
        params = [np.asarray(c["direction"], dtype=float) * c["norm"] for c in doc["components"]]
    else:
        params = [c["eta"] for c in doc["components"]]
    model = MixtureModel(doc["weights"], np.asarray(params, dtype=float), space, bool(doc["tied"]))
    if model.D != doc["D"] or model.K != doc["K"]:
        raise DimensionMismatch("model file header disagrees with its components")
    return model


def save_model(model: MixtureModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> MixtureModel:
    return model_from_dict(json.loads(Path(path).read_text()))
