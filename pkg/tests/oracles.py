"""Reference implementations independent of vmfkit.

Nothing here imports vmfkit.  Oracles use mpmath (arbitrary precision),
closed forms for D = 3 (I_{1/2}, I_{3/2} in terms of sinh/cosh), scipy root
finding and quadrature, and scipy's implicit ODE solvers.
"""

from __future__ import annotations

import math
import warnings

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

LOG_2PI = math.log(2.0 * math.pi)


# D = 3 closed forms -------------------------------------------------------


def coth_ratio(kappa):
    """I_{3/2}(k) / I_{1/2}(k) = coth k - 1/k."""
    with mp.workdps(50):
        k = mp.mpf(kappa)
        return float(mp.coth(k) - 1 / k)


def d3_log_partition(kappa):
    """Phi for D = 3: log I_{1/2}(k) - 0.5 log k - 1.5 log 2pi, I_{1/2} = sqrt(2/(pi k)) sinh k."""
    with mp.workdps(50):
        k = mp.mpf(kappa)
        log_i = 0.5 * mp.log(2 / (mp.pi * k)) + mp.log(mp.sinh(k))
        return float(log_i - 0.5 * mp.log(k) - 1.5 * mp.log(2 * mp.pi))


def d3_kappa(r):
    """Concentration with coth k - 1/k = r, by bracketing root search."""
    if r == 0:
        return 0.0
    f = lambda k: (1.0 / math.tanh(k) - 1.0 / k) - r  # noqa: E731
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 1e-12, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def d3_psi(r):
    """Negative entropy by the Legendre transform: k r - Phi(k)."""
    k = d3_kappa(r)
    return k * r - d3_log_partition(k)


# arbitrary precision ------------------------------------------------------


def mp_log_iv(v, kappa, dps=30):
    with mp.workdps(dps):
        return float(mp.log(mp.besseli(mp.mpf(v), mp.mpf(kappa), maxterms=10**7)))


def mp_ratio(v, kappa, dps=40):
    """I_v / I_{v-1} in arbitrary precision."""
    with mp.workdps(dps):
        k = mp.mpf(kappa)
        return float(mp.besseli(mp.mpf(v), k, maxterms=10**7) / mp.besseli(mp.mpf(v) - 1, k, maxterms=10**7))


def mp_log_partition(D, kappa, dps=30):
    v = D / 2.0 - 1.0
    with mp.workdps(dps):
        k = mp.mpf(kappa)
        val = mp.log(mp.besseli(v, k, maxterms=10**7)) - v * mp.log(k) - mp.mpf(D) / 2 * mp.log(2 * mp.pi)
        return float(val)


def mp_psi_zero(D):
    with mp.workdps(30):
        return float((mp.mpf(D) / 2 - 1) * mp.log(2) + mp.mpf(D) / 2 * mp.log(2 * mp.pi) + mp.loggamma(mp.mpf(D) / 2))


def mp_kappa(D, r, dps=30):
    """Root of I_{D/2}/I_{D/2-1} = r by mpmath's secant solver."""
    with mp.workdps(dps):
        v = mp.mpf(D) / 2
        f = lambda k: mp.besseli(v, k, maxterms=10**7) / mp.besseli(v - 1, k, maxterms=10**7) - r  # noqa: E731
        guess = r * (D - r * r) / (1 - r * r)
        return float(mp.findroot(f, mp.mpf(guess)))


# ODE via an implicit solver ----------------------------------------------


def ivp_profile(D, r_end, eps, psi0, rtol=1e-11, atol=1e-12):
    """Integrate the trace-identity ODE with scipy's Radau solver."""

    def rhs(t, y):
        den = (1.0 - t * t) * y[1] + (1.0 - D) * t
        return [y[1], y[1] / den]

    sol = solve_ivp(rhs, (0.0, r_end), [psi0, eps], method="Radau", rtol=rtol, atol=atol, dense_output=True)
    assert sol.success, sol.message
    return sol.sol


# clustering ---------------------------------------------------------------


def nmi_sklearn(a, b):
    from sklearn.metrics import normalized_mutual_info_score

    return normalized_mutual_info_score(a, b, average_method="arithmetic")


def dense_radial_hessian(mu, g1, g2):
    """Hessian of g(|x|) assembled entrywise from its second partials."""
    mu = np.asarray(mu, dtype=float)
    D = mu.size
    r = np.linalg.norm(mu)
    H = np.empty((D, D))
    for i in range(D):
        for j in range(D):
            delta = 1.0 if i == j else 0.0
            H[i, j] = g2 * mu[i] * mu[j] / r**2 + g1 * (delta / r - mu[i] * mu[j] / r**3)
    return H


# text ---------------------------------------------------------------------


def tfidf_sklearn(texts, min_df, max_df, stopwords, idf="total-count"):
    """Vocabulary and normalized TF-IDF rows via scikit-learn's CountVectorizer.

    Returns ``(tokens, doc_freq, g, dense_rows)``; rows embedding to zero are
    returned as all-zero rows.
    """
    from sklearn.feature_extraction.text import CountVectorizer

    cv = CountVectorizer(
        lowercase=True,
        token_pattern=r"[^\W_]{2,}",
        min_df=min_df,
        max_df=max_df,
        stop_words=sorted(stopwords),
    )
    with warnings.catch_warnings():
        # apostrophe stopwords never match either tokenizer; sklearn warns about it
        warnings.simplefilter("ignore", UserWarning)
        counts = cv.fit_transform(texts).toarray().astype(float)
    names = cv.get_feature_names_out()
    keep = np.array([not t.isdigit() for t in names])
    counts, names = counts[:, keep], names[keep]
    df = (counts > 0).sum(axis=0)
    denom = df if idf == "doc-freq" else counts.sum(axis=0)
    g = np.log(len(texts) / denom)
    weighted = counts * g
    norms = np.linalg.norm(weighted, axis=1, keepdims=True)
    rows = np.divide(weighted, norms, out=np.zeros_like(weighted), where=norms > 0)
    return list(names), df, g, rows
