"""Bayesian model comparison: deviance, DIC, effective parameters, CPO, LPML.

The deviance is -2 times the pseudo-likelihood of the fitted model, summed
over locations; each location's term is the weighted Gaussian log-likelihood
over its positive-weight observations (the log-variance term carries the
positive-weight count n', which the -2 log density requires).

All density accumulation runs in the log domain; the harmonic-mean CPO
estimator uses log-sum-exp so small per-draw densities cannot underflow.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bayes_gwr import block_stats, location_log_kernel


@dataclass
class ModelAssessment:
    dic: float = None
    p_d: float = None
    mean_deviance: float = None
    deviance_at_mean: float = None
    lpml: float = None
    cpo: np.ndarray = None


def deviance(data, beta, sigma2, weights):
    """-2 log pseudo-likelihood summed over locations.

    ``beta`` is (L, p), ``sigma2`` (L,), and ``weights`` (L, n): one row of
    per-observation weights per location.
    """
    beta = np.asarray(beta, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    total = 0.0
    for k in range(beta.shape[0]):
        w = weights[k]
        mask = w > 0
        n_pos = int(mask.sum())
        resid = data.y[mask] - data.X[mask] @ beta[k]
        quad = float(resid @ (w[mask] * resid))
        total += (n_pos * math.log(2 * math.pi) + n_pos * math.log(sigma2[k])
                  - float(np.log(w[mask]).sum()) + quad / sigma2[k])
    return total


def _deviance_terms(data, post):
    """Per-draw deviance of every chain state, plus the plug-in deviance.

    Vectorized over draws via the per-location Gram blocks; returns
    (per-draw deviances, deviance at the posterior means of beta, sigma2, b).
    """
    locs = post.locations
    G, h, q, counts = block_stats(data, locs)
    A = (q[None, None, :]
         - 2.0 * np.einsum("tsp,lp->tsl", post.beta, h)
         + np.einsum("tsp,lpq,tsq->tsl", post.beta, G, post.beta))
    T = post.n_draws
    dev = np.empty(T)
    # kernel matrices repeat across equal b draws; cache per unique value
    cache = {}
    for t in range(T):
        bt = post.b[t]
        if bt not in cache:
            logK = location_log_kernel(post.kernel, post.dsub, bt)
            K = np.exp(logK)
            pos = np.isfinite(logK)
            npos = pos @ counts
            sumlogw = np.where(pos, logK, 0.0) @ counts
            cache[bt] = (K, npos, sumlogw)
        K, npos, sumlogw = cache[bt]
        Q = (K * A[t]).sum(axis=1)
        dev[t] = float(np.sum(npos * (math.log(2 * math.pi) + np.log(post.sigma2[t]))
                              - sumlogw + Q / post.sigma2[t]))
    beta_bar = post.beta.mean(axis=0)
    sigma2_bar = post.sigma2.mean(axis=0)
    b_bar = float(post.b.mean())
    logK = location_log_kernel(post.kernel, post.dsub, b_bar)
    K = np.exp(logK)
    A_bar = (q[None, :] - 2.0 * beta_bar @ h.T
             + np.einsum("sp,lpq,sq->sl", beta_bar, G, beta_bar))
    pos = np.isfinite(logK)
    npos = pos @ counts
    sumlogw = np.where(pos, logK, 0.0) @ counts
    Q = (K * A_bar).sum(axis=1)
    dev_at_mean = float(np.sum(npos * (math.log(2 * math.pi) + np.log(sigma2_bar))
                               - sumlogw + Q / sigma2_bar))
    return dev, dev_at_mean


def dic(post, data):
    """DIC = Dev(posterior mean) + 2 p_D, with p_D = mean Dev - Dev(mean).

    Both algebraic forms of the DIC are computed and must agree.
    """
    if post.n_draws == 0:
        raise ValueError("empty chain")
    dev, dev_at_mean = _deviance_terms(data, post)
    mean_dev = float(dev.mean())
    p_d = mean_dev - dev_at_mean
    dic_1 = dev_at_mean + 2.0 * p_d
    dic_2 = 2.0 * mean_dev - dev_at_mean
    if abs(dic_1 - dic_2) > 1e-8 * max(1.0, abs(dic_1)):
        raise AssertionError("DIC identity violated")
    return ModelAssessment(dic=dic_1, p_d=p_d, mean_deviance=mean_dev,
                           deviance_at_mean=dev_at_mean)


def cpo_lpml(post, data):
    """Harmonic-mean CPO per observation and the LPML.

    The per-draw density of observation i is the univariate normal at its
    own location's parameters (self-weight 1):
    CPO_i^-1 = (1/T) sum_t 1/f(y_i | x_i, beta_t(l_i), sigma2_t(l_i)).
    """
    if post.n_draws == 0:
        raise ValueError("empty chain")
    loc_index = {s: k for k, s in enumerate(post.locations)}
    idx = np.array([loc_index[s] for s in data.locations])
    mu = np.einsum("tnp,np->tn", post.beta[:, idx, :], data.X)
    s2 = post.sigma2[:, idx]
    logf = -0.5 * (np.log(2 * math.pi * s2) + (data.y[None, :] - mu) ** 2 / s2)
    # log CPO_i = log T - logsumexp_t(-log f_ti)
    neg = -logf
    m = neg.max(axis=0)
    log_cpo = math.log(post.n_draws) - (m + np.log(np.exp(neg - m).sum(axis=0)))
    return ModelAssessment(lpml=float(log_cpo.sum()), cpo=np.exp(log_cpo))


def assess(post, data):
    """DIC and LPML in one ModelAssessment."""
    a = dic(post, data)
    b = cpo_lpml(post, data)
    a.lpml = b.lpml
    a.cpo = b.cpo
    return a
