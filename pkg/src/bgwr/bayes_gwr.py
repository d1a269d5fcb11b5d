"""Bayesian GWR with spike-and-slab variable selection and bandwidth inference.

The target posterior multiplies, across locations s, the weighted
multivariate-normal likelihood MVN(Y; X beta(s), sigma2(s) W(s|b)^-1) with
per-location coefficient and variance priors, a single inclusion indicator
gamma_j shared by all locations, and a single bandwidth b with a Uniform(0, D)
prior.

Update scheme per sweep:

* for each covariate j: draw gamma_j from its conditional with beta_j(.)
  integrated out (exact Gaussian marginal), then redraw beta_j(s) from its
  conjugate normal conditional -- a blocked update that mixes across the
  spike/slab states without random-walk moves;
* sigma2(s) from its conjugate inverse-gamma conditional;
* optionally tau_j^2 from its inverse-gamma conditional (hyperprior variant);
* b by random-walk Metropolis--Hastings, proposals folded back into (0, D)
  by reflection; the proposal scale adapts toward ~0.3 acceptance during
  burn-in and is frozen afterwards.

Observations with weight zero at a location contribute nothing to that
location's likelihood (sigma2 W^-1 is undefined at w = 0); the log-determinant
runs over positive-weight rows only.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .weighting import WeightScheme, kernel_weight, log_kernel_weight

MH_TARGET_ACCEPT = 0.3
MH_ADAPT_WINDOW = 50
MH_ADAPT_FACTOR = 1.5


@dataclass(frozen=True)
class BayesConfig:
    """Priors, chain settings, and diagnostic switches.

    tau2/c2 give the spike and slab variances (slab variance = c2*tau2);
    setting ``tau_hyperprior`` replaces the fixed tau2 with an
    IGamma(alpha1, alpha2) hyperprior.  ``selection=False`` drops the
    spike-and-slab layer and uses a fixed N(0, slab_only_var I) coefficient
    prior.  The fix_* fields pin a component for validation runs, and
    ``flat_likelihood`` replaces the data likelihood by a constant so the
    chain should recover the prior.
    """

    tau2: float = 0.001
    c2: float = 10000.0
    inclusion_prior: float = 0.5
    alpha1: float = 0.01
    alpha2: float = 0.01
    bandwidth_upper: float = 100.0
    chain_length: int = 4000
    burn_in: int = 1000
    seed: int = 0
    tau_hyperprior: bool = False
    selection: bool = True
    slab_only_var: float = 100.0
    fix_sigma2: float = None
    fix_gamma: tuple = None
    fix_bandwidth: float = None
    flat_likelihood: bool = False

    def __post_init__(self):
        if self.tau2 <= 0 or self.c2 <= 1:
            raise ValueError("require tau2 > 0 and c2 > 1")
        if not 0 < self.inclusion_prior < 1:
            raise ValueError("inclusion_prior must be in (0, 1)")
        if self.bandwidth_upper <= 0:
            raise ValueError("bandwidth upper limit D must be positive")
        if not 0 <= self.burn_in < self.chain_length:
            raise ValueError("require 0 <= burn_in < chain_length")


@dataclass
class GwrPosterior:
    """Post-burn-in chains plus the geometry needed to re-evaluate them."""

    locations: tuple
    beta: np.ndarray      # (T, L, p)
    sigma2: np.ndarray    # (T, L)
    gamma: np.ndarray     # (T, p) of 0/1
    b: np.ndarray         # (T,)
    acceptance_rate_b: float
    kernel: str
    dsub: np.ndarray      # (L, L) distances between data locations
    config: BayesConfig
    b_full: np.ndarray = None       # bandwidth trace including burn-in
    proposal_scale: float = None    # frozen MH scale after adaptation

    @property
    def n_draws(self):
        return self.beta.shape[0]


@dataclass
class PosteriorSummary:
    locations: tuple
    beta_mean: np.ndarray     # (L, p)
    sigma2_mean: np.ndarray   # (L,)
    hpd_lower: np.ndarray     # (L, p)
    hpd_upper: np.ndarray     # (L, p)
    inclusion_freq: np.ndarray  # (p,)
    selected: tuple           # 1-based covariate indices
    b_mean: float


def block_stats(data, locations):
    """Per-location sufficient statistics of the design.

    Returns (G, h, q, counts): Gram blocks X_l'X_l, cross products X_l'y_l,
    squared norms y_l'y_l, and observation counts, in ``locations`` order.
    """
    p = data.p
    L = len(locations)
    G = np.zeros((L, p, p))
    h = np.zeros((L, p))
    q = np.zeros(L)
    counts = np.zeros(L)
    loc_arr = np.array(data.locations)
    for k, s in enumerate(locations):
        rows = loc_arr == s
        Xs, ys = data.X[rows], data.y[rows]
        G[k] = Xs.T @ Xs
        h[k] = Xs.T @ ys
        q[k] = ys @ ys
        counts[k] = rows.sum()
    return G, h, q, counts


def location_kernel(kernel, dsub, b):
    """Location-by-location weight matrix K[s, l] = kernel(d(s, l) | b)."""
    return kernel_weight(WeightScheme(kernel, b if kernel != "unity" else None), dsub)


def location_log_kernel(kernel, dsub, b):
    """Log weights with structural zeros as -inf (underflow-safe)."""
    return log_kernel_weight(WeightScheme(kernel, b if kernel != "unity" else None), dsub)


def log_likelihood_location(data, s, beta_s, sigma2_s, w):
    """Weighted Gaussian log-likelihood at one location.

    Zero-weight rows are excluded; n' counts the positive-weight rows.
    """
    if sigma2_s <= 0:
        raise ValueError("sigma2 must be positive")
    wt = np.asarray(w.weights, dtype=float)
    mask = wt > 0
    n_pos = int(mask.sum())
    resid = data.y[mask] - data.X[mask] @ np.asarray(beta_s, dtype=float)
    quad = float(resid @ (wt[mask] * resid))
    return -0.5 * (n_pos * math.log(2 * math.pi) + n_pos * math.log(sigma2_s)
                   - float(np.log(wt[mask]).sum()) + quad / sigma2_s)


def _kernel_state(kernel, dsub, b, counts, G, h):
    """Everything that depends on the bandwidth: weights, blocks, log-det.

    Positivity is judged on the analytic log weights so that underflowed
    (but structurally positive) weights keep their observations in the
    likelihood with the exact log-weight penalty.
    """
    logK = location_log_kernel(kernel, dsub, b)
    K = np.exp(logK)
    pos = np.isfinite(logK)
    npos = pos @ counts
    sumlogw = np.where(pos, logK, 0.0) @ counts
    M = np.einsum("sl,lij->sij", K, G)
    V = K @ h
    return {"b": b, "K": K, "npos": npos, "sumlogw": sumlogw, "M": M, "V": V}


def _total_loglik(state, A, sigma2):
    Q = (state["K"] * A).sum(axis=1)
    return -0.5 * float(np.sum(state["npos"] * (math.log(2 * math.pi) + np.log(sigma2))
                               - state["sumlogw"] + Q / sigma2))


def _quad_matrix(beta, G, h, q):
    """A[s, l] = q_l - 2 beta_s . h_l + beta_s' G_l beta_s."""
    return q[None, :] - 2.0 * beta @ h.T + np.einsum("sp,lpq,sq->sl", beta, G, beta)


def _fold(x, upper):
    """Reflect a proposal back into (0, upper)."""
    period = 2.0 * upper
    x = np.abs(x) % period
    return period - x if x > upper else x


def run_sampler(data, d, kernel, cfg):
    """Run the MCMC chain and return post-burn-in draws.

    ``kernel`` is a kernel name (or WeightScheme, whose bandwidth is
    ignored -- the bandwidth is sampled).  Bit-identical output for
    identical (data, d, kernel, cfg).
    """
    if isinstance(kernel, WeightScheme):
        kernel = kernel.kernel
    if data.n == 0:
        raise ValueError("empty dataset")
    locs = data.unique_locations()
    L, p = len(locs), data.p
    dsub = d.submatrix(locs)
    G, h, q, counts = block_stats(data, locs)
    rng = np.random.default_rng(cfg.seed)
    D = cfg.bandwidth_upper
    flat = cfg.flat_likelihood

    gamma = np.ones(p, dtype=int) if cfg.fix_gamma is None else np.asarray(cfg.fix_gamma, dtype=int)
    if cfg.fix_gamma is not None and gamma.shape != (p,):
        raise ValueError("fix_gamma length must match the covariate count")
    tau2 = np.full(p, cfg.tau2)
    b = cfg.fix_bandwidth if cfg.fix_bandwidth is not None else D / 2.0

    state = _kernel_state(kernel, dsub, b, counts, G, h)
    # deterministic start: ridge-stabilized WLS coefficients, residual variance
    ridge = state["M"] + 1e-8 * np.eye(p)
    beta = np.linalg.solve(ridge, state["V"][..., None])[..., 0]
    A = _quad_matrix(beta, G, h, q)
    Q0 = (state["K"] * A).sum(axis=1)
    sigma2 = np.maximum(Q0 / np.maximum(state["npos"], 1.0), 1e-6)
    if cfg.fix_sigma2 is not None:
        sigma2 = np.full(L, float(cfg.fix_sigma2))
    if not flat and not np.isfinite(_total_loglik(state, A, sigma2)):
        raise ValueError("non-finite posterior density at initialization")

    logit_prior = math.log(cfg.inclusion_prior) - math.log1p(-cfg.inclusion_prior)
    prop_scale = D / 10.0
    adapt_accepts = 0
    n_keep = cfg.chain_length - cfg.burn_in
    beta_out = np.empty((n_keep, L, p))
    sigma2_out = np.empty((n_keep, L))
    gamma_out = np.empty((n_keep, p), dtype=int)
    b_out = np.empty(n_keep)
    b_full = np.empty(cfg.chain_length)
    accepted_post = 0

    for t in range(cfg.chain_length):
        # --- (gamma_j, beta_j(.)) blocked updates -------------------------
        Mbeta = np.einsum("sij,sj->si", state["M"], beta)
        for j in range(p):
            v0 = tau2[j]
            v1 = cfg.c2 * tau2[j]
            Mjj = state["M"][:, j, j]
            num = state["V"][:, j] - Mbeta[:, j] + Mjj * beta[:, j]
            if flat:
                lam = np.zeros(L)
                tstat = np.zeros(L)
            else:
                lam = np.where(Mjj > 0, Mjj / sigma2, 0.0)
                tstat = np.where(Mjj > 0, num ** 2 / (np.where(Mjj > 0, Mjj, 1.0) * sigma2), 0.0)
            if not cfg.selection:
                gamma[j] = 1
                v = cfg.slab_only_var
            else:
                if cfg.fix_gamma is None:
                    # beta_j integrated out: per-location Bayes factor of
                    # slab vs spike given the conditional Gaussian likelihood
                    log_bf = (-0.5 * (np.log1p(lam * v1) - np.log1p(lam * v0))
                              - 0.5 * tstat * (1.0 / (lam * v1 + 1.0) - 1.0 / (lam * v0 + 1.0)))
                    log_odds = logit_prior + float(log_bf.sum())
                    u = rng.random()
                    gamma[j] = 1 if math.log(u) - math.log1p(-u) < log_odds else 0
                v = v1 if gamma[j] == 1 else v0
            if flat:
                new_bj = rng.normal(0.0, math.sqrt(v), size=L)
            else:
                prec = lam + 1.0 / v
                mean = np.where(Mjj > 0, num / sigma2, 0.0) / prec
                new_bj = mean + rng.normal(size=L) / np.sqrt(prec)
            Mbeta += state["M"][:, :, j] * (new_bj - beta[:, j])[:, None]
            beta[:, j] = new_bj

        A = _quad_matrix(beta, G, h, q)

        # --- sigma2(s) ----------------------------------------------------
        if cfg.fix_sigma2 is None:
            if flat:
                # guard the reciprocal: a tiny-shape gamma draw can underflow to 0
                g = np.maximum(rng.gamma(cfg.alpha1, 1.0 / cfg.alpha2, size=L),
                               np.finfo(float).tiny)
                sigma2 = 1.0 / g
            else:
                Q = (state["K"] * A).sum(axis=1)
                shape = cfg.alpha1 + state["npos"] / 2.0
                rate = cfg.alpha2 + Q / 2.0
                sigma2 = rate / rng.gamma(shape, 1.0, size=L)

        # --- tau_j^2 hyperprior -------------------------------------------
        if cfg.tau_hyperprior and cfg.selection:
            scale_div = np.where(gamma == 1, cfg.c2, 1.0)
            rate = cfg.alpha2 + 0.5 * (beta ** 2 / scale_div).sum(axis=0)
            tau2 = rate / rng.gamma(cfg.alpha1 + L / 2.0, 1.0, size=p)

        # --- bandwidth by folded random-walk MH ---------------------------
        if cfg.fix_bandwidth is None:
            b_prop = _fold(state["b"] + prop_scale * rng.normal(), D)
            if flat:
                accept = True
                prop_state = _kernel_state(kernel, dsub, b_prop, counts, G, h)
            else:
                prop_state = _kernel_state(kernel, dsub, b_prop, counts, G, h)
                log_ratio = _total_loglik(prop_state, A, sigma2) - _total_loglik(state, A, sigma2)
                accept = math.log(rng.random()) < log_ratio
            if accept:
                state = prop_state
                adapt_accepts += 1
                if t >= cfg.burn_in:
                    accepted_post += 1
            if t < cfg.burn_in and (t + 1) % MH_ADAPT_WINDOW == 0:
                rate = adapt_accepts / MH_ADAPT_WINDOW
                if rate > MH_TARGET_ACCEPT + 0.05:
                    prop_scale = min(prop_scale * MH_ADAPT_FACTOR, 50.0 * D)
                elif rate < MH_TARGET_ACCEPT - 0.05:
                    prop_scale = max(prop_scale / MH_ADAPT_FACTOR, 1e-6 * D)
                adapt_accepts = 0

        b_full[t] = state["b"]
        if t >= cfg.burn_in:
            k = t - cfg.burn_in
            beta_out[k] = beta
            sigma2_out[k] = sigma2
            gamma_out[k] = gamma
            b_out[k] = state["b"]

    acc = accepted_post / n_keep if cfg.fix_bandwidth is None else 0.0
    return GwrPosterior(locations=locs, beta=beta_out, sigma2=sigma2_out,
                        gamma=gamma_out, b=b_out, acceptance_rate_b=acc,
                        kernel=kernel, dsub=dsub, config=cfg,
                        b_full=b_full, proposal_scale=prop_scale)


def hpd_interval(samples, mass=0.95):
    """Shortest contiguous window of sorted samples holding ceil(mass*T)."""
    x = np.sort(np.asarray(samples, dtype=float))
    T = x.size
    if T == 0:
        raise ValueError("empty sample")
    m = int(math.ceil(mass * T))
    widths = x[m - 1:] - x[:T - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])


def _hpd_chains(chains, mass=0.95):
    """Vectorized HPD along axis 0 of a (T, ...) array."""
    x = np.sort(chains, axis=0)
    T = x.shape[0]
    m = int(math.ceil(mass * T))
    widths = x[m - 1:] - x[:T - m + 1]
    i = np.argmin(widths, axis=0)
    lower = np.take_along_axis(x, i[None], axis=0)[0]
    upper = np.take_along_axis(x, (i + m - 1)[None], axis=0)[0]
    return lower, upper


def posterior_summary(post, mass=0.95):
    """Posterior means, HPD intervals, inclusion frequencies, selected set."""
    if post.n_draws == 0:
        raise ValueError("empty chain")
    lower, upper = _hpd_chains(post.beta, mass)
    freq = post.gamma.mean(axis=0)
    return PosteriorSummary(
        locations=post.locations,
        beta_mean=post.beta.mean(axis=0),
        sigma2_mean=post.sigma2.mean(axis=0),
        hpd_lower=lower,
        hpd_upper=upper,
        inclusion_freq=freq,
        selected=selected_model(post),
        b_mean=float(post.b.mean()),
    )


def selected_model(post):
    """1-based covariate indices with posterior inclusion frequency >= 0.5.

    Frequencies exactly at 0.5 count as selected.
    """
    freq = post.gamma.mean(axis=0)
    return tuple(int(j) + 1 for j in np.flatnonzero(freq >= 0.5))
