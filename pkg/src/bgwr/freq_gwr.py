"""Classical frequentist GWR: per-location weighted least squares,
SSE-grid bandwidth selection, and the effective number of parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from .weighting import weight_matrix


class SingularSystemError(np.linalg.LinAlgError):
    """Weighted design is rank deficient at some location."""

    def __init__(self, location, rcond=None):
        self.location = location
        self.rcond = rcond
        msg = f"singular weighted system at location {location!r}"
        if rcond is not None:
            msg += f" (reciprocal condition number {rcond:.3e})"
        super().__init__(msg)


RCOND_MIN = 1e-12  # on X'WX, i.e. squared singular-value ratio of sqrt(W)X


@dataclass
class Dataset:
    """Response vector, covariate matrix, and the areal unit of each row."""

    y: np.ndarray
    X: np.ndarray
    locations: tuple
    intercept_included: bool = False

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        self.locations = tuple(self.locations)
        if self.X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, p = self.X.shape
        if self.y.shape != (n,) or len(self.locations) != n:
            raise ValueError("y, X, and locations must agree in length")
        if n == 0:
            raise ValueError("empty dataset")
        if n < p:
            raise ValueError("need at least as many observations as covariates")
        if not (np.isfinite(self.y).all() and np.isfinite(self.X).all()):
            raise ValueError("non-finite entry in dataset")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def unique_locations(self):
        """Distinct location ids in order of first appearance."""
        seen = dict.fromkeys(self.locations)
        return tuple(seen)


@dataclass
class FreqFit:
    """Per-location WLS coefficients with bookkeeping."""

    locations: tuple
    beta_hat: np.ndarray  # (L, p)
    sse: float
    scheme: object
    effective_params: float


def wls_fit(data, w):
    """Exact weighted-least-squares minimizer at one location.

    Solves min_beta ||sqrt(W)(y - X beta)||^2 by QR on the zero-weight-free
    rows.  Raises SingularSystemError when X'WX is numerically singular
    (reciprocal condition number below 1e-12).
    """
    wt = np.asarray(w.weights, dtype=float)
    mask = wt > 0
    sw = np.sqrt(wt[mask])
    A = data.X[mask] * sw[:, None]
    z = data.y[mask] * sw
    if A.shape[0] < data.p:
        raise SingularSystemError(w.location)
    s = np.linalg.svd(A, compute_uv=False)
    rcond = (s[-1] / s[0]) ** 2 if s[0] > 0 else 0.0
    if rcond < RCOND_MIN:
        raise SingularSystemError(w.location, rcond)
    Q, R = np.linalg.qr(A)
    return np.linalg.solve(R, Q.T @ z)


def fit_all_locations(data, scheme, d):
    """WLS fit at every distinct data location.

    SSE sums each observation's squared residual under its own location's
    coefficients.
    """
    locs = data.unique_locations()
    beta = np.empty((len(locs), data.p))
    sse = 0.0
    loc_arr = np.array(data.locations)
    for k, s in enumerate(locs):
        beta[k] = wls_fit(data, weight_matrix(scheme, d, s, data.locations))
        own = loc_arr == s
        resid = data.y[own] - data.X[own] @ beta[k]
        sse += float(resid @ resid)
    enp = effective_params_freq(data, scheme, d)
    return FreqFit(locations=locs, beta_hat=beta, sse=sse, scheme=scheme,
                   effective_params=enp)


def effective_params_freq(data, scheme, d):
    """Trace of the GWR hat matrix.

    Row i of the hat matrix is x_i' (X'W(l_i)X)^{-1} X'W(l_i) with l_i the
    location of observation i; only the diagonal is accumulated.
    """
    trace = 0.0
    loc_arr = np.array(data.locations)
    for s in dict.fromkeys(data.locations):
        w = weight_matrix(scheme, d, s, data.locations)
        wt = w.weights
        mask = wt > 0
        A = data.X[mask] * np.sqrt(wt[mask])[:, None]
        sv = np.linalg.svd(A, compute_uv=False)
        rcond = (sv[-1] / sv[0]) ** 2 if sv[0] > 0 else 0.0
        if rcond < RCOND_MIN:
            raise SingularSystemError(s, rcond)
        M = A.T @ A
        Minv = np.linalg.inv(M)
        own = loc_arr == s
        Xs = data.X[own]
        # own-location observations have weight 1 (distance zero)
        trace += float(np.einsum("ij,jk,ik->", Xs, Minv, Xs))
    return trace


def select_bandwidth_grid(data, kernel, d, grid):
    """Pick the bandwidth minimizing total SSE over a grid.

    Returns (best bandwidth, list of (bandwidth, sse) rows).  Grid points
    where some location is singular get SSE NaN; ties break toward the
    smaller bandwidth.
    """
    grid = sorted(float(b) for b in grid)
    if not grid:
        raise ValueError("empty bandwidth grid")
    if any(b <= 0 for b in grid):
        raise ValueError("bandwidths must be positive")
    table = []
    for b in grid:
        scheme = kernel.with_bandwidth(b) if hasattr(kernel, "with_bandwidth") else kernel
        try:
            table.append((b, fit_all_locations(data, scheme, d).sse))
        except SingularSystemError:
            table.append((b, float("nan")))
    finite = [(sse, b) for b, sse in table if np.isfinite(sse)]
    if not finite:
        raise SingularSystemError("all grid points")
    best = min(finite)[1]
    return best, table


def default_bandwidth_grid(d, num=40):
    """Log-spaced grid on [0.1*d_max, 10*d_max], d_max the largest finite
    distance."""
    finite = d.values[np.isfinite(d.values)]
    d_max = float(finite.max())
    if d_max <= 0:
        d_max = 1.0
    return list(np.geomspace(0.1 * d_max, 10.0 * d_max, num))
