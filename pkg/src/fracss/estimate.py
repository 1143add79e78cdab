"""Minimization of the sum-of-squares objectives.

The optimizer is a deterministic multi-start Nelder-Mead run in a
box-transformed coordinate system.  All starts advance in lockstep so that
every iteration evaluates the objective for the whole population in one
vectorized call; this is what makes replication-heavy Monte Carlo work
practical on a single core.

Parameter points are mapped to unconstrained coordinates through a scaled
logistic transform, one box per coordinate: the memory parameter gets the
user box, short-run coefficient k of an order-q polynomial gets the
binomial box (-C(q,k), C(q,k)) that contains every invertible polynomial.
Points inside the box that still violate the parameter space (root radius,
near-common roots) evaluate to +inf and are handled by the simplex rules.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import expit, logit

from .arma import ArmaParams, ThetaParams, bh_coeffs, expand_weights
from .fracdiff import fracdiff
from .objective import (ObjectiveKind, batch_objective, css_known_mu,
                        css_profile, mu_hat)
from .special import ZETA2

NM_ALPHA, NM_GAMMA, NM_RHO, NM_SIGMA = 1.0, 2.0, 0.5, 0.5
NM_STEP = 0.5
NM_XATOL = 1e-8
NM_FATOL = 1e-12
NM_MAXFEV = 20000
D_GRID_STEP = 0.25
SHORT_RUN_GRID = (-0.5, 0.0, 0.5)
COEF_BOUND = 0.9999
BOX_EDGE_FRAC = 1e-3
FD_STEP = float(np.cbrt(np.finfo(float).eps))


class AllStartsFailed(Exception):
    """No admissible starting point: every grid start evaluated to +inf."""


class NonFiniteObjective(Exception):
    """The data contain non-finite values or the objective is inf everywhere."""


class SingularHessian(Exception):
    """The numerical Hessian at the optimum is not positive definite."""


@dataclass(frozen=True)
class ModelSpec:
    """Model shape: short-run orders, memory-parameter box, deterministics."""

    p1: int = 0
    p2: int = 0
    d_box: tuple = (-5.0, 5.0)
    deterministic: str = "constant"

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0:
            raise ValueError("orders must be non-negative")
        lo, hi = self.d_box
        if not lo < hi:
            raise ValueError("d_box must satisfy lo < hi")
        if self.deterministic not in ("constant", "none", "trend"):
            raise ValueError(f"unknown deterministic component {self.deterministic!r}")

    @property
    def n_params(self):
        return 1 + self.p1 + self.p2


@dataclass(frozen=True)
class FitResult:
    """Outcome of one estimation run."""

    theta: ThetaParams
    mu: object
    sigma2: float
    objective: float
    kind: ObjectiveKind
    spec: ModelSpec
    T: int
    converged: bool
    at_boundary: bool
    n_starts: int
    n_evals: int
    cov: np.ndarray = None
    message: str = ""

    @property
    def se(self):
        if self.cov is None:
            return None
        return np.sqrt(np.diag(self.cov))

    @property
    def t_stats(self):
        """Parameter estimates over their standard errors (zero null)."""
        se = self.se
        if se is None:
            return None
        return self.theta.as_vector() / se


@dataclass(frozen=True)
class AsyMatrix:
    """Limiting Hessian-scale matrix of the objective, order 1 + p1 + p2."""

    params: ArmaParams
    a: np.ndarray
    n_terms: int
    converged: bool


def _boxes(spec: ModelSpec):
    lo = [spec.d_box[0]]
    hi = [spec.d_box[1]]
    for q in (spec.p1, spec.p2):
        lo.extend([-COEF_BOUND] * q)
        hi.extend([COEF_BOUND] * q)
    return np.array(lo), np.array(hi)


def _to_z(theta, lo, hi):
    return logit((theta - lo) / (hi - lo))


def _from_z(z, lo, hi):
    return lo + (hi - lo) * expit(z)


def _start_grid(spec: ModelSpec):
    """Deterministic multi-start grid over the box.

    The memory parameter runs over the box in steps of 0.25 with the two
    endpoints pulled half a step inside; every short-run coefficient runs
    over (-0.5, 0, 0.5).  Inadmissible combinations are dropped later.
    """
    lo, hi = spec.d_box
    d_grid = np.arange(lo, hi + 1e-12, D_GRID_STEP)
    if d_grid[-1] < hi - 1e-12:
        d_grid = np.append(d_grid, hi)
    shift = min(0.5 * D_GRID_STEP, 0.1 * (hi - lo))
    d_grid[0] = lo + shift
    d_grid[-1] = hi - shift
    blocks = [d_grid] + [np.array(SHORT_RUN_GRID)] * (spec.p1 + spec.p2)
    mesh = np.meshgrid(*blocks, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


class _LockstepNelderMead:
    """Nelder-Mead over a population of simplices with batched evaluation.

    fn maps an (M, n) matrix of points to M objective values; each instance
    follows the textbook single-simplex rules, but reflections, expansions,
    contractions and shrink vertices of all live instances are pooled into
    a small number of batched calls per iteration.
    """

    def __init__(self, fn, x0, step=NM_STEP, xatol=NM_XATOL, fatol=NM_FATOL,
                 maxfev=NM_MAXFEV):
        x0 = np.atleast_2d(np.asarray(x0, dtype=float))
        S, n = x0.shape
        self.fn = fn
        self.n = n
        self.xatol = xatol
        self.fatol = fatol
        self.maxfev = maxfev
        sim = np.repeat(x0[:, None, :], n + 1, axis=1)
        for j in range(n):
            sim[:, j + 1, j] += step
        self.sim = sim
        self.fv = fn(sim.reshape(-1, n)).reshape(S, n + 1)
        self.nfev = np.full(S, n + 1)
        self.active = np.ones(S, dtype=bool)
        self.converged = np.zeros(S, dtype=bool)

    def _sort(self, idx):
        order = np.argsort(self.fv[idx], axis=1, kind="stable")
        self.sim[idx] = np.take_along_axis(self.sim[idx], order[:, :, None], axis=1)
        self.fv[idx] = np.take_along_axis(self.fv[idx], order, axis=1)

    def run(self):
        n = self.n
        while np.any(self.active):
            act = np.nonzero(self.active)[0]
            self._sort(act)
            span = np.max(np.abs(self.sim[act] - self.sim[act, :1, :]), axis=(1, 2))
            fspan = self.fv[act, -1] - self.fv[act, 0]
            # f tolerance is relative to the objective scale; an absolute
            # 1e-12 is below one ulp once the sum of squares is large
            ftol = self.fatol * np.maximum(1.0, np.abs(self.fv[act, 0]))
            done = (span < self.xatol) & (fspan < ftol)
            out_of_budget = self.nfev[act] >= self.maxfev
            self.converged[act[done]] = True
            self.active[act[done | out_of_budget]] = False
            act = np.nonzero(self.active)[0]
            if act.size == 0:
                break

            cen = np.mean(self.sim[act, :-1, :], axis=1)
            xr = cen + NM_ALPHA * (cen - self.sim[act, -1, :])
            fr = self.fn(xr)
            self.nfev[act] += 1
            fbest, fsecond, fworst = self.fv[act, 0], self.fv[act, -2], self.fv[act, -1]

            expand = fr < fbest
            accept_r = ~expand & (fr < fsecond)
            con_out = ~expand & ~accept_r & (fr < fworst)
            con_in = ~expand & ~accept_r & ~con_out
            shrink = np.zeros(act.size, dtype=bool)

            if np.any(expand):
                idx = act[expand]
                xe = cen[expand] + NM_GAMMA * (xr[expand] - cen[expand])
                fe = self.fn(xe)
                self.nfev[idx] += 1
                take_e = fe < fr[expand]
                self.sim[idx, -1, :] = np.where(take_e[:, None], xe, xr[expand])
                self.fv[idx, -1] = np.where(take_e, fe, fr[expand])
            if np.any(accept_r):
                idx = act[accept_r]
                self.sim[idx, -1, :] = xr[accept_r]
                self.fv[idx, -1] = fr[accept_r]
            if np.any(con_out):
                idx = act[con_out]
                xc = cen[con_out] + NM_RHO * (xr[con_out] - cen[con_out])
                fc = self.fn(xc)
                self.nfev[idx] += 1
                take_c = fc <= fr[con_out]
                self.sim[idx[take_c], -1, :] = xc[take_c]
                self.fv[idx[take_c], -1] = fc[take_c]
                shrink[np.nonzero(con_out)[0][~take_c]] = True
            if np.any(con_in):
                idx = act[con_in]
                xc = cen[con_in] - NM_RHO * (cen[con_in] - self.sim[idx, -1, :])
                fc = self.fn(xc)
                self.nfev[idx] += 1
                take_c = fc < self.fv[idx, -1]
                self.sim[idx[take_c], -1, :] = xc[take_c]
                self.fv[idx[take_c], -1] = fc[take_c]
                shrink[np.nonzero(con_in)[0][~take_c]] = True
            if np.any(shrink):
                idx = act[shrink]
                best = self.sim[idx, :1, :]
                self.sim[idx, 1:, :] = best + NM_SIGMA * (self.sim[idx, 1:, :] - best)
                fv = self.fn(self.sim[idx, 1:, :].reshape(-1, n)).reshape(idx.size, n)
                self.fv[idx, 1:] = fv
                self.nfev[idx] += n

        self._sort(np.arange(self.sim.shape[0]))
        return self.sim[:, 0, :], self.fv[:, 0], self.converged.copy(), self.nfev.copy()


def _as_kind(kind, mu0):
    if isinstance(kind, ObjectiveKind):
        return kind
    return ObjectiveKind(variant=kind, mu0=mu0)


def _trend_betas(theta: ThetaParams, x):
    """Profiled constant and trend coefficients at fixed theta."""
    arma = theta.arma
    T = x.shape[0]
    cols = np.column_stack([
        lfilter(arma.ar_poly, arma.ma_poly, fracdiff(np.ones(T), theta.d)),
        lfilter(arma.ar_poly, arma.ma_poly, fracdiff(np.arange(1.0, T + 1.0), theta.d)),
    ])
    f = lfilter(arma.ar_poly, arma.ma_poly, fracdiff(x, theta.d))
    beta, *_ = np.linalg.lstsq(cols, f, rcond=None)
    return float(beta[0]), float(beta[1])


def estimate(x, spec: ModelSpec, kind="mcss", mu0: float = None,
             with_cov: bool = False, maxfev: int = NM_MAXFEV) -> FitResult:
    """Fit the model by minimizing the requested sum-of-squares objective.

    Runs the full deterministic multi-start population to convergence,
    picks the winner by (objective value, lexicographic parameter) and
    polishes it with a fresh simplex.  ``with_cov=True`` attaches the
    inverse-Hessian covariance of the minimized objective.

    Parameters
    ----------
    x : array_like
        Observed series, length >= 4.
    spec : ModelSpec
        Orders, memory box and deterministic component.
    kind : str or ObjectiveKind
        "css", "css-mu0" or "mcss".
    mu0 : float, optional
        Known level, required for "css-mu0".
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 4:
        raise ValueError("x must be a 1-d series with at least 4 observations")
    if not np.all(np.isfinite(x)):
        raise NonFiniteObjective("input series contains non-finite values")
    kind = _as_kind(kind, mu0)
    engine = batch_objective(x, spec.p1, spec.p2, kind, spec.deterministic)
    lo, hi = _boxes(spec)

    def fn(z):
        return engine(_from_z(np.atleast_2d(z), lo, hi))

    starts = _start_grid(spec)
    keep = np.isfinite(engine(starts))
    if not np.any(keep):
        raise AllStartsFailed("every multi-start point evaluated to +inf")
    z0 = _to_z(starts[keep], lo, hi)

    nm = _LockstepNelderMead(fn, z0, maxfev=maxfev)
    zb, fb, conv, _ = nm.run()
    if not np.any(np.isfinite(fb)):
        raise NonFiniteObjective("objective is +inf at every candidate optimum")
    thetas = _from_z(zb, lo, hi)
    ranked = sorted(range(zb.shape[0]),
                    key=lambda i: (fb[i], tuple(thetas[i])))
    best = ranked[0]

    polish = _LockstepNelderMead(fn, zb[best:best + 1], maxfev=maxfev)
    zp, fp, convp, _ = polish.run()
    theta_vec = _from_z(zp, lo, hi)[0]
    objective = float(fp[0])
    converged = bool(convp[0]) and bool(conv[best])

    theta = ThetaParams.from_vector(theta_vec, spec.p1, spec.p2)
    edge = BOX_EDGE_FRAC * (hi - lo)
    at_boundary = bool(np.any((theta_vec - lo < edge) | (hi - theta_vec < edge)))

    T = x.shape[0]
    if spec.deterministic == "none":
        mu = 0.0
        sigma2 = 2.0 * css_known_mu(theta, 0.0, x) / T
    elif kind.variant == "css-mu0":
        mu = kind.mu0
        sigma2 = 2.0 * css_known_mu(theta, mu, x) / T
    elif spec.deterministic == "trend":
        mu = _trend_betas(theta, x)
        r = _trend_residuals(theta, mu, x)
        sigma2 = float(r @ r) / T
    else:
        mu = mu_hat(theta, x)
        sigma2 = 2.0 * css_profile(theta, x) / T

    cov = None
    if with_cov:
        cov = hessian_cov(lambda v: float(engine(v[None, :])[0]), theta_vec, sigma2)

    return FitResult(theta=theta, mu=mu, sigma2=sigma2, objective=objective,
                     kind=kind, spec=spec, T=T, converged=converged,
                     at_boundary=at_boundary, n_starts=int(np.sum(keep)),
                     n_evals=engine.n_evals, cov=cov)


def _trend_residuals(theta, betas, x):
    arma = theta.arma
    T = x.shape[0]
    f = lfilter(arma.ar_poly, arma.ma_poly, fracdiff(x, theta.d))
    c1 = lfilter(arma.ar_poly, arma.ma_poly, fracdiff(np.ones(T), theta.d))
    c2 = lfilter(arma.ar_poly, arma.ma_poly, fracdiff(np.arange(1.0, T + 1.0), theta.d))
    return f - betas[0] * c1 - betas[1] * c2


def hessian_cov(fn, theta, sigma2: float) -> np.ndarray:
    """Covariance estimate sigma2 * H^{-1} from a central-difference Hessian.

    The Hessian of the (half-sum-of-squares) objective is formed in the
    original parameter coordinates with steps cbrt(eps) * (1 + |theta_i|),
    symmetrized, and must be positive definite.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    h = FD_STEP * (1.0 + np.abs(theta))
    H = np.empty((n, n))
    f0 = fn(theta)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (fn(theta + ei) - 2.0 * f0 + fn(theta - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = (fn(theta + ei + ej) - fn(theta + ei - ej)
                       - fn(theta - ei + ej) + fn(theta - ei - ej)) / (4.0 * h[i] * h[j])
            H[j, i] = H[i, j]
    H = 0.5 * (H + H.T)
    if not np.all(np.isfinite(H)):
        raise SingularHessian("non-finite Hessian entries at the optimum")
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise SingularHessian("Hessian at the optimum is not positive definite")
    return sigma2 * np.linalg.inv(H)


def asy_matrix(params: ArmaParams, n0: int = 4096, tail_len: int = 50,
               rtol: float = 1e-13, nmax: int = 1_000_000) -> AsyMatrix:
    """Limiting second-derivative matrix of the normalized objective.

    Entry (0, 0) is pi^2/6 exactly.  The remaining entries are infinite
    series in the derivative filter coefficients b; truncation doubles from
    n0 until the last ``tail_len`` increments of every running sum are below
    ``rtol`` in relative terms, capped at ``nmax``.
    """
    params.validate()
    p = params.p
    N = n0
    while True:
        table = expand_weights(params, N)
        bh = bh_coeffs(table)
        b = bh.b1
        j = np.arange(1, N)
        a = np.empty((1 + p, 1 + p))
        a[0, 0] = ZETA2
        ok = True
        for m in range(p):
            inc = b[m, 1:] / j
            a[0, 1 + m] = a[1 + m, 0] = -np.sum(inc)
            ok &= _tail_small(inc, a[0, 1 + m], tail_len, rtol)
            for z in range(m, p):
                inc2 = b[m] * b[z]
                a[1 + m, 1 + z] = a[1 + z, 1 + m] = np.sum(inc2)
                ok &= _tail_small(inc2, a[1 + m, 1 + z], tail_len, rtol)
        if ok or N >= nmax:
            return AsyMatrix(params=params, a=a, n_terms=N, converged=bool(ok))
        N = min(2 * N, nmax)


def _tail_small(increments, total, tail_len, rtol):
    scale = max(abs(float(total)), 1.0)
    tail = np.abs(increments[-tail_len:])
    return bool(np.all(tail < rtol * scale))
