"""Profile objective functions for the sum-of-squares estimators.

Three objectives are provided: the profile (level-concentrated) sum of
squares, the known-level sum of squares, and the modified profile objective
that multiplies the profile by a determinant-based modification term.  The
convoluted coefficient sequence c_t, which is how the unknown level enters
the filtered model, is the shared ingredient.

Residuals are computed by filtering the data first and subtracting the
level afterwards,

    e_t(theta, mu) = [phi(L) D_+^d x]_t - mu * c_t(theta),

which is algebraically identical to filtering x_t - mu directly but lets a
single filter pass serve every candidate level.

A vectorized engine (`batch_objective`) evaluates any of the objectives for
a whole batch of parameter points at once; the scalar functions below are
the reference implementations it is tested against.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft
from scipy.signal import lfilter

from .arma import ROOT_SEPARATION, SPECTRAL_MARGIN, ThetaParams
from .fracdiff import dpi_coeffs, fracdiff, kappa_series

DEGENERATE_GRAM = 1e-300


class DegenerateLevel(Exception):
    """The level regressor c_t has numerically zero sum of squares."""


class SingularGram(Exception):
    """The filtered deterministic regressors are numerically collinear."""


@dataclass(frozen=True)
class ConvolutedCoeffs:
    """Convoluted coefficients c_t and their parameter derivatives.

    c[i] holds c_t at t = i+1; dc[0] is the derivative in the memory
    parameter, rows 1..p the derivatives in the short-run coefficients
    (AR first, then MA).
    """

    theta: ThetaParams
    c: np.ndarray
    dc: np.ndarray


@dataclass(frozen=True)
class ObjectiveKind:
    """Which sum-of-squares objective to minimize.

    variant is one of "css" (profile), "css-mu0" (known level, requires
    mu0), or "mcss" (modified profile).
    """

    variant: str
    mu0: float = None

    def __post_init__(self):
        if self.variant not in ("css", "css-mu0", "mcss"):
            raise ValueError(f"unknown objective variant {self.variant!r}")
        if self.variant == "css-mu0":
            if self.mu0 is None or not np.isfinite(self.mu0):
                raise ValueError("css-mu0 requires a finite mu0")


def _shift(v, k):
    out = np.zeros_like(v)
    if k < v.shape[0]:
        out[k:] = v[: v.shape[0] - k]
    return out


def conv_coeffs(theta: ThetaParams, T: int, with_derivs: bool = True) -> ConvolutedCoeffs:
    """Convoluted coefficients c_t = sum_{j<t} phi_j * k0_{t-j} with derivatives.

    The sequence is the response of the combined inverse-short-run and
    fractional-difference filter to the level indicator I(t >= 1).  All
    derivative rows are assembled analytically: the d-derivative rides on
    the analytic derivative of the fractional weights, the short-run rows on
    the differentiated inverse-weight recursions.
    """
    arma = theta.arma
    arma.validate()
    p1, p2 = len(arma.ar), len(arma.ma)
    kap = kappa_series(theta.d, T)
    bpoly, apoly = arma.ar_poly, arma.ma_poly
    c = lfilter(bpoly, apoly, kap.k0)
    if not with_derivs:
        return ConvolutedCoeffs(theta=theta, c=c, dc=np.zeros((0, T)))
    dc = np.zeros((1 + p1 + p2, T))
    dc[0] = lfilter(bpoly, apoly, kap.k1)
    a2 = np.convolve(apoly, apoly) if p2 else apoly
    for k in range(p1):
        dc[1 + k] = -lfilter([1.0], apoly, _shift(kap.k0, k + 1))
    for m in range(p2):
        dc[1 + p1 + m] = -lfilter(bpoly, a2, _shift(kap.k0, m + 1))
    return ConvolutedCoeffs(theta=theta, c=c, dc=dc)


def _filtered(theta: ThetaParams, x):
    """Apply phi(L) D_+^d to the data (the mu-free part of the residual)."""
    arma = theta.arma
    arma.validate()
    return lfilter(arma.ar_poly, arma.ma_poly, fracdiff(x, theta.d))


def residuals(theta: ThetaParams, mu: float, x) -> np.ndarray:
    """Model residuals at (theta, mu)."""
    x = np.asarray(x, dtype=float)
    c = conv_coeffs(theta, x.shape[0], with_derivs=False).c
    return _filtered(theta, x) - mu * c


def mu_hat(theta: ThetaParams, x) -> float:
    """Least-squares level for fixed theta: regress filtered data on c_t."""
    x = np.asarray(x, dtype=float)
    f = _filtered(theta, x)
    c = conv_coeffs(theta, x.shape[0], with_derivs=False).c
    ssq = float(c @ c)
    if ssq < DEGENERATE_GRAM:
        raise DegenerateLevel(f"sum of squared c_t = {ssq:.3e}")
    return float(f @ c) / ssq


def css_profile(theta: ThetaParams, x) -> float:
    """Profile sum of squares, one half the squared residuals at mu_hat."""
    x = np.asarray(x, dtype=float)
    f = _filtered(theta, x)
    c = conv_coeffs(theta, x.shape[0], with_derivs=False).c
    ssq = float(c @ c)
    if ssq < DEGENERATE_GRAM:
        raise DegenerateLevel(f"sum of squared c_t = {ssq:.3e}")
    mu = float(f @ c) / ssq
    r = f - mu * c
    return 0.5 * float(r @ r)


def css_known_mu(theta: ThetaParams, mu0: float, x) -> float:
    """Sum of squares with the level fixed at mu0."""
    x = np.asarray(x, dtype=float)
    f = _filtered(theta, x)
    c = conv_coeffs(theta, x.shape[0], with_derivs=False).c
    r = f - mu0 * c
    return 0.5 * float(r @ r)


def mod_term(theta: ThetaParams, T: int) -> float:
    """Modification term m(theta) = (sum_t c_t^2)^(1/(T-1)), always >= 1.

    c_1 = 1 for every theta, so the sum of squares is at least one and the
    term is bounded below by one, with equality only when the rest of the
    c sequence vanishes (the first-difference case).
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    c = conv_coeffs(theta, T, with_derivs=False).c
    return float(c @ c) ** (1.0 / (T - 1))


def mcss_objective(theta: ThetaParams, x) -> float:
    """Modified profile objective: mod_term(theta) * css_profile(theta)."""
    x = np.asarray(x, dtype=float)
    return mod_term(theta, x.shape[0]) * css_profile(theta, x)


def mod_term_trend(theta: ThetaParams, T: int) -> float:
    """Modification term for the constant-plus-trend deterministic case.

    The determinant of the Gram matrix of the filtered deterministic
    columns [1, t], raised to 1/(T-2).
    """
    if T < 3:
        raise ValueError("T must be >= 3")
    arma = theta.arma
    arma.validate()
    c1 = conv_coeffs(theta, T, with_derivs=False).c
    trend = np.arange(1.0, T + 1.0)
    c2 = lfilter(arma.ar_poly, arma.ma_poly, fracdiff(trend, theta.d))
    g11 = float(c1 @ c1)
    g22 = float(c2 @ c2)
    g12 = float(c1 @ c2)
    det = g11 * g22 - g12 * g12
    if det <= 0.0:
        raise SingularGram(f"Gram determinant {det:.3e} is not positive")
    return det ** (1.0 / (T - 2))


def objective_gradient(theta: ThetaParams, x, kind: ObjectiveKind = None) -> np.ndarray:
    """Analytic gradient of the chosen objective in (d, ar..., ma...).

    Built from the same derivative filters as the convoluted coefficients;
    for the profile objectives the level derivative drops out by the
    envelope theorem (the residual is orthogonal to c_t at mu_hat).
    """
    if kind is None:
        kind = ObjectiveKind("css")
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    arma = theta.arma
    arma.validate()
    p1, p2 = len(arma.ar), len(arma.ma)
    bpoly, apoly = arma.ar_poly, arma.ma_poly

    xd = fracdiff(x, theta.d)
    f = lfilter(bpoly, apoly, xd)
    cc = conv_coeffs(theta, T)
    c, dc = cc.c, cc.dc

    df = np.empty((1 + p1 + p2, T))
    dxd = np.convolve(dpi_coeffs(-theta.d, T), x)[:T]
    df[0] = -lfilter(bpoly, apoly, dxd)
    a2 = np.convolve(apoly, apoly) if p2 else apoly
    for k in range(p1):
        df[1 + k] = -lfilter([1.0], apoly, _shift(xd, k + 1))
    for m in range(p2):
        df[1 + p1 + m] = -lfilter(bpoly, a2, _shift(xd, m + 1))

    ssq = float(c @ c)
    if kind.variant == "css-mu0":
        r = f - kind.mu0 * c
        return df @ r - kind.mu0 * (dc @ r)
    if ssq < DEGENERATE_GRAM:
        raise DegenerateLevel(f"sum of squared c_t = {ssq:.3e}")
    mu = float(f @ c) / ssq
    r = f - mu * c
    g = df @ r - mu * (dc @ r)
    if kind.variant == "css":
        return g
    m_term = ssq ** (1.0 / (T - 1))
    loss = 0.5 * float(r @ r)
    dlog_m = (2.0 / (T - 1)) * (dc @ c) / ssq
    return m_term * (g + loss * dlog_m)


def sigma2_hat(theta: ThetaParams, x, denom_t_minus_one: bool = False) -> float:
    """Innovation variance estimate, mean squared residual at (theta, mu_hat).

    The default divisor is T; divide by T-1 instead with
    ``denom_t_minus_one=True`` (the profile objective has expectation
    proportional to T-1 at the truth, so both conventions are in use).
    """
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    denom = T - 1 if denom_t_minus_one else T
    return 2.0 * css_profile(theta, x) / denom


# ---------------------------------------------------------------------------
# vectorized evaluation
# ---------------------------------------------------------------------------


def _batch_pi(a_vec, T):
    """pi coefficients for a batch of orders; rows follow pi_coeffs exactly."""
    B = a_vec.shape[0]
    ratios = np.empty((B, T))
    ratios[:, 0] = 1.0
    if T > 1:
        i = np.arange(1.0, T)
        ratios[:, 1:] = (i[None, :] - 1.0 + a_vec[:, None]) / i[None, :]
    return np.cumprod(ratios, axis=1)


def _stable_mask(ar, ma):
    """Validity of each batch row: stationary, invertible, coprime."""
    B = ar.shape[0]
    ok = np.ones(B, dtype=bool)

    lim = 1.0 - SPECTRAL_MARGIN

    def poly_ok(tail, sign):
        # tail has shape (B, q); roots of 1 + sign*sum tail_k L^k outside circle
        q = tail.shape[1]
        if q == 0:
            return np.ones(B, dtype=bool)
        if q == 1:
            return np.abs(tail[:, 0]) < lim
        if q == 2:
            c1 = sign * tail[:, 0]
            c2 = sign * tail[:, 1]
            # both roots of z^2 + c1 z + c2 inside the unit circle
            return (np.abs(c2) < lim) & (np.abs(c1) < 1.0 + c2 - SPECTRAL_MARGIN)
        out = np.empty(B, dtype=bool)
        for b in range(B):
            coefs = np.concatenate(([1.0], sign * tail[b]))
            r = np.roots(coefs)
            out[b] = (not r.size) or np.max(np.abs(r)) < lim
        return out

    ok &= poly_ok(ar, -1.0)
    ok &= poly_ok(ma, 1.0)
    p1, p2 = ar.shape[1], ma.shape[1]
    if p1 and p2:
        if p1 == 1 and p2 == 1:
            ok &= np.abs(ar[:, 0] + ma[:, 0]) > ROOT_SEPARATION
        else:
            for b in np.nonzero(ok)[0]:
                r_ar = np.roots(np.concatenate(([1.0], -ar[b])))
                r_ma = np.roots(np.concatenate(([1.0], ma[b])))
                if r_ar.size and r_ma.size:
                    dist = np.abs(r_ar[:, None] - r_ma[None, :])
                    if dist.min() <= ROOT_SEPARATION:
                        ok[b] = False
    return ok


class batch_objective:
    """Evaluate one objective for many parameter points at once.

    Precomputes the FFT of the data once; each call fractionally differences
    and short-run filters a whole batch.  Rows that violate the parameter
    space return +inf.  Results match the scalar functions to round-off.

    Parameters
    ----------
    x : array_like
        Observed series.
    p1, p2 : int
        AR and MA orders; batch rows are laid out as (d, ar..., ma...).
    kind : ObjectiveKind
        Objective to evaluate.
    deterministic : {"constant", "none", "trend"}
        Deterministic component under the profile objectives.  "none" fixes
        the level at zero; "trend" profiles a constant and a linear trend
        and uses the Gram-determinant modification term.
    """

    def __init__(self, x, p1, p2, kind: ObjectiveKind, deterministic: str = "constant"):
        if deterministic not in ("constant", "none", "trend"):
            raise ValueError(f"unknown deterministic component {deterministic!r}")
        self.x = np.asarray(x, dtype=float)
        self.T = self.x.shape[0]
        self.p1, self.p2 = p1, p2
        self.kind = kind
        self.deterministic = deterministic
        self.nfft = _fft.next_fast_len(2 * self.T - 1) if self.T > 1 else 1
        self.x_fft = _fft.rfft(self.x, self.nfft)
        if deterministic == "trend":
            self.trend_fft = _fft.rfft(np.arange(1.0, self.T + 1.0), self.nfft)
        self.n_evals = 0

    def _fracdiff_batch(self, series_fft, d_vec):
        w = _batch_pi(-d_vec, self.T)
        wf = _fft.rfft(w, self.nfft, axis=1)
        return _fft.irfft(wf * series_fft[None, :], self.nfft, axis=1)[:, : self.T]

    def _short_run_batch(self, v, ar, ma):
        """Apply phi(L) rowwise: AR part vectorized, MA part per row."""
        if self.p2 == 0:
            out = v.copy()
            for k in range(self.p1):
                out[:, k + 1 :] -= ar[:, k : k + 1] * v[:, : self.T - k - 1]
            return out
        out = np.empty_like(v)
        for b in range(v.shape[0]):
            bpoly = np.concatenate(([1.0], -ar[b]))
            apoly = np.concatenate(([1.0], ma[b]))
            out[b] = lfilter(bpoly, apoly, v[b])
        return out

    def pieces(self, theta_mat):
        """Filtered data and c sequence for each valid row.

        Returns (ok, f, c) with f and c defined on the valid rows only.
        """
        theta_mat = np.atleast_2d(np.asarray(theta_mat, dtype=float))
        d = theta_mat[:, 0]
        ar = theta_mat[:, 1 : 1 + self.p1]
        ma = theta_mat[:, 1 + self.p1 :]
        ok = _stable_mask(ar, ma) & np.all(np.isfinite(theta_mat), axis=1)
        dv, arv, mav = d[ok], ar[ok], ma[ok]
        f = self._short_run_batch(self._fracdiff_batch(self.x_fft, dv), arv, mav)
        c = self._short_run_batch(_batch_pi(1.0 - dv, self.T), arv, mav)
        return ok, f, c

    def __call__(self, theta_mat):
        theta_mat = np.atleast_2d(np.asarray(theta_mat, dtype=float))
        B = theta_mat.shape[0]
        self.n_evals += B
        out = np.full(B, np.inf)
        ok, f, c = self.pieces(theta_mat)
        if not np.any(ok):
            return out
        T = self.T
        ssq_c = np.einsum("ij,ij->i", c, c)

        if self.deterministic == "trend":
            d = theta_mat[ok, 0]
            ar = theta_mat[ok, 1 : 1 + self.p1]
            ma = theta_mat[ok, 1 + self.p1 :]
            c2 = self._short_run_batch(self._fracdiff_batch(self.trend_fft, d), ar, ma)
            g22 = np.einsum("ij,ij->i", c2, c2)
            g12 = np.einsum("ij,ij->i", c, c2)
            det = ssq_c * g22 - g12 * g12
            fc1 = np.einsum("ij,ij->i", f, c)
            fc2 = np.einsum("ij,ij->i", f, c2)
            good = det > 0.0
            beta1 = np.where(good, (g22 * fc1 - g12 * fc2) / np.where(good, det, 1.0), 0.0)
            beta2 = np.where(good, (ssq_c * fc2 - g12 * fc1) / np.where(good, det, 1.0), 0.0)
            r = f - beta1[:, None] * c - beta2[:, None] * c2
            loss = 0.5 * np.einsum("ij,ij->i", r, r)
            if self.kind.variant == "mcss":
                loss = loss * np.where(good, det, np.nan) ** (1.0 / (T - 2))
            loss = np.where(good, loss, np.inf)
        elif self.kind.variant == "css-mu0" or self.deterministic == "none":
            mu0 = self.kind.mu0 if self.kind.variant == "css-mu0" else 0.0
            r = f - mu0 * c
            loss = 0.5 * np.einsum("ij,ij->i", r, r)
        else:
            good = ssq_c > DEGENERATE_GRAM
            mu = np.where(good, np.einsum("ij,ij->i", f, c) / np.where(good, ssq_c, 1.0), 0.0)
            r = f - mu[:, None] * c
            loss = 0.5 * np.einsum("ij,ij->i", r, r)
            if self.kind.variant == "mcss":
                loss = loss * ssq_c ** (1.0 / (T - 1))
            loss = np.where(good, loss, np.inf)

        loss = np.where(np.isfinite(loss), loss, np.inf)
        out[ok] = loss
        return out
