"""Second-order bias of the sum-of-squares estimators.

The bias of the estimator splits into two parts.  The intrinsic part comes
from the curvature of the objective and survives even when the level is
known; to order 1/T it is a fixed vector determined by the short-run
parameters alone.  The score part comes from the estimation of the level
and depends on the memory parameter, switching behaviour at d = 1/2.

Everything is built from a family of limiting matrices (one Hessian-scale
matrix and three arrays of third-derivative matrices) whose entries are
infinite series in the derivative filter coefficients, plus their exact
finite-T counterparts which replace the series by weighted partial sums.
All series here converge geometrically and are summed by adaptive
truncation; the finite-T sums are evaluated exactly on O(T^2) grids.

Scale convention: the report vectors are T times the bias, so a value of
-1.33 at T = 100 means a bias of about -0.0133 in the estimate.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln, gammasgn

from .arma import ArmaParams, NonInvertible, ThetaParams, bh_coeffs, expand_weights
from .fracdiff import dpi_zero
from .objective import conv_coeffs, css_known_mu, css_profile, mu_hat
from .special import ZETA2, ZETA3, digamma, dilog

BOUNDARY_HALF_WIDTH = 0.01
SUM_TAIL_LEN = 50
SUM_RTOL = 1e-13
SUM_N0 = 4096
SUM_NMAX = 1_000_000


class BoundaryD(Exception):
    """The memory parameter is too close to the d = 1/2 boundary."""


@dataclass(frozen=True)
class LimitMatrices:
    """Limiting curvature matrices of the profile objective.

    a is the Hessian-scale matrix; f, g, c0 are lists of 1 + p matrices,
    one per parameter, holding the three third-derivative arrays.
    """

    params: ArmaParams
    a: np.ndarray
    f: list
    g: list
    c0: list
    n_terms: int
    converged: bool


@dataclass(frozen=True)
class FiniteMatrices:
    """Exact finite-T counterparts of LimitMatrices."""

    params: ArmaParams
    T: int
    a: np.ndarray
    f: list
    g: list
    c0: list


@dataclass(frozen=True)
class BiasReport:
    """T-scaled bias decomposition at a parameter point."""

    theta0: ThetaParams
    T: int
    intrinsic: np.ndarray
    score: np.ndarray
    total: np.ndarray
    method: str


@dataclass(frozen=True)
class BiasTable:
    """Predicted estimator bias (x100) for a grid of memory values and sizes.

    total[i, j] is the predicted bias of the plain profile estimate of the
    memory parameter at d0[i], T[j]; constant[j] is the part that remains
    under the modified objective, identical across rows.  Rows too close to
    d0 = 1/2 are NaN.
    """

    d0: np.ndarray
    T: np.ndarray
    total: np.ndarray
    constant: np.ndarray


def _harmonic(n):
    h = np.zeros(n)
    if n > 1:
        h[1:] = np.cumsum(1.0 / np.arange(1.0, n))
    return h


def _correlate_full(a, b):
    """c[h + N - 1] = sum_s a(s) b(s + h) for h = -(N-1)..N-1."""
    return fftconvolve(a[::-1], b)


class _SumBank:
    """Accumulate series values while tracking tail convergence."""

    def __init__(self, tail_len=SUM_TAIL_LEN, rtol=SUM_RTOL):
        self.tail_len = tail_len
        self.rtol = rtol
        self.ok = True

    def __call__(self, increments):
        total = float(np.sum(increments))
        scale = max(abs(total), 1.0)
        tail = np.abs(increments[-self.tail_len:])
        if not np.all(tail < self.rtol * scale):
            self.ok = False
        return total


def limit_matrices(params: ArmaParams, n0: int = SUM_N0, nmax: int = SUM_NMAX) -> LimitMatrices:
    """Limiting curvature matrices by adaptive geometric-series summation.

    Truncation starts at n0 and doubles until the last 50 increments of
    every series are below 1e-13 relative to its value, capped at nmax.
    """
    params.validate()
    p = params.p
    N = n0
    while True:
        sb = _SumBank()
        table = expand_weights(params, N)
        bh = bh_coeffs(table)
        b, b2, hd = bh.b1, bh.b2, bh.hd
        H = _harmonic(N)
        dz = dpi_zero(N)
        d1, d2 = dz.d1, dz.d2
        hs = np.zeros(N)
        hs[1:] = H[1:] / np.arange(1.0, N)

        n1 = 1 + p
        a = np.empty((n1, n1))
        f = [np.empty((n1, n1)) for _ in range(n1)]
        g = [np.empty((n1, n1)) for _ in range(n1)]
        c0 = [np.empty((n1, n1)) for _ in range(n1)]

        a[0, 0] = ZETA2
        f[0][0, 0] = -2.0 * ZETA3
        g[0][0, 0] = -4.0 * ZETA3
        c0[0][0, 0] = -6.0 * ZETA3

        # correlation banks for the double-sum entries
        mid = N - 1
        va = [
            _correlate_full(d1, b[m])[mid:] + _correlate_full(b[m], d1)[mid:]
            for m in range(p)
        ]
        w = [[_correlate_full(b[m], b[z])[mid:] for z in range(p)] for m in range(p)]

        for m in range(p):
            a[0, 1 + m] = a[1 + m, 0] = -sb(b[m] * d1)
            col_d = sb(b[m] * d2) + sb(b[m] * hs)
            f[0][0, 1 + m] = sb(d2 * b[m])
            f[0][1 + m, 0] = sb(b[m] * hs)
            f[1 + m][0, 0] = f[0][1 + m, 0]
            g[0][0, 1 + m] = 2.0 * sb(b[m] * hs)
            g[0][1 + m, 0] = col_d
            g[1 + m][0, 0] = col_d
            c0[0][0, 1 + m] = c0[0][1 + m, 0] = 2.0 * sb(b[m] * hs) + sb(d2 * b[m])
            c0[1 + m][0, 0] = c0[0][0, 1 + m]
            for z in range(p):
                a[1 + m, 1 + z] = sb(b[m] * b[z])
                f[0][1 + m, 1 + z] = -sb(hd[m] * b[z])
                f[1 + m][0, 1 + z] = -sb(hd[m] * b[z])
                f[1 + m][1 + z, 0] = -sb(b2[z, m] * d1)
                g[0][1 + m, 1 + z] = -sb(b[z] * va[m])
                g[1 + m][0, 1 + z] = -sb(b[z] * va[m])
                g[1 + m][1 + z, 0] = -sb((w[m][z] + w[z][m]) * d1)
                c0[0][1 + m, 1 + z] = -sb(b2[m, z] * d1) - sb(b[m] * hd[z] + b[z] * hd[m])
                c0[1 + m][0, 1 + z] = c0[1 + m][1 + z, 0] = (
                    -sb(b2[z, m] * d1) - sb(b[m] * hd[z] + b[z] * hd[m])
                )
                for v in range(p):
                    f[1 + m][1 + z, 1 + v] = sb(b2[z, m] * b[v])
                    g[1 + m][1 + z, 1 + v] = sb(b[v] * (w[m][z] + w[z][m]))
                    c0[1 + m][1 + z, 1 + v] = sb(
                        b[z] * b2[v, m] + b[v] * b2[z, m] + b[m] * b2[z, v]
                    )
        if sb.ok or N >= nmax:
            return LimitMatrices(params=params, a=a, f=f, g=g, c0=c0,
                                 n_terms=N, converged=bool(sb.ok))
        N = min(2 * N, nmax)


def finite_matrices(params: ArmaParams, T: int) -> FiniteMatrices:
    """Exact finite-T curvature matrices.

    Single series become sums over i = 1..T-1 with weight (T - i)/T, the
    double series sums over j, k >= 1 with weight (T - j - k)/T on the
    triangle j + k <= T - 1.  Evaluation is O(T^2).
    """
    params.validate()
    if T < 3:
        raise ValueError("T must be >= 3")
    p = params.p
    table = expand_weights(params, T)
    bh = bh_coeffs(table)
    b, b2, hd = bh.b1, bh.b2, bh.hd
    dz = dpi_zero(T)
    d1, d2 = dz.d1, dz.d2
    i = np.arange(1, T)
    wgt = (T - i) / T

    def ssum(arr):
        # weighted single sum over i = 1..T-1; arr indexed 0..T-1
        return float(np.sum(wgt * arr[1:]))

    n1 = 1 + p
    a = np.empty((n1, n1))
    f = [np.empty((n1, n1)) for _ in range(n1)]
    g = [np.empty((n1, n1)) for _ in range(n1)]
    c0 = [np.empty((n1, n1)) for _ in range(n1)]

    a[0, 0] = ssum(d1 * d1)
    f[0][0, 0] = -ssum(d2 * d1)
    c0[0][0, 0] = -3.0 * ssum(d2 * d1)

    # triangle grids for the double sums
    J, K = np.meshgrid(i, i, indexing="ij")
    S = J + K
    tri = np.clip(T - S, 0, None) / T
    Sc = np.minimum(S, T - 1)
    invJ, invK, invS = 1.0 / J, 1.0 / K, 1.0 / S

    g[0][0, 0] = -2.0 * float(np.sum(tri * invK * invJ * invS))

    P = [tri * (invJ * b[m][Sc] + invS * b[m][J]) for m in range(p)]
    for m in range(p):
        a[0, 1 + m] = a[1 + m, 0] = -ssum(b[m] * d1)
        f[0][0, 1 + m] = ssum(d2 * b[m])
        f[0][1 + m, 0] = ssum(hd[m] * d1)
        f[1 + m][0, 0] = f[0][1 + m, 0]
        g[0][0, 1 + m] = 2.0 * float(np.sum(tri * b[m][K] * invJ * invS))
        g[0][1 + m, 0] = float(np.sum(P[m] * invK))
        g[1 + m][0, 0] = g[0][1 + m, 0]
        c0[0][0, 1 + m] = c0[0][1 + m, 0] = 2.0 * ssum(hd[m] * d1) + ssum(d2 * b[m])
        c0[1 + m][0, 0] = c0[0][0, 1 + m]
        for z in range(p):
            a[1 + m, 1 + z] = ssum(b[m] * b[z])
            f[0][1 + m, 1 + z] = -ssum(hd[m] * b[z])
            f[1 + m][0, 1 + z] = -ssum(hd[m] * b[z])
            f[1 + m][1 + z, 0] = -ssum(b2[z, m] * d1)
            g[0][1 + m, 1 + z] = -float(np.sum(P[m] * b[z][K]))
            g[1 + m][0, 1 + z] = g[0][1 + m, 1 + z]
            q = tri * (b[m][J] * b[z][Sc] + b[m][Sc] * b[z][J])
            g[1 + m][1 + z, 0] = -float(np.sum(q * invK))
            c0[0][1 + m, 1 + z] = -ssum(b2[m, z] * d1) - ssum(b[m] * hd[z] + b[z] * hd[m])
            c0[1 + m][0, 1 + z] = c0[1 + m][1 + z, 0] = (
                -ssum(b2[z, m] * d1) - ssum(b[m] * hd[z] + b[z] * hd[m])
            )
            for v in range(p):
                f[1 + m][1 + z, 1 + v] = ssum(b2[z, m] * b[v])
                g[1 + m][1 + z, 1 + v] = float(np.sum(q * b[v][K]))
                c0[1 + m][1 + z, 1 + v] = ssum(
                    b[z] * b2[v, m] + b[v] * b2[z, m] + b[m] * b2[z, v]
                )
    return FiniteMatrices(params=params, T=T, a=a, f=f, g=g, c0=c0)


def _assemble(a_inv, f, g, c0, a_last):
    """Bias assembly: a_inv [sum a_inv.(G_i+F_i)]_i - (1/2) a_inv [sum (a_inv C_i a_inv).a_last]_i."""
    n = a_inv.shape[0]
    m1 = np.array([np.sum(a_inv * (g[i] + f[i])) for i in range(n)])
    m2 = np.array([np.sum((a_inv @ c0[i] @ a_inv) * a_last) for i in range(n)])
    return a_inv @ (m1 - 0.5 * m2)


def approx_intrinsic_bias(params: ArmaParams) -> np.ndarray:
    """Limiting T-scaled intrinsic bias vector (independent of d0)."""
    lm = limit_matrices(params)
    a_inv = np.linalg.inv(lm.a)
    return _assemble(a_inv, lm.f, lm.g, lm.c0, lm.a)


def _check_boundary(d0):
    if abs(d0 - 0.5) < BOUNDARY_HALF_WIDTH:
        raise BoundaryD(f"d0 = {d0} is within {BOUNDARY_HALF_WIDTH} of 1/2")


def _r_and_dr(d0, hmax):
    """Lag sums R(h) = sum_i k0_i(d0) k0_{i+h}(d0) and dR/dd, h = 0..hmax.

    R(h) = R(h-1) (u + h - 1)/(h - u) with u = 1 - d0, seeded by the
    closed form R(0) = Gamma(1 - 2u)/Gamma(1 - u)^2.  The ratio recursion
    never forms the rising factorial itself, so nothing overflows for any
    d0 > 1/2, including integer d0 where the series terminates at zero.
    """
    u = 1.0 - d0
    r = np.empty(hmax + 1)
    s = np.empty(hmax + 1)
    r[0] = gammasgn(1.0 - 2.0 * u) * np.exp(
        gammaln(1.0 - 2.0 * u) - 2.0 * gammaln(1.0 - u))
    s[0] = r[0] * 2.0 * (digamma(1.0 - u) - digamma(1.0 - 2.0 * u))
    for h in range(1, hmax + 1):
        rho = (u + h - 1.0) / (h - u)
        drho = (2.0 * h - 1.0) / (h - u) ** 2
        s[h] = s[h - 1] * rho + r[h - 1] * drho
        r[h] = r[h - 1] * rho
    return r, -s


def _score_sums_high_d(theta0: ThetaParams, N):
    """Limiting numerator vector and denominator of the score term, d0 > 1/2.

    Returns (num, den, ok): num[0] = sum_t c_t dc_t/dd, num[1 + k] the
    short-run analogues, den = sum_t c_t^2, each summed to t = infinity by
    lag-domain rearrangement.
    """
    sb = _SumBank()
    table = expand_weights(theta0.arma, N)
    p = theta0.p
    phi = table.phi
    mid = N - 1
    r, dr = _r_and_dr(theta0.d, mid)
    phi2 = _correlate_full(phi, phi)[mid:]
    two = np.full(N, 2.0)
    two[0] = 1.0
    den = sb(two * phi2 * r)
    num = np.empty(1 + p)
    num[0] = 0.5 * sb(two * phi2 * dr)
    r_both = np.concatenate([r[::-1], r[1:]])
    for k in range(p):
        xk = _correlate_full(phi, table.dphi[k])
        num[1 + k] = sb(xk * r_both)
    return num, den, sb.ok


def approx_score_bias(theta0: ThetaParams, T: int, n0: int = SUM_N0,
                      nmax: int = SUM_NMAX) -> np.ndarray:
    """Limiting T-scaled score bias vector.

    Below d0 = 1/2 the level-regressor sums diverge slowly and the bias
    carries a log T term; above, the sums converge and the bias is free of
    T.  Raises BoundaryD within 0.01 of the switch point.
    """
    _check_boundary(theta0.d)
    arma = theta0.arma
    arma.validate()
    p1, p2 = len(arma.ar), len(arma.ma)
    lm = limit_matrices(arma)
    a_inv = np.linalg.inv(lm.a)
    if theta0.d < 0.5:
        beta1 = 1.0 - float(np.sum(arma.ar))
        alpha1 = 1.0 + float(np.sum(arma.ma))
        vec = np.concatenate((
            [-np.log(T) + digamma(1.0 - theta0.d) + 1.0 / (1.0 - 2.0 * theta0.d)],
            np.full(p1, -1.0 / beta1),
            np.full(p2, -1.0 / alpha1),
        ))
        return a_inv @ vec
    N = n0
    while True:
        num, den, ok = _score_sums_high_d(theta0, N)
        if ok or N >= nmax:
            return a_inv @ num / den
        N = min(2 * N, nmax)


def approx_bias(theta0: ThetaParams, T: int) -> BiasReport:
    """Limiting bias decomposition at theta0 (intrinsic + score)."""
    intrinsic = approx_intrinsic_bias(theta0.arma)
    score = approx_score_bias(theta0, T)
    return BiasReport(theta0=theta0, T=T, intrinsic=intrinsic, score=score,
                      total=intrinsic + score, method="approx")


def exact_bias(theta0: ThetaParams, T: int, finite_sample_a: bool = False) -> BiasReport:
    """Exact-to-order-1/T bias decomposition at finite T.

    The intrinsic part uses the exact finite-T curvature matrices; the
    score part uses the exact partial sums of the convoluted coefficients,
    so no branching at d0 = 1/2 is needed.  The outer inverse uses the
    limiting Hessian-scale matrix unless finite_sample_a is set.
    """
    fm = finite_matrices(theta0.arma, T)
    lm = limit_matrices(theta0.arma)
    a_inv = np.linalg.inv(fm.a if finite_sample_a else lm.a)
    intrinsic = _assemble(a_inv, fm.f, fm.g, fm.c0, fm.a)
    cc = conv_coeffs(theta0, T)
    num = cc.dc @ cc.c
    den = float(cc.c @ cc.c)
    score = a_inv @ num / den
    return BiasReport(theta0=theta0, T=T, intrinsic=intrinsic, score=score,
                      total=intrinsic + score, method="exact")


def short_memory_bias(params: ArmaParams) -> BiasReport:
    """T-scaled bias when the memory parameter is known and held fixed.

    Uses the short-run blocks of the limiting matrices; the score part is
    the inverse block matrix applied to the relative weight-sum gradient.
    """
    p1, p2 = len(params.ar), len(params.ma)
    lm = limit_matrices(params)
    at = lm.a[1:, 1:]
    a_inv = np.linalg.inv(at)
    p = params.p
    f = [lm.f[1 + m][1:, 1:] for m in range(p)]
    g = [lm.g[1 + m][1:, 1:] for m in range(p)]
    c0 = [lm.c0[1 + m][1:, 1:] for m in range(p)]
    intrinsic = _assemble(a_inv, f, g, c0, at)
    beta1 = 1.0 - float(np.sum(params.ar))
    alpha1 = 1.0 + float(np.sum(params.ma))
    vec = np.concatenate((np.full(p1, -1.0 / beta1), np.full(p2, -1.0 / alpha1)))
    score = a_inv @ vec
    theta0 = ThetaParams(d=0.0, ar=params.ar, ma=params.ma)
    return BiasReport(theta0=theta0, T=0, intrinsic=intrinsic, score=score,
                      total=intrinsic + score, method="short-memory")


def fractional_intrinsic_bias() -> float:
    """T-scaled intrinsic bias with no short-run dynamics."""
    return -3.0 * ZETA3 / ZETA2 ** 2


def fractional_score_bias(d0: float, T: int) -> float:
    """T-scaled score bias with no short-run dynamics, closed form."""
    _check_boundary(d0)
    if d0 < 0.5:
        return (-np.log(T) + digamma(1.0 - d0) + 1.0 / (1.0 - 2.0 * d0)) / ZETA2
    return (digamma(2.0 * d0 - 1.0) - digamma(d0)) / ZETA2


def ar1_limit_matrices(phi0: float) -> dict:
    """Closed-form limiting matrices for one AR coefficient plus memory.

    Entries are rational-dilogarithm expressions in phi0; the phi0 = 0
    limits are included so the formulas remain usable across the grid.
    """
    if abs(phi0) >= 1.0:
        raise NonInvertible(f"|phi0| = {abs(phi0)} >= 1")
    z2, z3 = ZETA2, ZETA3
    if phi0 == 0.0:
        a = np.array([[z2, 1.0], [1.0, 1.0]])
        c01 = np.array([[-6.0 * z3, -2.0], [-2.0, 0.0]])
        c02 = np.array([[-2.0, 0.0], [0.0, 0.0]])
        f1 = np.array([[-2.0 * z3, 0.0], [-1.0, 0.0]])
        f2 = np.array([[-1.0, 0.0], [0.0, 0.0]])
        g1 = np.array([[-4.0 * z3, -2.0], [-1.0, -0.5]])
        g2 = np.array([[-1.0, -0.5], [0.0, 0.0]])
        return {"a": a, "f1": f1, "f2": f2, "g1": g1, "g2": g2,
                "c01": c01, "c02": c02}
    ph = phi0
    f_ = 1.0 - ph ** 2
    L = np.log(1.0 - ph)
    li = dilog(-ph / (1.0 - ph))
    a = np.array([[z2, -L / ph], [-L / ph, 1.0 / f_]])
    c01 = np.array([[-6.0 * z3, 2.0 * li / ph - L ** 2 / ph],
                    [2.0 * li / ph - L ** 2 / ph, 2.0 * L / f_]])
    c02 = np.array([[2.0 * li / ph - L ** 2 / ph, 2.0 * L / f_],
                    [2.0 * L / f_, 0.0]])
    f1 = np.array([[-2.0 * z3, -L ** 2 / ph], [li / ph, L / f_]])
    f2 = np.array([[li / ph, L / f_], [0.0, 0.0]])
    gdd = L / f_ - (ph / (1.0 - ph) + L) / ph ** 2
    g1 = np.array([[-4.0 * z3, 2.0 * li / ph], [-L ** 2 / ph + li / ph, gdd]])
    g2 = np.array([[-L ** 2 / ph + li / ph, gdd],
                   [2.0 * L / f_, -2.0 * ph / f_ ** 2]])
    return {"a": a, "f1": f1, "f2": f2, "g1": g1, "g2": g2,
            "c01": c01, "c02": c02}


def ar1_limit_bias(phi0: float, d0: float, T: int) -> BiasReport:
    """Closed-form limiting bias for one AR coefficient plus memory."""
    _check_boundary(d0)
    mats = ar1_limit_matrices(phi0)
    a_inv = np.linalg.inv(mats["a"])
    intrinsic = _assemble(a_inv, [mats["f1"], mats["f2"]],
                          [mats["g1"], mats["g2"]],
                          [mats["c01"], mats["c02"]], mats["a"])
    if d0 < 0.5:
        vec = np.array([
            -np.log(T) + digamma(1.0 - d0) + 1.0 / (1.0 - 2.0 * d0),
            -1.0 / (1.0 - phi0),
        ])
        score = a_inv @ vec
    else:
        score = a_inv @ _ar1_score_sums(phi0, d0)
    theta0 = ThetaParams(d=d0, ar=(phi0,), ma=())
    return BiasReport(theta0=theta0, T=T, intrinsic=intrinsic, score=score,
                      total=intrinsic + score, method="closed-form")


def _ar1_score_sums(phi0, d0):
    """Closed-form score numerator over denominator, one AR lag, d0 > 1/2."""
    from .special import gen_binom

    c2 = gen_binom(2.0 * d0 - 2.0, d0 - 1.0)
    c0_ = gen_binom(2.0 * d0, d0)
    den = (1.0 - phi0) ** 2 * c2 + phi0 * c0_
    num_d = ((1.0 - phi0) ** 2 * c2 * (digamma(2.0 * d0 - 1.0) - digamma(d0))
             + phi0 * c0_ * (digamma(2.0 * d0 + 1.0) - digamma(d0 + 1.0)))
    num_phi = (phi0 - 1.0) * c2 + 0.5 * c0_
    return np.array([num_d, num_phi]) / den


def ar1_short_bias(phi0: float):
    """Closed-form T-scaled bias with memory known, one AR coefficient."""
    return -2.0 * phi0, -1.0 - phi0


def bcm_correct(fit, x=None, method: str = "exact"):
    """Bias-corrected modified estimate: subtract the intrinsic bias over T.

    Intended for fits of the modified objective, whose score bias is
    removed by construction.  With method="exact" the finite-T intrinsic
    vector at the fitted parameters is used; "approx" uses the limiting
    one.  If the corrected point leaves the parameter space the fit is
    returned unchanged with a message.
    """
    if method == "exact":
        bias_vec = exact_bias(fit.theta, fit.T).intrinsic
    elif method == "approx":
        bias_vec = approx_intrinsic_bias(fit.theta.arma)
    else:
        raise ValueError(f"unknown method {method!r}")
    vec = fit.theta.as_vector() - bias_vec / fit.T
    p1 = len(fit.theta.ar)
    theta_new = ThetaParams.from_vector(vec, p1, len(fit.theta.ma))
    try:
        theta_new.arma.validate()
    except NonInvertible:
        return replace(fit, message="bias correction left the parameter space; skipped")
    mu, sigma2 = fit.mu, fit.sigma2
    if x is not None:
        x = np.asarray(x, dtype=float)
        if fit.kind.variant == "css-mu0":
            sigma2 = 2.0 * css_known_mu(theta_new, fit.kind.mu0, x) / fit.T
        elif fit.spec.deterministic == "constant":
            mu = mu_hat(theta_new, x)
            sigma2 = 2.0 * css_profile(theta_new, x) / fit.T
        elif fit.spec.deterministic == "none":
            sigma2 = 2.0 * css_known_mu(theta_new, 0.0, x) / fit.T
    return replace(fit, theta=theta_new, mu=mu, sigma2=sigma2,
                   message="bias corrected (" + method + ")")


def bias_table(d0_values=(-0.2, 0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0),
               T_values=(32, 64, 128, 256)) -> BiasTable:
    """Predicted memory-estimate bias (x100) without short-run dynamics.

    Each cell is 100 (score + intrinsic)/T for the plain profile objective;
    the per-T constant column is 100 intrinsic/T, the part the modification
    does not remove.  Rows within 0.01 of d0 = 1/2 are NaN.
    """
    d0_values = np.asarray(d0_values, dtype=float)
    T_values = np.asarray(T_values, dtype=int)
    intr = fractional_intrinsic_bias()
    total = np.empty((d0_values.size, T_values.size))
    for i, d0 in enumerate(d0_values):
        for j, T in enumerate(T_values):
            if abs(d0 - 0.5) < BOUNDARY_HALF_WIDTH:
                total[i, j] = np.nan
            else:
                total[i, j] = 100.0 * (fractional_score_bias(d0, int(T)) + intr) / T
    constant = 100.0 * intr / T_values
    return BiasTable(d0=d0_values, T=T_values, total=total, constant=constant)
