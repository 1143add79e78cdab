"""ARMA lag-polynomial algebra.

Expansion weights, inverse weights, their parameter derivatives, and the
convolution coefficient sums that feed the asymptotic variance matrix and
the bias engine.

Conventions
-----------
The short-run filter is written as a ratio of lag polynomials

    w(L) = ma_poly(L) / ar_poly(L),
    ar_poly(L) = 1 - ar[0] L - ... - ar[p1-1] L^p1,
    ma_poly(L) = 1 + ma[0] L + ... + ma[p2-1] L^p2,

with all roots of both polynomials outside the unit circle and no common
roots.  ``phi`` below always refers to the inverse weights, the expansion of
1 / w(L); ``omega`` to the expansion of w(L) itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as _fft
from scipy.signal import lfilter


class NonInvertible(Exception):
    """Lag polynomial roots on or inside the unit circle, or shared roots."""


SPECTRAL_MARGIN = 1e-9
ROOT_SEPARATION = 1e-6


def _inverse_roots(poly_tail, sign):
    """Inverse roots of 1 + sign * sum(poly_tail[k] L^{k+1})."""
    coefs = np.concatenate(([1.0], sign * np.asarray(poly_tail, dtype=float)))
    if coefs.shape[0] == 1:
        return np.empty(0, dtype=complex)
    return np.roots(coefs)


@dataclass(frozen=True)
class ArmaParams:
    """Short-run coefficient vector, split into AR and MA parts.

    Parameters
    ----------
    ar : array_like
        Coefficients (b_1..b_p1) of the AR polynomial 1 - sum b_k L^k.
    ma : array_like
        Coefficients (a_1..a_p2) of the MA polynomial 1 + sum a_k L^k.
    """

    ar: tuple = ()
    ma: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(v) for v in np.atleast_1d(np.asarray(self.ar, dtype=float)).ravel()))
        object.__setattr__(self, "ma", tuple(float(v) for v in np.atleast_1d(np.asarray(self.ma, dtype=float)).ravel()))

    @property
    def p(self):
        return len(self.ar) + len(self.ma)

    @property
    def ar_poly(self):
        return np.concatenate(([1.0], -np.asarray(self.ar)))

    @property
    def ma_poly(self):
        return np.concatenate(([1.0], np.asarray(self.ma)))

    def inverse_root_radius(self):
        """Largest inverse-root magnitude across both polynomials (0 if none)."""
        radii = [0.0]
        for tail, sign in ((self.ar, -1.0), (self.ma, 1.0)):
            r = _inverse_roots(tail, sign)
            if r.size:
                radii.append(float(np.max(np.abs(r))))
        return max(radii)

    def validate(self, margin=SPECTRAL_MARGIN, separation=ROOT_SEPARATION):
        """Raise NonInvertible unless strictly stationary, invertible and coprime.

        Stationarity and invertibility are checked through the spectral
        radius of the companion recursions (equivalently the largest inverse
        root), with a strict margin.  Coprimality is checked as a pairwise
        minimum distance between AR and MA inverse roots.
        """
        r_ar = _inverse_roots(self.ar, -1.0)
        r_ma = _inverse_roots(self.ma, 1.0)
        for name, r in (("ar", r_ar), ("ma", r_ma)):
            if r.size and np.max(np.abs(r)) >= 1.0 - margin:
                raise NonInvertible(
                    f"{name} polynomial root radius {np.max(np.abs(r)):.12f} "
                    f"not inside the unit circle with margin {margin}"
                )
        if r_ar.size and r_ma.size:
            dist = np.abs(r_ar[:, None] - r_ma[None, :])
            if dist.min() <= separation:
                raise NonInvertible(
                    f"AR and MA polynomials share a root (min separation {dist.min():.2e})"
                )
        return self


@dataclass(frozen=True)
class ThetaParams:
    """Full parameter point: memory parameter plus short-run coefficients."""

    d: float
    ar: tuple = ()
    ma: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "ar", tuple(float(v) for v in np.atleast_1d(np.asarray(self.ar, dtype=float)).ravel()))
        object.__setattr__(self, "ma", tuple(float(v) for v in np.atleast_1d(np.asarray(self.ma, dtype=float)).ravel()))

    @property
    def arma(self):
        return ArmaParams(ar=self.ar, ma=self.ma)

    @property
    def p(self):
        return len(self.ar) + len(self.ma)

    def as_vector(self):
        return np.concatenate(([self.d], self.ar, self.ma))

    @classmethod
    def from_vector(cls, vec, p1, p2):
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.shape[0] != 1 + p1 + p2:
            raise ValueError(f"expected {1 + p1 + p2} entries, got {vec.shape[0]}")
        return cls(d=vec[0], ar=tuple(vec[1 : 1 + p1]), ma=tuple(vec[1 + p1 :]))


@dataclass(frozen=True)
class WeightTable:
    """Expansion weights of the short-run filter and of its inverse.

    Attributes
    ----------
    omega : ndarray, shape (N,)
        Weights of w(L), omega[0] = 1.
    phi : ndarray, shape (N,)
        Weights of 1 / w(L), phi[0] = 1.
    dphi : ndarray, shape (p, N)
        First derivatives of phi with respect to each short-run coefficient,
        AR coefficients first, then MA.
    d2phi : ndarray, shape (p, p, N)
        Second derivatives, same ordering.
    tail : float
        max(|omega[N-1]|, |phi[N-1]|), recorded so truncation error in any
        downstream sum is observable.
    """

    params: ArmaParams
    omega: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    tail: float = field(default=0.0)


@dataclass(frozen=True)
class BhCoeffs:
    """Convolution coefficients built from a WeightTable.

    b1[k, i] convolves omega with the first derivative of phi (row k);
    b2[k, j, i] is the second-derivative analogue; hd[k, i] re-weights b1
    with the order-derivative weights 1/j of the fractional filter.
    """

    b1: np.ndarray
    b2: np.ndarray
    hd: np.ndarray


def _impulse(N, at=0):
    e = np.zeros(N)
    if at < N:
        e[at] = 1.0
    return e


def _conv_trunc(a, b, N):
    """First N coefficients of the polynomial product of a and b."""
    if N < FFT_CONV_MIN:
        return np.convolve(a, b)[:N]
    nfft = _fft.next_fast_len(len(a) + len(b) - 1)
    out = _fft.irfft(_fft.rfft(a, nfft) * _fft.rfft(b, nfft), nfft)
    return out[:N]


FFT_CONV_MIN = 256


def expand_weights(params: ArmaParams, N: int, second_order: str = "analytic") -> WeightTable:
    """Expand the short-run filter, its inverse, and the inverse's derivatives.

    Parameters
    ----------
    params : ArmaParams
        Validated before use; NonInvertible propagates.
    N : int
        Number of lag weights to produce.
    second_order : {"analytic", "fd"}
        Second derivatives come from the differentiated recursions by
        default.  "fd" switches to central differences of the first
        derivatives (step 1e-5), kept for cross-validation.

    Notes
    -----
    All rows are impulse responses of rational filters, so they are
    computed with one linear recursion each:

    * omega solves ar_poly(L) omega = ma_poly(L) delta,
    * phi solves ma_poly(L) phi = ar_poly(L) delta,
    * d phi / d ar_k  = -L^k / ma_poly(L) applied to delta,
    * d phi / d ma_m  = -L^m ar_poly(L) / ma_poly(L)^2 applied to delta,
    * the nonzero second derivatives involve 1/ma_poly^2 and 1/ma_poly^3.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    params.validate()
    p1, p2 = len(params.ar), len(params.ma)
    p = p1 + p2
    bpoly, apoly = params.ar_poly, params.ma_poly
    delta = _impulse(N)

    omega = lfilter(apoly, bpoly, delta)
    phi = lfilter(bpoly, apoly, delta)

    dphi = np.zeros((p, N))
    a2 = np.convolve(apoly, apoly)
    for k in range(p1):
        dphi[k] = -lfilter([1.0], apoly, _impulse(N, at=k + 1))
    for m in range(p2):
        dphi[p1 + m] = -lfilter(bpoly, a2, _impulse(N, at=m + 1))

    d2phi = np.zeros((p, p, N))
    if p:
        if second_order == "analytic":
            a3 = np.convolve(a2, apoly)
            for k in range(p1):
                for m in range(p2):
                    mixed = lfilter([1.0], a2, _impulse(N, at=k + 1 + m + 1))
                    d2phi[k, p1 + m] = mixed
                    d2phi[p1 + m, k] = mixed
            for m in range(p2):
                for n in range(m, p2):
                    mm = 2.0 * lfilter(bpoly, a3, _impulse(N, at=m + 1 + n + 1))
                    d2phi[p1 + m, p1 + n] = mm
                    d2phi[p1 + n, p1 + m] = mm
        elif second_order == "fd":
            step = 1e-5
            vec = np.concatenate([params.ar, params.ma])
            for j in range(p):
                up = vec.copy()
                dn = vec.copy()
                up[j] += step
                dn[j] -= step
                t_up = expand_weights(ArmaParams(ar=up[:p1], ma=up[p1:]), N)
                t_dn = expand_weights(ArmaParams(ar=dn[:p1], ma=dn[p1:]), N)
                d2phi[:, j, :] = (t_up.dphi - t_dn.dphi) / (2.0 * step)
            d2phi = 0.5 * (d2phi + np.transpose(d2phi, (1, 0, 2)))
        else:
            raise ValueError(f"unknown second_order mode {second_order!r}")

    tail = float(max(abs(omega[-1]), abs(phi[-1])))
    return WeightTable(params=params, omega=omega, phi=phi, dphi=dphi, d2phi=d2phi, tail=tail)


def bh_coeffs(table: WeightTable) -> BhCoeffs:
    """Convolution coefficient arrays used by the variance and bias sums.

    b1[k] is the convolution of omega with dphi[k]; b2[k, j] the convolution
    of omega with d2phi[k, j]; hd[k, i] = sum_{s<i} b1[k, s] / (i - s).
    """
    N = table.omega.shape[0]
    p = table.dphi.shape[0]
    b1 = np.zeros((p, N))
    b2 = np.zeros((p, p, N))
    hd = np.zeros((p, N))
    if p == 0:
        return BhCoeffs(b1=b1, b2=b2, hd=hd)
    harm = np.zeros(N)
    if N > 1:
        harm[1:] = 1.0 / np.arange(1.0, N)
    for k in range(p):
        b1[k] = _conv_trunc(table.omega, table.dphi[k], N)
        hd[k] = _conv_trunc(b1[k], harm, N)
        for j in range(k, p):
            b2[k, j] = _conv_trunc(table.omega, table.d2phi[k, j], N)
            b2[j, k] = b2[k, j]
    return BhCoeffs(b1=b1, b2=b2, hd=hd)
