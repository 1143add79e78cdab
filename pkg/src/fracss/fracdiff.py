"""Truncated fractional differencing and its coefficient sequences.

The truncated operator acts on a series observed from t = 1 onwards:

    y_t = sum_{i=0}^{t-1} pi_i(-d) * x_{t-i}

where pi_i(a) are the coefficients of the binomial expansion of (1-z)^(-a).
Everything here is pure and reentrant.  The FFT path is mathematically
identical to the naive convolution and kicks in for longer series, where it
is faster.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

# Crossover measured on this code base; below this the direct convolution wins.
FFT_MIN_LENGTH = 128

_HARMONIC_CACHE = {}


@dataclass(frozen=True)
class PiSeries:
    """Binomial expansion coefficients pi_0(a)..pi_{n-1}(a) of (1-z)^(-a)."""

    a: float
    coeffs: np.ndarray


@dataclass(frozen=True)
class KappaSeries:
    """Fractionally differenced step sequence and its analytic d-derivative.

    k0[i] holds the weight at time t = i+1, i.e. the truncated d-th
    difference of the indicator I(t >= 1), which equals pi_t-1(1-d).
    k1 is the derivative of k0 with respect to d, computed analytically.
    """

    d: float
    k0: np.ndarray
    k1: np.ndarray


@dataclass(frozen=True)
class DPiZero:
    """First and second order-derivatives of pi_j(a) at a = 0.

    d1[j] = 1/j for j >= 1 (0 at j = 0); d2[j] = 2*H_{j-1}/j for j >= 2
    with H_j the j-th harmonic number (0 at j = 0, 1).
    """

    d1: np.ndarray
    d2: np.ndarray


def pi_coeffs(a, n):
    """First n binomial expansion coefficients of (1-z)^(-a).

    Runs the recursion pi_0 = 1, pi_i = pi_{i-1} * ((i-1+a)/i) as a
    cumulative product, so consecutive coefficients satisfy the recursion
    bit for bit.  Coefficients grow or decay only polynomially, so there is
    no overflow for moderate orders even at n of a million.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(1.0, n)
    ratios = np.empty(n)
    ratios[0] = 1.0
    ratios[1:] = (i - 1.0 + a) / i
    return PiSeries(a=float(a), coeffs=np.cumprod(ratios))


def pi_coeffs_gamma(a, j):
    """Single coefficient pi_j(a) = Gamma(j+a) / (Gamma(a) Gamma(j+1)).

    Log-gamma evaluation with sign tracking.  This is the independent
    cross-check for the recursion, not the production path: the gamma form
    overflows for large j where the recursion does not.
    """
    from scipy.special import gammaln, gammasgn

    if a <= 0 and float(a) == np.floor(a):
        raise ValueError(f"pi_coeffs_gamma undefined at non-positive integer a={a}")
    top = j + a
    sign = gammasgn(top) * gammasgn(a)
    return float(sign * np.exp(gammaln(top) - gammaln(a) - gammaln(j + 1.0)))


def dpi_coeffs(a, n):
    """Derivative of pi_j(a) with respect to a, j = 0..n-1.

    Solves the differentiated recursion
    D pi_j = ((j-1+a) D pi_{j-1} + pi_{j-1}) / j in closed convolution form
    D pi_j = sum_{m=1}^{j} pi_{j-m}(a) / m, valid for every a including the
    non-positive integers where the ratio form of the recursion degenerates.
    """
    pi = pi_coeffs(a, n).coeffs
    key = n
    harm = _HARMONIC_CACHE.get(key)
    if harm is None:
        harm = np.zeros(n)
        if n > 1:
            harm[1:] = 1.0 / np.arange(1.0, n)
        _HARMONIC_CACHE[key] = harm
    if n < FFT_MIN_LENGTH:
        return np.convolve(pi, harm)[:n]
    nfft = _fft.next_fast_len(2 * n - 1)
    out = _fft.irfft(_fft.rfft(pi, nfft) * _fft.rfft(harm, nfft), nfft)[:n]
    return out


def fracdiff_naive(x, d):
    """Truncated fractional difference by direct convolution."""
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    w = pi_coeffs(-d, T).coeffs
    return np.convolve(x, w)[:T]


def fracdiff_fft(x, d):
    """Truncated fractional difference via zero-padded FFT convolution.

    Identical to ``fracdiff_naive`` up to floating round-off; the circular
    convolution is padded to length >= 2T-1 so no wrap-around occurs.
    """
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    if T == 1:
        return x.copy()
    w = pi_coeffs(-d, T).coeffs
    nfft = _fft.next_fast_len(2 * T - 1)
    return _fft.irfft(_fft.rfft(x, nfft) * _fft.rfft(w, nfft), nfft)[:T]


def fracdiff(x, d):
    """Truncated fractional difference, picking the faster path by length."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] >= FFT_MIN_LENGTH:
        return fracdiff_fft(x, d)
    return fracdiff_naive(x, d)


def kappa_series(d, T):
    """Step-response weights of the truncated d-th difference, with derivative.

    Returns k0[i] = pi_i(1-d) for i = 0..T-1 (the weight at time t = i+1)
    and its analytic derivative in d, k1 = -D_a pi(a)|_{a=1-d}.  The
    derivative is exact up to round-off; no finite differencing is involved,
    so downstream bias formulas stay noise-free.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    k0 = pi_coeffs(1.0 - d, T).coeffs
    k1 = -dpi_coeffs(1.0 - d, T)
    return KappaSeries(d=float(d), k0=k0, k1=k1)


def dpi_zero(n):
    """Order-derivatives of the expansion coefficients at a = 0.

    These weights enter the score expansions: d1[j] = D_a pi_j(0) = 1/j and
    d2[j] = D_aa pi_j(0) = 2 H_{j-1} / j, with H the harmonic numbers.
    """
    d1 = np.zeros(n)
    d2 = np.zeros(n)
    if n > 1:
        j = np.arange(1.0, n)
        d1[1:] = 1.0 / j
    if n > 2:
        cum = np.cumsum(d1[1:])  # H_1 .. H_{n-1}
        d2[2:] = 2.0 * cum[:-1] / np.arange(2.0, n)
    return DPiZero(d1=d1, d2=d2)
