"""Special functions used by the closed-form bias and variance expressions.

Thin wrappers around scipy.special that add the domain checks needed here:
digamma with an explicit pole error, the real dilogarithm Li2(x) on x <= 1,
and generalized binomial coefficients evaluated through log-gamma with sign
tracking.  Accuracy of the wrapped routines is pinned down by series oracles
in the test suite.
"""

import math

import numpy as np
from scipy import special as _sp

# Riemann zeta values and Euler's constant, to double precision.
ZETA2 = np.pi ** 2 / 6.0
ZETA3 = 1.2020569031595943
EULER_GAMMA = float(np.euler_gamma)


def _is_nonpositive_integer(x):
    return x <= 0.0 and float(x) == math.floor(x)


def digamma(x):
    """Digamma function, the logarithmic derivative of the gamma function.

    Parameters
    ----------
    x : float or ndarray
        Argument(s); non-positive integers are poles and raise.

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(x, dtype=float)
    bad = (arr <= 0.0) & (arr == np.floor(arr))
    if np.any(bad):
        raise ValueError("digamma pole at non-positive integer argument")
    out = _sp.psi(arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def dilog(x):
    """Real dilogarithm Li2(x) = sum_{i>=1} x^i / i^2, extended to x <= 1.

    Parameters
    ----------
    x : float
        Argument, must satisfy x <= 1.  Arguments of the form
        -r/(1-r) for r in (-1, 1) cover (-inf, 1), which is all this
        package ever needs.

    Returns
    -------
    float
    """
    if x > 1.0:
        raise ValueError(f"dilog defined for x <= 1, got {x}")
    # scipy's spence uses the complementary convention Li2(z) = spence(1 - z)
    return float(_sp.spence(1.0 - x))


def gen_binom(top, bottom):
    """Generalized binomial coefficient C(top, bottom) for real arguments.

    Computed as Gamma(top+1) / (Gamma(bottom+1) * Gamma(top-bottom+1)) via
    log-gamma with sign tracking.  A pole in the numerator raises; a pole in
    the denominator alone gives an exact zero (the limiting value).
    """
    a = top + 1.0
    b = bottom + 1.0
    c = top - bottom + 1.0
    if _is_nonpositive_integer(a):
        raise ValueError(f"gen_binom pole: Gamma({a}) diverges")
    if _is_nonpositive_integer(b) or _is_nonpositive_integer(c):
        return 0.0
    sign = _sp.gammasgn(a) * _sp.gammasgn(b) * _sp.gammasgn(c)
    return float(sign * np.exp(_sp.gammaln(a) - _sp.gammaln(b) - _sp.gammaln(c)))
