"""
Truncated fractional differencing
=================================

The expansion weights of (1 - L)^(-a), the truncated filter, and the
round trip that recovers the shocks from the observed series.
"""

import numpy as np

from fracss.fracdiff import fracdiff_fft, pi_coeffs, pi_coeffs_gamma

# expansion weights pi_j(a): recursion versus the gamma-ratio form
a = 0.4
w = pi_coeffs(a, 10).coeffs
print("pi_j(0.4), j = 0..9")
print(np.round(w, 6))
print("gamma-ratio check at j = 9:", abs(w[9] - pi_coeffs_gamma(a, 9)))

# hyperbolic decay: pi_j(a) ~ j^(a-1)/Gamma(a), slow for a near 1
for j in (10, 100, 1000):
    print(f"pi_{j}(0.4) = {pi_coeffs(a, j + 1).coeffs[j]: .6e}")

# a type-II fractionally integrated path: cumulate shocks with d = 0.3,
# then difference with +0.3 to get the shocks back exactly
rng = np.random.default_rng(0)
eps = rng.standard_normal(512)
x = fracdiff_fft(eps, -0.3)
back = fracdiff_fft(x, 0.3)
print("round-trip error:", np.max(np.abs(back - eps)))

# d = 1 is the ordinary first difference (with x_0 kept as is)
d1 = fracdiff_fft(x, 1.0)
print("d=1 equals np.diff:", np.max(np.abs(d1[1:] - np.diff(x))))

# the filter is linear, so it commutes with scaling
print("linearity:", np.max(np.abs(fracdiff_fft(2.0 * x, 0.3) - 2.0 * back)))

# import matplotlib.pyplot as plt
# plt.plot(x, lw=0.8)
# plt.title("type-II fractional noise, d = 0.3")
# plt.show()
