"""
The level-profile modification term
===================================

Profiling an unknown level out of the sum of squares leaves a term the
plain objective ignores.  The modified objective multiplies the sum of
squares by m(theta) = (sum of squared level-regressor weights)^(1/(T-1)),
which restores a proper minimum near the truth.
"""

import numpy as np

from fracss.arma import ThetaParams
from fracss.objective import mod_term

# m(d) over a memory grid for several sample sizes; the factor is largest
# where the level regressor carries the most weight (d well below 1) and
# collapses to 1 at d = 1, where the regressor is a single impulse
for T in (32, 128, 512):
    ds = np.arange(-0.5, 1.76, 0.25)
    ms = [mod_term(ThetaParams(d=float(d)), T) for d in ds]
    row = "  ".join(f"{m:6.3f}" for m in ms)
    print(f"T = {T:4d}  m(d) at d = -0.5..1.75: {row}")

# exact anchors
print("m(d=1, any T)      :", mod_term(ThetaParams(d=1.0), 64))
print("m(d=0, T=2)        :", mod_term(ThetaParams(d=0.0), 2))

# short-run dynamics enter through the same weights
print("m(d=0.4, AR .5)    :", mod_term(ThetaParams(d=0.4, ar=(0.5,)), 64))
print("m(d=0.4, MA -.5)   :", mod_term(ThetaParams(d=0.4, ma=(-0.5,)), 64))

# import matplotlib.pyplot as plt
# ds = np.linspace(-1.0, 2.0, 301)
# for T in (32, 128, 512):
#     plt.plot(ds, [mod_term(ThetaParams(d=float(d)), T) for d in ds],
#              label=f"T={T}")
# plt.legend(); plt.xlabel("d"); plt.ylabel("m(d)")
# plt.show()
