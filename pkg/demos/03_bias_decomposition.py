"""
Order-1/T bias of the memory estimate
=====================================

The bias splits into an intrinsic part, shared by every variant of the
objective, and a score part created by the estimated level.  The score
part carries a -log(T)/T term below d0 = 1/2 and dominates; the
modification removes it, leaving only the intrinsic constant.
"""

import numpy as np

from fracss.arma import ArmaParams, ThetaParams
from fracss.bias import (approx_bias, ar1_limit_bias, bias_table,
                         exact_bias, fractional_intrinsic_bias)

# purely fractional table (x100), the headline comparison
tab = bias_table(d0_values=(-0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2),
                 T_values=(32, 64, 128, 256))
print("bias x100 of d-hat, plain profile objective")
print("   d0 |    T=32    T=64   T=128   T=256")
for i, d0 in enumerate(tab.d0):
    cells = "  ".join(f"{v:6.2f}" for v in tab.total[i])
    print(f" {d0:4.1f} | {cells}")
print("constant part (what the modification leaves):",
      np.round(tab.constant, 2))
print("T x intrinsic constant:", fractional_intrinsic_bias())

# decomposition at one point, limiting versus finite-T evaluation
theta0 = ThetaParams(d=0.2)
for T in (64, 256):
    lim = approx_bias(theta0, T)
    ext = exact_bias(theta0, T)
    print(f"T={T:3d}  limiting: intrinsic {lim.intrinsic[0]:7.3f} "
          f"score {lim.score[0]:7.3f} | finite-T: "
          f"intrinsic {ext.intrinsic[0]:7.3f} score {ext.score[0]:7.3f}")

# one AR lag: the closed-form limit matrices against the summation engine
rep = ar1_limit_bias(-0.5, 0.4, 64)
eng = approx_bias(ThetaParams(d=0.4, ar=(-0.5,)), 64)
print("AR(1) phi0=-0.5, d0=0.4, T=64")
print("  closed form total:", np.round(rep.total, 4))
print("  engine total     :", np.round(eng.total, 4))
print("  bias x100 of d-hat at T=64:", round(100.0 * rep.total[0] / 64.0, 2))
