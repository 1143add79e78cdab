"""Conditional sum-of-squares estimation of fractionally integrated models.

The package implements the truncated (type-II) fractional difference, CSS
and modified-CSS estimation with profiled deterministic terms, analytic
small-sample bias approximations with closed-form special cases, and the
Monte Carlo plumbing used to study them.
"""

from .arma import ArmaParams, BhCoeffs, NonInvertible, ThetaParams, WeightTable, bh_coeffs, expand_weights
from .bias import (BiasReport, BiasTable, BoundaryD, FiniteMatrices,
                   LimitMatrices, approx_bias, approx_intrinsic_bias,
                   approx_score_bias, ar1_limit_bias, ar1_limit_matrices,
                   ar1_short_bias, bcm_correct, bias_table, exact_bias,
                   finite_matrices, fractional_intrinsic_bias,
                   fractional_score_bias, limit_matrices, short_memory_bias)
from .estimate import (AllStartsFailed, AsyMatrix, FitResult, ModelSpec,
                       NonFiniteObjective, SingularHessian, asy_matrix,
                       estimate, hessian_cov)
from .fracdiff import (DPiZero, KappaSeries, PiSeries, dpi_coeffs, dpi_zero,
                       fracdiff, fracdiff_fft, fracdiff_naive, kappa_series,
                       pi_coeffs, pi_coeffs_gamma)
from .cli import (BreakFit, DatasetFrame, apply_transform, break_filter,
                  read_series)
from .mc import DgpSpec, McConfig, McResult, run_mc, simulate_path
from .objective import (ConvolutedCoeffs, DegenerateLevel, ObjectiveKind,
                        SingularGram, batch_objective, conv_coeffs,
                        css_known_mu, css_profile, mcss_objective, mod_term,
                        mod_term_trend, mu_hat, objective_gradient, residuals,
                        sigma2_hat)
from .special import ZETA2, ZETA3, digamma, dilog, gen_binom

__version__ = "0.1.0"
