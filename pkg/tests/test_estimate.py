import math

import numpy as np
import pytest
from scipy.optimize import minimize

from fracss.arma import ArmaParams, ThetaParams
from fracss.estimate import (ModelSpec, SingularHessian, _LockstepNelderMead,
                             asy_matrix, estimate, hessian_cov)
from fracss.mc import DgpSpec, simulate_path
from fracss.objective import css_known_mu, mcss_objective, objective_gradient
from fracss.special import ZETA2


def test_lockstep_nelder_mead_on_rosenbrock():
    def rosen(z):
        return 100.0 * (z[:, 1] - z[:, 0] ** 2) ** 2 + (1.0 - z[:, 0]) ** 2

    starts = np.array([[-1.5, 2.0], [0.0, 0.0], [2.0, -1.0], [1.2, 1.2]])
    nm = _LockstepNelderMead(rosen, starts, maxfev=20000)
    zb, fb, conv, _ = nm.run()
    i = int(np.argmin(fb))
    np.testing.assert_allclose(zb[i], [1.0, 1.0], atol=1e-4)
    assert fb[i] < 1e-9
    ref = minimize(lambda v: float(rosen(v[None, :])[0]), starts[0],
                   method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxfev": 20000})
    assert fb[i] <= ref.fun + 1e-10


def test_lockstep_nelder_mead_quadratic_batch():
    # every instance of a strictly convex quadratic must converge
    H = np.array([[3.0, 0.4], [0.4, 1.0]])
    c = np.array([0.5, -1.0])

    def quad(z):
        dz = z - c
        return np.einsum("si,ij,sj->s", dz, H, dz)

    starts = np.array([[4.0, 4.0], [-3.0, 2.0], [0.0, -5.0]])
    nm = _LockstepNelderMead(quad, starts, maxfev=20000)
    zb, fb, conv, _ = nm.run()
    assert conv.all()
    for s in range(3):
        np.testing.assert_allclose(zb[s], c, atol=1e-6)


def test_asy_matrix_pure_fractional():
    am = asy_matrix(ArmaParams())
    np.testing.assert_allclose(am.a, [[ZETA2]], rtol=1e-12)


def test_asy_matrix_ar1_closed_form():
    phi = 0.5
    am = asy_matrix(ArmaParams(ar=(phi,)))
    # off-diagonal: sum_j phi^(j-1)/j = -log(1-phi)/phi; corner: 1/(1-phi^2)
    want = np.array([[ZETA2, -math.log(1.0 - phi) / phi],
                     [-math.log(1.0 - phi) / phi, 1.0 / (1.0 - phi ** 2)]])
    np.testing.assert_allclose(am.a, want, rtol=1e-10)
    assert am.converged


def test_hessian_cov_quadratic_exact():
    H = np.array([[2.0, 0.3], [0.3, 0.9]])

    def fn(v):
        return 0.5 * float(v @ H @ v)

    cov = hessian_cov(fn, np.array([0.2, -0.4]), sigma2=1.7)
    np.testing.assert_allclose(cov, 1.7 * np.linalg.inv(H), rtol=1e-6)


def test_hessian_cov_rejects_flat_surface():
    with pytest.raises(SingularHessian):
        hessian_cov(lambda v: 0.0, np.array([0.1, 0.2]), sigma2=1.0)


def test_estimate_is_deterministic_and_locally_minimal():
    dgp = DgpSpec(d0=0.3, ar=(-0.4,), ma=())
    x = simulate_path(dgp, 128, base_seed=21, cell_index=0, rep=0)
    spec = ModelSpec(p1=1, p2=0, d_box=(-2.0, 2.0))
    fit1 = estimate(x, spec, kind="mcss")
    fit2 = estimate(x, spec, kind="mcss")
    assert fit1.theta == fit2.theta and fit1.objective == fit2.objective
    # small parameter perturbations never beat the reported optimum
    v = fit1.theta.as_vector()
    for k in range(v.size):
        for s in (-0.01, 0.01):
            w = v.copy(); w[k] += s
            cand = ThetaParams.from_vector(w, 1, 0)
            try:
                cand.arma.validate()
            except Exception:
                continue
            assert mcss_objective(cand, x) >= fit1.objective - 1e-10
    g = objective_gradient(fit1.theta, x, fit1.kind)
    assert np.max(np.abs(g)) < 1e-4
    assert fit1.converged and not fit1.at_boundary
    assert fit1.n_starts > 1 and fit1.n_evals > fit1.n_starts


def test_estimate_known_level_and_sigma2():
    dgp = DgpSpec(d0=0.2, ar=(), ma=(), mu0=0.0)
    x = simulate_path(dgp, 256, base_seed=22, cell_index=0, rep=1)
    spec = ModelSpec(p1=0, p2=0, d_box=(-1.0, 1.0))
    fit = estimate(x, spec, kind="css-mu0", mu0=0.0, with_cov=True)
    assert fit.mu == 0.0
    assert abs(fit.theta.d - 0.2) < 0.25
    assert fit.objective == pytest.approx(
        css_known_mu(fit.theta, 0.0, x), rel=1e-12)
    # sigma2 is the mean squared residual (2/T times the objective)
    assert fit.sigma2 == pytest.approx(2.0 * fit.objective / 256.0, rel=1e-12)
    se = fit.se
    assert se is not None and se[0] == pytest.approx(
        1.0 / math.sqrt(ZETA2 * 256.0), rel=0.35)
    assert fit.t_stats[0] == pytest.approx(fit.theta.d / se[0], rel=1e-12)


def test_estimate_flags_box_boundary():
    dgp = DgpSpec(d0=0.3, ar=(), ma=())
    x = simulate_path(dgp, 200, base_seed=23, cell_index=0, rep=2)
    # force the optimum onto the lower memory edge
    spec = ModelSpec(p1=0, p2=0, d_box=(0.8, 1.5))
    fit = estimate(x, spec, kind="css")
    assert fit.at_boundary
    assert fit.theta.d <= 0.8 + 1e-3 * 0.7 + 1e-8


def test_estimate_respects_coefficient_box():
    rng = np.random.default_rng(24)
    x = np.cumsum(rng.standard_normal(96))
    fit = estimate(x, ModelSpec(p1=1, p2=0, d_box=(-3.0, 3.0)), kind="css")
    assert -0.9999 - 1e-12 <= fit.theta.ar[0] <= 0.9999 + 1e-12
    assert -3.0 <= fit.theta.d <= 3.0
