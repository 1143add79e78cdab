import math

import numpy as np
import pytest
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import ndtri

from fracss.bias import exact_bias
from fracss.estimate import ModelSpec, estimate
from fracss.mc import DgpSpec, McConfig, run_mc, simulate_path
from fracss.objective import css_profile


def _pi(a, n):
    out = np.empty(n)
    out[0] = 1.0
    for i in range(1, n):
        out[i] = out[i - 1] * (i - 1 + a) / i
    return out


def _direct_path(dgp, T, base_seed, cell_index, rep):
    """Loop transcription of the generating recursion, no filters."""
    ss = SeedSequence(base_seed, spawn_key=(cell_index, rep))
    u = np.clip(Generator(Philox(ss)).random(T), 1e-300, 1.0)
    eps = ndtri(u) * dgp.sigma0
    p, q = len(dgp.ar), len(dgp.ma)
    shock = np.zeros(T)
    for t in range(T):
        acc = eps[t]
        for k in range(1, q + 1):
            if t - k >= 0:
                acc += dgp.ma[k - 1] * eps[t - k]
        for k in range(1, p + 1):
            if t - k >= 0:
                acc += dgp.ar[k - 1] * shock[t - k]
        shock[t] = acc
    w = _pi(dgp.d0, T)
    x = np.array([sum(w[j] * shock[t - j] for j in range(t + 1)) for t in range(T)])
    return dgp.mu0 + x


@pytest.mark.parametrize("dgp", [
    DgpSpec(d0=0.4, ar=(-0.5,)),
    DgpSpec(d0=0.7, ar=(0.3,), ma=(-0.2,), mu0=2.0, sigma0=1.5),
    DgpSpec(d0=-0.3),
])
def test_simulate_path_matches_direct_recursion(dgp):
    T = 64
    x = simulate_path(dgp, T, base_seed=7, cell_index=3, rep=11)
    want = _direct_path(dgp, T, 7, 3, 11)
    np.testing.assert_allclose(x, want, rtol=1e-12, atol=1e-12)


def test_simulate_path_stream_keying():
    dgp = DgpSpec(d0=0.3)
    a = simulate_path(dgp, 32, base_seed=5, cell_index=0, rep=0)
    b = simulate_path(dgp, 32, base_seed=5, cell_index=0, rep=0)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate_path(dgp, 32, 5, 0, 1))
    assert not np.array_equal(a, simulate_path(dgp, 32, 5, 1, 0))
    assert not np.array_equal(a, simulate_path(dgp, 32, 6, 0, 0))
    # longer draw from the same stream starts with the same uniforms
    c = simulate_path(dgp, 16, base_seed=5, cell_index=0, rep=0)
    assert c.shape == (16,)


def test_run_mc_parallel_matches_serial_bitwise():
    dgp = DgpSpec(d0=0.3)
    kw = dict(reps=8, T=48, base_seed=13, estimators=("css", "mcss", "bcm"))
    r1 = run_mc(dgp, McConfig(n_jobs=1, **kw))
    r2 = run_mc(dgp, McConfig(n_jobs=2, **kw))
    assert r1.n_failed == r2.n_failed == 0
    for name in kw["estimators"]:
        np.testing.assert_array_equal(r1.estimates[name], r2.estimates[name])
        np.testing.assert_array_equal(r1.bias100[name], r2.bias100[name])
        np.testing.assert_array_equal(r1.se100[name], r2.se100[name])
        np.testing.assert_array_equal(r1.mse100[name], r2.mse100[name])


def test_run_mc_moments_recompute_from_estimates():
    dgp = DgpSpec(d0=0.25)
    cfg = McConfig(reps=6, T=48, base_seed=17, estimators=("css",))
    res = run_mc(dgp, cfg)
    est = res.estimates["css"]
    assert est.shape == (6, 1)
    # independent refits of the regenerated paths
    for rep in range(6):
        x = simulate_path(dgp, 48, 17, 0, rep)
        fit = estimate(x, ModelSpec(d_box=(dgp.d0 - 5.0, dgp.d0 + 5.0)), kind="css")
        assert fit.theta.d == est[rep, 0]
    err = est[:, 0] - dgp.d0
    bias = 100.0 * math.fsum(err) / 6.0
    mse = 100.0 * math.fsum(e * e for e in err) / 6.0
    var = math.fsum((e - math.fsum(err) / 6.0) ** 2 for e in err) / 5.0
    se = 100.0 * math.sqrt(var / 6.0)
    assert res.bias100["css"][0] == pytest.approx(bias, rel=1e-12)
    assert res.mse100["css"][0] == pytest.approx(mse, rel=1e-12)
    assert res.se100["css"][0] == pytest.approx(se, rel=1e-12)


def test_run_mc_bcm_is_corrected_mcss():
    from fracss.arma import ThetaParams

    dgp = DgpSpec(d0=0.3)
    cfg = McConfig(reps=4, T=40, base_seed=19, estimators=("mcss", "bcm"))
    res = run_mc(dgp, cfg)
    for rep in range(4):
        th_m = ThetaParams.from_vector(res.estimates["mcss"][rep], 0, 0)
        want = th_m.as_vector() - exact_bias(th_m, 40).intrinsic / 40.0
        np.testing.assert_allclose(res.estimates["bcm"][rep], want, rtol=1e-12)


def test_profiled_level_makes_css_shift_invariant():
    dgp = DgpSpec(d0=0.35)
    x = simulate_path(dgp, 96, base_seed=23, cell_index=0, rep=0)
    spec = ModelSpec(d_box=(-2.0, 2.0))
    f0 = estimate(x, spec, kind="css")
    f5 = estimate(x + 5.0, spec, kind="css")
    assert f5.theta.d == pytest.approx(f0.theta.d, abs=1e-6)
    assert f5.mu == pytest.approx(f0.mu + 5.0, abs=1e-4)
    assert css_profile(f0.theta, x) == pytest.approx(
        css_profile(f0.theta, x + 5.0), rel=1e-9)


def test_run_mc_discloses_failures():
    # degenerate constant paths make every start fail or flatten out
    dgp = DgpSpec(d0=0.3, sigma0=1.0)
    cfg = McConfig(reps=2, T=24, base_seed=29, estimators=("css",))
    res = run_mc(dgp, cfg)
    assert res.n_failed == 0 and res.failures == ()
    assert isinstance(res.n_failed, int)
