import numpy as np
import pytest

from fracss.arma import (ArmaParams, NonInvertible, ThetaParams, bh_coeffs,
                         expand_weights)


def stable_arma2(rng):
    # AR(2) stationarity triangle with margin, |a2| < 1, a2 +- a1 < 1
    a2 = rng.uniform(-0.8, 0.8)
    a1 = rng.uniform(-(1 - a2) + 0.1, (1 - a2) - 0.1)
    return a1, a2


def test_lag_polynomials():
    p = ArmaParams(ar=(0.5, -0.2), ma=(0.3,))
    np.testing.assert_allclose(p.ar_poly, [1.0, -0.5, 0.2])
    np.testing.assert_allclose(p.ma_poly, [1.0, 0.3])
    ThetaParams(d=0.4, ar=(0.5,), ma=()).arma.validate()


def test_theta_vector_roundtrip():
    th = ThetaParams(d=0.25, ar=(0.4, -0.1), ma=(0.2,))
    vec = th.as_vector()
    np.testing.assert_allclose(vec, [0.25, 0.4, -0.1, 0.2])
    back = ThetaParams.from_vector(vec, 2, 1)
    assert back == th


def test_validate_rejects_unstable_and_noninvertible():
    with pytest.raises(NonInvertible):
        ArmaParams(ar=(1.0,)).validate()
    with pytest.raises(NonInvertible):
        ArmaParams(ar=(1.05,)).validate()
    with pytest.raises(NonInvertible):
        ArmaParams(ma=(-1.0,)).validate()
    with pytest.raises(NonInvertible):
        ArmaParams(ar=(0.3, 0.8)).validate()  # outside the AR(2) triangle
    # common AR/MA root: (1 - 0.5 L) appears on both sides
    with pytest.raises(NonInvertible):
        ArmaParams(ar=(0.5,), ma=(-0.5,)).validate()
    ArmaParams(ar=(0.5,), ma=(0.3,)).validate()


def test_ar1_weights_closed_form():
    phi = 0.6
    w = expand_weights(ArmaParams(ar=(phi,)), 64)
    j = np.arange(64)
    np.testing.assert_allclose(w.omega, phi ** j, rtol=1e-13)
    want_inv = np.zeros(64)
    want_inv[0] = 1.0
    want_inv[1] = -phi
    np.testing.assert_allclose(w.phi, want_inv, atol=1e-15)
    # d phi(L)/d phi = -L
    want_d = np.zeros(64)
    want_d[1] = -1.0
    np.testing.assert_allclose(w.dphi[0], want_d, atol=1e-15)


def test_ma1_weights_closed_form():
    a = 0.4
    w = expand_weights(ArmaParams(ma=(a,)), 64)
    want_omega = np.zeros(64)
    want_omega[0] = 1.0
    want_omega[1] = a
    np.testing.assert_allclose(w.omega, want_omega, atol=1e-15)
    j = np.arange(64)
    np.testing.assert_allclose(w.phi, (-a) ** j, rtol=1e-13)


def test_omega_phi_convolution_is_identity():
    rng = np.random.default_rng(8)
    for _ in range(6):
        a1, a2 = stable_arma2(rng)
        m1 = rng.uniform(-0.7, 0.7)
        params = ArmaParams(ar=(a1, a2), ma=(m1,))
        params.validate()
        w = expand_weights(params, 256)
        conv = np.convolve(w.omega, w.phi)[:256]
        want = np.zeros(256)
        want[0] = 1.0
        assert np.max(np.abs(conv - want)) < 1e-10


def test_weight_derivatives_match_finite_differences():
    h = 1e-6
    params = ArmaParams(ar=(0.4,), ma=(-0.3,))
    w = expand_weights(params, 80)
    for k, (dar, dma) in enumerate(((h, 0.0), (0.0, h))):
        up = expand_weights(ArmaParams(ar=(0.4 + dar,), ma=(-0.3 + dma,)), 80)
        dn = expand_weights(ArmaParams(ar=(0.4 - dar,), ma=(-0.3 - dma,)), 80)
        fd = (up.phi - dn.phi) / (2.0 * h)
        np.testing.assert_allclose(w.dphi[k], fd, rtol=1e-7, atol=1e-8)
        for kk, (dar2, dma2) in enumerate(((h, 0.0), (0.0, h))):
            pp = expand_weights(ArmaParams(ar=(0.4 + dar + dar2,), ma=(-0.3 + dma + dma2,)), 80)
            pm = expand_weights(ArmaParams(ar=(0.4 + dar - dar2,), ma=(-0.3 + dma - dma2,)), 80)
            mp = expand_weights(ArmaParams(ar=(0.4 - dar + dar2,), ma=(-0.3 - dma + dma2,)), 80)
            mm = expand_weights(ArmaParams(ar=(0.4 - dar - dar2,), ma=(-0.3 - dma - dma2,)), 80)
            fd2 = (pp.phi - pm.phi - mp.phi + mm.phi) / (4.0 * h * h)
            np.testing.assert_allclose(w.d2phi[k, kk], fd2, rtol=5e-4, atol=5e-4)


def test_second_order_fd_option_matches_analytic():
    params = ArmaParams(ar=(0.5, -0.15), ma=(0.25,))
    wa = expand_weights(params, 120, second_order="analytic")
    wf = expand_weights(params, 120, second_order="fd")
    np.testing.assert_allclose(wa.d2phi, wf.d2phi, rtol=2e-6, atol=2e-6)
    np.testing.assert_allclose(wa.omega, wf.omega, rtol=1e-14)


def test_ar1_b_coefficients_closed_form():
    phi = -0.5
    table = expand_weights(ArmaParams(ar=(phi,)), 64)
    bh = bh_coeffs(table)
    j = np.arange(1, 64)
    # b_j = -phi^(j-1), with b_0 = 0
    np.testing.assert_allclose(bh.b1[0][1:], -phi ** (j - 1.0), rtol=1e-13)
    assert bh.b1[0][0] == 0.0
    # AR(1): second derivative of 1/omega in phi vanishes after convolution
    np.testing.assert_allclose(bh.b2[0, 0], np.zeros(64), atol=1e-14)


def test_white_noise_fit_b_and_h():
    # at phi = 0 the b sequence is the unit lag and h(i) = -1/(i-1)
    table = expand_weights(ArmaParams(ar=(0.0,)), 32)
    bh = bh_coeffs(table)
    want_b = np.zeros(32)
    want_b[1] = -1.0
    np.testing.assert_allclose(bh.b1[0], want_b, atol=1e-15)
    i = np.arange(2, 32)
    np.testing.assert_allclose(bh.hd[0][2:], -1.0 / (i - 1.0), rtol=1e-14)
    np.testing.assert_allclose(bh.hd[0][:2], [0.0, 0.0], atol=1e-300)


def test_h_is_harmonic_convolution_of_b():
    params = ArmaParams(ar=(0.3,), ma=(0.4,))
    table = expand_weights(params, 96)
    bh = bh_coeffs(table)
    for k in range(2):
        want = np.zeros(96)
        for i in range(96):
            want[i] = sum(bh.b1[k][i - jj] / jj for jj in range(1, i + 1))
        np.testing.assert_allclose(bh.hd[k], want, rtol=1e-11, atol=1e-12)
