import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormreg.geometry import (
    ChartPoint,
    PhiProfile,
    WormConfig,
    alpha_coefficient,
    boundary_chart,
    cr_annihilation_residual,
    defining_function,
    eval_phi,
    gamma_coefficient,
    gamma_derivatives,
    levi_coefficients,
    pseudoconvexity_scan,
)


def test_phi_vanishes_on_flat_interval(worm):
    u = np.linspace(-2 * worm.r_flat, 2 * worm.r_flat, 41)
    f, d = eval_phi(u, worm)
    assert np.all(f == 0) and np.all(d == 0)
    assert eval_phi(1.5, worm)[0] > 0


def test_phi_closed_form(worm):
    # M exp(-sigma / (u - 1)^2) at u = 1.5 with r_flat = 0.5
    f, d = eval_phi(1.5, worm)
    assert f == pytest.approx(0.5 * np.exp(-4.0), rel=1e-14)
    assert d == pytest.approx(f * 2 / 0.5**3, rel=1e-14)


def test_profile_validation():
    with pytest.raises(ValueError):
        PhiProfile(M=1.0)
    with pytest.raises(ValueError):
        PhiProfile(sigma=0.0)
    with pytest.raises(ValueError):
        WormConfig(delta=4.0)


def test_gamma_on_flat_region_matches_alpha(worm):
    t = np.linspace(-0.4, 0.4, 9)
    g = gamma_coefficient(0.1, t, worm)
    assert np.allclose(g, 2 * (np.exp(-1j * t) - 1), atol=1e-15)
    nz = t != 0
    assert np.allclose(g[nz], 1j * t[nz] * alpha_coefficient(t[nz]), atol=1e-15)


def test_alpha_taylor_branch_continuous():
    t = np.array([0.999e-3, 1.001e-3])
    a = alpha_coefficient(t)
    assert abs(a[0] - a[1]) < 1e-5
    assert alpha_coefficient(0.0) == -2


def test_gamma_derivatives_match_finite_differences(worm):
    h = 1e-5
    for x, t in [(0.3, 0.1), (0.62, -0.2), (-0.7, 0.15)]:
        gx, gt = gamma_derivatives(x, t, worm)
        fx = (gamma_coefficient(x + h, t, worm) - gamma_coefficient(x - h, t, worm)) / (2 * h)
        ft = (gamma_coefficient(x, t + h, worm) - gamma_coefficient(x, t - h, worm)) / (2 * h)
        assert abs(gx - fx) < 1e-6 * max(1, abs(fx))
        assert abs(gt - ft) < 1e-8


def test_cr_residual_converges_second_order(worm):
    p = ChartPoint(0.65, 0.3, 0.12)
    r1 = cr_annihilation_residual(p, 4e-3, worm)
    r2 = cr_annihilation_residual(p, 2e-3, worm)
    assert r1 / r2 == pytest.approx(4.0, rel=0.05)


def test_cr_residual_negative_control(worm):
    p = ChartPoint(0.2, 0.0, 0.1)
    assert cr_annihilation_residual(p, 1e-3, worm) < 1e-5
    assert cr_annihilation_residual(p, 1e-3, worm, gamma_shift=0.1) > 1e-2


def test_cr_residual_rejects_bad_stencil(worm):
    with pytest.raises(ValueError):
        cr_annihilation_residual(ChartPoint(0, 0, 0.49), 0.02, worm)
    with pytest.raises(ValueError):
        cr_annihilation_residual(ChartPoint(0, 0, 0), 0.2, worm)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-0.74, 0.74), th=st.floats(-3, 3), t=st.floats(-0.49, 0.49))
def test_chart_lies_on_boundary(x, th, t):
    cfg = WormConfig()
    z1, z2 = boundary_chart(ChartPoint(x, th, t), cfg)
    assert abs(defining_function(z1, z2, cfg)) < 1e-12


def test_defining_function_sign(worm):
    z1, z2 = boundary_chart(ChartPoint(0.1, 0.0, 0.0), worm)
    assert defining_function(z1 * 0.99 - 0.01 * np.exp(0.2j), z2, worm) != 0
    with pytest.raises(ValueError):
        defining_function(0.0, 0.0, worm)


def test_levi_flat_region_closed_form(worm):
    t = np.linspace(-0.45, 0.45, 31)
    X, T = np.meshgrid(np.linspace(-0.5, 0.5, 11), t, indexing="ij")
    mu, nu = levi_coefficients(X, T, worm)
    assert np.max(np.abs(mu - 8 * (1 - np.cos(T)))) < 1e-12
    assert np.all(nu == 0)
    assert levi_coefficients(0.0, 0.0, worm).mu == 0.0


def test_scan_shipped_profile_and_negative_control():
    assert pseudoconvexity_scan(WormConfig()).ok
    bad = pseudoconvexity_scan(WormConfig(phi=PhiProfile(M=-0.5)))
    assert not bad.ok and bad.mu_min < 0
    assert bad.summary()["violations"] == len(bad.violations)
