import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from wormreg.operators import OdeCoefficients
from wormreg.shooting import (
    Box,
    apply_H,
    apply_H_factored,
    assemble_H,
    count_zeros,
    dirichlet_sigma_min,
    exceptional_sobolev,
    locate_zeros,
    shoot,
    shoot_many,
)


def model_phi(z, a=1.0, r=1.0):
    return np.sin(2 * r * a * z) / (a * z)


def test_model_endpoint_values(model):
    zs = np.array([0.3 + 0.2j, 1.7 - 0.5j, -2.5 + 0.9j, 2.9])
    phi, dphi, dz, _ = shoot_many(zs, model)
    assert np.allclose(phi, model_phi(zs), rtol=1e-10)
    assert np.allclose(dphi, np.cos(2 * zs), rtol=1e-10)
    exact_dz = 2 * np.cos(2 * zs) / zs - np.sin(2 * zs) / zs**2
    assert np.allclose(dz, exact_dz, rtol=1e-9)


def test_zeta_zero_limit(model):
    # sin(2 zeta)/zeta -> 2 (= interval length) as zeta -> 0
    assert shoot(0.0, model).phi_end == pytest.approx(2.0, abs=1e-12)


def test_variable_coefficients_against_solve_ivp():
    c = OdeCoefficients(a=lambda x: 1 + 0.3 * x, da=lambda x: 0.3 + 0 * x, beta1=0.2, beta2=-0.1, beta3=0.5)
    zeta = 1.2 - 0.4j
    ode = assemble_H(zeta, c)

    def rhs(x, y):
        return [y[1], -ode.p(x) * y[1] - ode.q(x) * y[0]]

    ref = solve_ivp(rhs, (-1, 1), [0j, 1 + 0j], rtol=1e-12, atol=1e-14, method="DOP853")
    res = shoot(zeta, c)
    assert res.phi_end == pytest.approx(ref.y[0, -1], rel=1e-9)
    assert res.dphi_end == pytest.approx(ref.y[1, -1], rel=1e-9)


def test_zeta_derivative_matches_difference_quotient():
    c = OdeCoefficients(beta1=0.3, beta3=-0.2)
    z, h = 0.8 + 0.3j, 1e-6
    d = (shoot(z + h, c).phi_end - shoot(z - h, c).phi_end) / (2 * h)
    assert shoot(z, c).dzeta_phi_end == pytest.approx(d, rel=1e-7)


def test_factored_and_expanded_forms_agree():
    c = OdeCoefficients(a=lambda x: 1 + 0.2 * x**2, da=lambda x: 0.4 * x, beta1=0.1, beta2=0.3, beta3=-0.4)
    x = np.linspace(-1, 1, 4001)[1:-1]
    f = np.sin(np.pi * (x + 1) / 2) ** 2
    df = np.pi / 2 * np.sin(np.pi * (x + 1))
    d2f = np.pi**2 / 2 * np.cos(np.pi * (x + 1))
    z = 1.5 + 0.5j
    a = apply_H(f, x, z, c)
    b = apply_H_factored(f, df, d2f, x, z, c)
    assert np.max(np.abs(a - b)[5:-5]) < 1e-4


def test_count_zeros(model):
    assert count_zeros((1.0, 2.0, -0.5, 0.5), model) == 1
    assert count_zeros((0.1, 1.0, -0.5, 0.5), model) == 0
    assert count_zeros((1.0, 3.5, -0.5, 0.5), model) == 2


def test_locate_zeros_model(model):
    cert = locate_zeros((0.5, 5.0, -1.0, 1.0), model)
    assert cert.winding == cert.zero_count == 3
    assert np.allclose(sorted(z.real for z in cert.zeta), [np.pi / 2, np.pi, 3 * np.pi / 2], atol=1e-9)
    assert all(abs(z["im"]) < 1e-9 for z in cert.zeros)


def test_locate_zeros_scaled_a():
    cert = locate_zeros((0.3, 2.0, -0.5, 0.5), OdeCoefficients(a=2.0))
    assert np.allclose(sorted(z.real for z in cert.zeta), [np.pi / 4, np.pi / 2], atol=1e-9)


def test_exceptional_model(model):
    res = exceptional_sobolev(0.0, 6.0, 1.0, model)
    assert np.allclose(res.values, [0.5 + k * np.pi / 2 for k in (1, 2, 3)], atol=1e-9)
    assert res.strip["im_zeta_max"] == 1.0 and "searched_box" in res.strip


def test_exceptional_argument_validation(model):
    with pytest.raises(ValueError):
        exceptional_sobolev(-1.0, 2.0, 1.0, model)
    with pytest.raises(ValueError):
        exceptional_sobolev(2.0, 1.0, 1.0, model)
    with pytest.raises(ValueError):
        shoot_many([1.0], model, tol=1e-3)
    with pytest.raises(ValueError):
        Box(1.0, 0.0, 0.0, 1.0)


def test_dirichlet_sigma_min_oracle(model):
    # classical Dirichlet spectrum of -d^2 on (-1, 1): (k pi / 2)^2
    assert dirichlet_sigma_min(0.0, model, n=1024).value == pytest.approx(np.pi**2 / 4, rel=1e-3)
    near = dirichlet_sigma_min(np.pi / 2, model, n=512).value
    assert near < 1e-2 * dirichlet_sigma_min(np.pi / 2 + 0.5, model, n=512).value


@settings(max_examples=25, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(-1, 1))
def test_model_symmetries(re, im):
    c = OdeCoefficients()
    z = complex(re, im)
    phi, _, _, _ = shoot_many([z, -z, np.conj(z)], c)
    assert abs(phi[0] - phi[1]) <= 1e-9 * max(1, abs(phi[0]))
    assert abs(phi[2] - np.conj(phi[0])) <= 1e-9 * max(1, abs(phi[0]))
