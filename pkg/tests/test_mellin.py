import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as Gamma

from wormreg.mellin import (
    MellinGrid,
    conjugation_defect,
    log_derivative,
    mellin_forward,
    mellin_inverse,
    plancherel_defect,
    refinement_ratios,
    shift_identity_defect,
    tdt_symbol_defect,
)
from wormreg.operators import OdeCoefficients


def grid(n):
    return MellinGrid.for_span(-40.0, 5.0, n)


def test_gamma_function_oracle():
    g = grid(1024)
    F = mellin_forward(g.t * np.exp(-g.t), g, gamma=np.array([0.5, 1.0, 2.0]))
    exact = Gamma(1 - 1j * F.gamma)
    assert np.max(np.abs(F.values / exact - 1)) < 1e-12


def test_shifted_line_oracle():
    # int t e^{-t} t^{-i g + 1/2} dt/t = Gamma(3/2 - i g)
    g = grid(1024)
    F = mellin_forward(g.t * np.exp(-g.t), g, offset=0.5, gamma=np.array([0.0, 1.5]))
    assert np.allclose(F.values, Gamma(1.5 - 1j * F.gamma), rtol=1e-12)


def test_round_trip():
    g = grid(1024)
    f = g.t**2 * np.exp(-g.t**2)
    assert np.max(np.abs(mellin_inverse(mellin_forward(f, g)) - f)) < 1e-12


def test_identities_converge_under_refinement():
    f = lambda t: t * np.exp(-t)  # noqa: E731
    pl, td = [], []
    for n in (128, 256, 512):
        g = grid(n)
        pl.append(plancherel_defect(f(g.t), g)["dt_over_t"])
        td.append(tdt_symbol_defect(f(g.t), g))
    assert all(r >= 2 for r in refinement_ratios(pl, floor=1e-13))
    assert all(r >= 2 for r in refinement_ratios(td, floor=1e-11))


def test_shift_identity():
    g = grid(512)
    assert shift_identity_defect(g.t * np.exp(-g.t), g) < 1e-13


def test_non_decaying_input_rejected():
    g = grid(256)
    with pytest.raises(ValueError):
        mellin_forward(np.ones(g.n_t), g)
    F = mellin_forward(np.ones(g.n_t), g, window=True)
    assert np.all(np.isfinite(F.values))


def test_grid_nyquist_validation():
    with pytest.raises(ValueError):
        MellinGrid(np.exp(-40), np.exp(5), 1024, 40.0, 100)


def test_log_derivative_of_gaussian_in_y():
    g = grid(1024)
    y = g.y
    f = np.exp(-((y + 10) ** 2))
    assert np.max(np.abs(log_derivative(f, g) + 2 * (y + 10) * f)) < 1e-10


def test_conjugation_model_case():
    g = grid(1024)
    x = np.linspace(-1, 1, 66)[1:-1]
    fx = np.exp(-1 / (1 - x**2))
    c = OdeCoefficients()
    assert conjugation_defect(fx, g.t * np.exp(-g.t), x, 1.0, c, g) < 1e-5
    assert conjugation_defect(fx, g.t**2 * np.exp(-g.t**2), x, 2.0, c, g) < 1e-5


@settings(max_examples=20, deadline=None)
@given(p=st.floats(1.0, 3.0), sc=st.floats(0.2, 5.0))
def test_mellin_is_linear_and_scales(p, sc):
    # dilation t -> sc t multiplies the transform by sc^{i gamma}
    g = grid(512)
    gam = np.array([0.0, 0.7, 2.0])
    f = lambda t: t**p * np.exp(-t)  # noqa: E731
    F = mellin_forward(f(g.t), g, gamma=gam).values
    Fd = mellin_forward(f(sc * g.t), g, gamma=gam).values
    assert np.allclose(Fd, sc ** (1j * gam) * F, rtol=1e-8, atol=1e-12)
