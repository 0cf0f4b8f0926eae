import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wormreg.operators import (
    ACHOICES,
    GridSpec,
    OdeCoefficients,
    apply_model_log,
    assemble_A,
    assemble_calL,
    assemble_L,
    assemble_Lbar,
    build_Q_cutoff,
    lambda_conjugation_symbol,
    q_profile,
)


def smooth_u(g):
    X, T = g.mesh()
    return np.exp(-X**2 / 0.1) * np.exp(-T**2 / (0.1 * g.delta**2)) * np.exp(2j * X)


def exact_calL(g, s, a=1.0):
    # model: d_x^2 + a^2 (t d_t + s)^2 on exp(-x^2/0.1) exp(2ix) exp(-t^2/w)
    X, T = g.mesh()
    w = 0.1 * g.delta**2
    f = np.exp(-X**2 / 0.1) * np.exp(2j * X)
    fxx = f * ((-2 * X / 0.1 + 2j) ** 2 - 2 / 0.1)
    gt = np.exp(-T**2 / w)
    tdt = -2 * T**2 / w * gt
    tdt2 = (-4 * T**2 / w + 4 * T**4 / w**2) * gt
    return fxx * gt + a**2 * f * (tdt2 + 2 * s * tdt + s**2 * gt)


def test_calL_second_order_convergence():
    errs = []
    for n in (32, 64, 128):
        g = GridSpec(nx=n, nt=n, r=1.0, delta=0.2)
        err = assemble_calL(1.3, OdeCoefficients(), g)(smooth_u(g)) - exact_calL(g, 1.3)
        errs.append(np.sqrt(g.cell() * np.sum(np.abs(err) ** 2)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.5


def test_calL_factorisation():
    g = GridSpec(nx=16, nt=16)
    c = OdeCoefficients(beta1=0.3, beta2=-0.2, beta3=0.1)
    Lb, L = assemble_Lbar(2.0, c, g), assemble_L(2.0, c, g)
    for ach in ACHOICES:
        A = assemble_A(g, ach).matrix
        I = sp.identity(g.size)
        M = Lb.matrix @ L.matrix + (0.3 * I + A) @ Lb.matrix + (-0.2 * I + A) @ L.matrix + 0.1 * I + A
        assert abs(M - assemble_calL(2.0, c, g, ach).matrix).max() < 1e-12


def test_adjoint_defect_bounded():
    # Lbar^H + L = -i a (T + T^H + 2 s); T + T^H is an averaging operator
    norms = []
    for n in (16, 32, 64):
        g = GridSpec(nx=n, nt=n)
        c = OdeCoefficients()
        D = assemble_Lbar(1.0, c, g).adjoint().matrix + assemble_L(1.0, c, g).matrix
        D = D + 2j * sp.identity(g.size)
        norms.append(sp.linalg.norm(D, 1))
    assert max(norms) <= 1.0 + 1e-12
    assert norms[-1] <= 1.2 * norms[0]


def test_A_menu_symbol_vanishes_at_t0():
    g = GridSpec(nx=16, nt=64, delta=0.2)
    X, T = g.mesh()
    u = np.exp(-T**2 / 1e-4) * np.ones_like(X)
    for ach in ("t", "t_smooth"):
        Au = assemble_A(g, ach)(u)
        assert np.linalg.norm(Au) < 0.05 * np.linalg.norm(u)
    assert np.all(assemble_A(g, "zero")(u) == 0)
    with pytest.raises(ValueError):
        assemble_A(g, "bogus")


def test_log_grid_generator_matches_spectral():
    from wormreg.mellin import MellinGrid, log_derivative

    mg = MellinGrid.for_span(-30.0, 4.0, 1024)
    g = GridSpec(nx=8, nt=1024, t_kind="log", t_min=mg.t_min, t_max=mg.t_max)
    X, T = g.mesh()
    u = np.cos(X) * T * np.exp(-T)
    c = OdeCoefficients(a=1.5)
    # (Lbar - L) / (2 i a) = t d_t + s
    fd = (assemble_Lbar(0.7, c, g)(u) - assemble_L(0.7, c, g)(u)) / 3j
    spec = log_derivative(u, mg) + 0.7 * u
    assert np.max(np.abs(fd - spec)) < 1e-3 * np.max(np.abs(spec))


def test_q_cutoff_modes():
    g = GridSpec(nx=32, nt=64, delta=0.2)
    X, T = g.mesh()
    w = np.exp(-X**2 / 0.1 - T**2 / 0.002)
    Q = build_Q_cutoff(g)
    neg, pos = w * np.exp(-150j * T), w * np.exp(150j * T)
    assert np.linalg.norm(Q(neg) - neg) < 1e-3 * np.linalg.norm(neg)
    assert np.linalg.norm(Q(pos)) < 5e-3 * np.linalg.norm(pos)
    with pytest.raises(ValueError):
        build_Q_cutoff(GridSpec(t_kind="log"))


def test_q_profile_values():
    assert np.all(q_profile([-5.0, -1.0]) == 1.0)
    assert np.all(q_profile([-0.5, 0.0, 3.0]) == 0.0)
    mid = q_profile(np.linspace(-1, -0.5, 101))
    assert np.all(np.diff(mid) <= 0)


@settings(max_examples=40)
@given(s=st.floats(0.0, 10.0), tau=st.floats(-1e3, 1e3))
def test_lambda_symbol_identity(s, tau):
    assert lambda_conjugation_symbol(s, tau) + s == pytest.approx(s / (1 + tau**2), abs=1e-12 * max(1, s))


def test_write_coo(tmp_path):
    g = GridSpec(nx=8, nt=8)
    op = assemble_Lbar(1.0, OdeCoefficients(), g)
    p = tmp_path / "lbar.txt"
    op.write_coo(p)
    rows = np.loadtxt(p, comments="#")
    M = sp.coo_matrix((rows[:, 2] + 1j * rows[:, 3], (rows[:, 0].astype(int), rows[:, 1].astype(int))),
                      shape=op.matrix.shape)
    assert abs(M - op.matrix).max() == 0


def test_coefficient_validation():
    with pytest.raises(ValueError):
        OdeCoefficients(a=0.0)
    with pytest.raises(ValueError):
        OdeCoefficients(a=lambda x: 1 + x)
    with pytest.raises(ValueError):
        GridSpec(nx=4)
