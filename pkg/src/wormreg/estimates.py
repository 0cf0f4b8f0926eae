"""Empirical checks of the a priori inequality ladder.

Every check returns an :class:`EstimateReport` holding one record per
parameter point with the measured left and right sides. Empirical constants
are maxima over the sampled family, so they only grow as the family is
enlarged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from . import mellin
from .operators import (
    GridSpec,
    OdeCoefficients,
    apply_fourier_multiplier,
    assemble_calL,
    assemble_L,
    assemble_Lbar,
    diff1,
    q_profile,
)
from .shooting import assemble_H, apply_H_factored, dirichlet_matrix

__all__ = [
    "NormSuite",
    "EstimateReport",
    "random_bandlimited_1d",
    "random_field",
    "wave_packet",
    "lemma2_check",
    "lemma2_random",
    "bound_5_2_sweep",
    "bound_5_1_constant",
    "lemma5_weighted_integrals",
    "prop2_constant",
    "prop2_sweep",
    "discrete_extremal",
    "lemma1_check",
]


def _bracket(z) -> float:
    return float(np.sqrt(1.0 + abs(z) ** 2))


# ----------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormSuite:
    """Discrete L2 and H^{+-1} norms on a linear :class:`GridSpec`.

    Sobolev norms use the multiplier ``(1 + xi^2 + tau^2)^(k/2)`` on the
    zero-padded periodic box (``pad`` times the support box per axis).
    """

    grid: GridSpec
    pad: int = 2

    def l2(self, u) -> float:
        return float(np.sqrt(self.grid.cell() * np.sum(np.abs(u) ** 2)))

    def _padded_norm(self, u, symbol) -> float:
        g = self.grid
        V = apply_fourier_multiplier(np.asarray(u), g.hx, g.ht, symbol, self.pad)
        return float(np.sqrt(g.cell() * np.sum(np.abs(V) ** 2)))

    def sobolev(self, u, k: float) -> float:
        return self._padded_norm(u, lambda XI, TAU: (1.0 + XI**2 + TAU**2) ** (k / 2))

    def hm1(self, u) -> float:
        return self.sobolev(u, -1.0)

    def h1(self, u) -> float:
        return self.sobolev(u, 1.0)

    def q_h1(self, u) -> float:
        """``||Q u||_1`` with Q the tau-cutoff."""
        return self._padded_norm(u, lambda XI, TAU: q_profile(TAU) * np.sqrt(1.0 + XI**2 + TAU**2))


def _l2_1d(f, h) -> float:
    f = np.asarray(f)
    w = np.full(f.shape[-1], h)
    w[0] = w[-1] = 0.5 * h
    return float(np.sqrt(np.sum(w * np.abs(f) ** 2)))


# ----------------------------------------------------------------------------
# reports


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if not np.isfinite(v):
            return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class EstimateReport:
    inequality: str
    params: dict
    family: str
    seed: int | None = None
    records: list[dict] = field(default_factory=list)

    def add(self, **rec) -> None:
        self.records.append(rec)

    def ratios(self, key: str = "ratio") -> np.ndarray:
        return np.array([r[key] for r in self.records if r.get(key) is not None], dtype=float)

    @property
    def best_ratio(self) -> float | None:
        r = self.ratios()
        return float(r.max()) if r.size else None

    @property
    def argmax(self) -> dict | None:
        vals = [(r["ratio"], i) for i, r in enumerate(self.records) if r.get("ratio") is not None]
        if not vals:
            return None
        return self.records[max(vals)[1]]

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        if other.inequality != self.inequality:
            raise ValueError("cannot merge reports of different inequalities")
        out = EstimateReport(self.inequality, dict(self.params), self.family, self.seed, list(self.records))
        out.records.extend(other.records)
        return out

    def to_dict(self) -> dict:
        return _clean({
            "inequality": self.inequality,
            "params": self.params,
            "family": self.family,
            "seed": self.seed,
            "best_ratio": self.best_ratio,
            "records": self.records,
        })

    def ndjson_lines(self) -> list[str]:
        head = {"inequality": self.inequality, "family": self.family, "seed": self.seed}
        return [json.dumps(_clean({**head, **self.params, **r}), sort_keys=True) for r in self.records]


# ----------------------------------------------------------------------------
# test families


def random_bandlimited_1d(rng: np.random.Generator, omega_max: float, modes: int = 8):
    """Random trigonometric sum and its exact derivative, as callables."""
    amp = rng.standard_normal(modes) / np.sqrt(modes)
    om = rng.uniform(0.0, omega_max, modes)
    ph = rng.uniform(0.0, 2 * np.pi, modes)
    c0 = rng.standard_normal()

    def f(x):
        x = np.asarray(x)[..., None]
        return c0 + np.sum(amp * np.cos(om * x + ph), axis=-1)

    def df(x):
        x = np.asarray(x)[..., None]
        return -np.sum(amp * om * np.sin(om * x + ph), axis=-1)

    return f, df


def _bump(z):
    """C-infinity bump on (-1, 1)."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    m = np.abs(z) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - z[m] ** 2))
    return out


def _window(g: GridSpec, shrink: float = 0.95):
    X, T = g.mesh()
    L = g.r + g.margin
    return _bump(X / (shrink * L)) * _bump(T / (shrink * g.delta))


def random_field(g: GridSpec, rng: np.random.Generator, kmax: float | None = None, modes: int = 12) -> np.ndarray:
    """Band-limited complex Gaussian field times a smooth window supported in W."""
    X, T = g.mesh()
    kx = np.pi / g.hx / 4 if kmax is None else kmax
    kt = np.pi / g.ht / 4 if kmax is None else kmax
    u = np.zeros(g.shape, dtype=complex)
    for _ in range(modes):
        xi = rng.uniform(-kx, kx)
        tau = rng.uniform(-kt, kt)
        c = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2 * modes)
        u += c * np.exp(1j * (xi * X + tau * T))
    return u * _window(g)


def wave_packet(g: GridSpec, x0: float, t0: float, scale: float, tau0: float, xi0: float = 0.0) -> np.ndarray:
    """Gaussian packet ``exp(-((x-x0)^2 + (t-t0)^2) / 2 scale^2) e^{i(xi0 x + tau0 t)}`` cut to W."""
    X, T = g.mesh()
    scale = max(abs(scale), 2 * min(g.hx, g.ht))
    env = np.exp(-((X - x0) ** 2 + (T - t0) ** 2) / (2 * scale**2))
    return env * np.exp(1j * (xi0 * X + tau0 * T)) * _window(g)


# ----------------------------------------------------------------------------
# one-dimensional interval inequalities


def lemma2_check(x, f, eps: float, df=None, c_first: float = 2.0, c_second: float = 1.0,
                 report: EstimateReport | None = None) -> EstimateReport:
    """Both one-dimensional inequalities on the window ``[-2 eps, 2 eps]``.

    ``||f||_{L2[eps,2eps]} <= C1 ||f||_{L2[-2eps,-eps]} + C1 eps ||f'||`` and
    ``|f(0) - f(-eps)| <= C2 eps^(1/2) ||f'||``; ``||f'||`` is taken over the
    window, which only makes the right sides smaller.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f)
    h = x[1] - x[0]
    if eps < 8 * h:
        raise ValueError("eps must be resolved by at least 8 grid cells")
    if x[0] > -2 * eps + 1e-12 * eps or x[-1] < 2 * eps - 1e-12 * eps:
        raise ValueError("grid must cover [-2 eps, 2 eps]")
    dfx = np.gradient(f, h, edge_order=2) if df is None else np.asarray(df)

    def seg(v, a, b, n=1025):
        xs = np.linspace(a, b, n)
        vr = np.interp(xs, x, np.real(v))
        vi = np.interp(xs, x, np.imag(v)) if np.iscomplexobj(v) else 0.0
        return _l2_1d(vr + 1j * vi, xs[1] - xs[0])

    rep = report or EstimateReport("lemma2", {"c_first": c_first, "c_second": c_second}, "caller-supplied f")
    f_hi = seg(f, eps, 2 * eps)
    f_lo = seg(f, -2 * eps, -eps)
    dnorm = seg(dfx, -2 * eps, 2 * eps)
    rhs1 = c_first * f_lo + c_first * eps * dnorm
    f0 = np.interp(0.0, x, np.real(f)) + 1j * (np.interp(0.0, x, np.imag(f)) if np.iscomplexobj(f) else 0.0)
    fm = np.interp(-eps, x, np.real(f)) + 1j * (np.interp(-eps, x, np.imag(f)) if np.iscomplexobj(f) else 0.0)
    lhs2 = abs(f0 - fm)
    rhs2 = c_second * np.sqrt(eps) * dnorm
    rep.add(part="first", eps=eps, lhs=f_hi, rhs=rhs1, ratio=(f_hi / rhs1) if rhs1 > 0 else None)
    rep.add(part="second", eps=eps, lhs=lhs2, rhs=rhs2, ratio=(lhs2 / rhs2) if rhs2 > 0 else None)
    return rep


def lemma2_random(trials: int, seed: int, cells_per_eps: int = 64) -> EstimateReport:
    rng = np.random.default_rng(seed)
    rep = EstimateReport("lemma2", {"c_first": 2.0, "c_second": 1.0, "trials": trials},
                         "random trigonometric sums, frequencies up to 4/eps", seed)
    for _ in range(trials):
        eps = float(10 ** rng.uniform(-2, 0))
        f, df = random_bandlimited_1d(rng, 4.0 / eps)
        h = eps / cells_per_eps
        x = np.arange(-2 * cells_per_eps - 2, 2 * cells_per_eps + 3) * h
        lemma2_check(x, f(x), eps, df=df(x), report=rep)
    return rep


# ----------------------------------------------------------------------------
# ODE estimates along vertical lines


def _sine_series(rng, r, kmax, x):
    """Random endpoint-vanishing f with exact first and second derivatives."""
    k = np.arange(1, kmax + 1)
    c = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) / k
    w = k * np.pi / (2 * r)
    S = np.sin(np.outer(x + r, w))
    C = np.cos(np.outer(x + r, w))
    return S @ c, C @ (c * w), -S @ (c * w**2)


def bound_5_2_sweep(c: OdeCoefficients, s: float, gammas, trials: int = 64, seed: int = 0,
                    n: int = 2049, kmax: int = 48) -> EstimateReport:
    """Ratio ``(g^2 ||f|| + |g| ||f'||) / ||H_{s+ig} f||`` for endpoint-vanishing f.

    Each gamma row also records the first Dirichlet sine mode as a
    deterministic anchor (``anchor_ratio``).
    """
    x = np.linspace(-c.r, c.r, n)
    h = x[1] - x[0]
    rep = EstimateReport("bound52", {"s": s, "trials": trials, "kmax": kmax},
                         "random sine series with 1/k coefficients plus first sine mode", seed)
    ss = np.random.SeedSequence(seed)
    for gi, (gam, child) in enumerate(zip(gammas, ss.spawn(len(gammas)))):
        gam = float(gam)
        if gam == 0.0:
            rep.add(gamma=gam, ratio=None, status="N/A")
            continue
        zeta = s + 1j * gam
        rng = np.random.default_rng(child)
        best = 0.0
        for _ in range(trials):
            f, df, d2f = _sine_series(rng, c.r, kmax, x)
            phi = apply_H_factored(f, df, d2f, x, zeta, c)
            val = (gam**2 * _l2_1d(f, h) + abs(gam) * _l2_1d(df, h)) / _l2_1d(phi, h)
            best = max(best, val)
        w = np.pi / (2 * c.r)
        f1 = np.sin(w * (x + c.r))
        phi1 = apply_H_factored(f1, w * np.cos(w * (x + c.r)), -w**2 * f1, x, zeta, c)
        anchor = (gam**2 * _l2_1d(f1, h) + abs(gam) * _l2_1d(w * np.cos(w * (x + c.r)), h)) / _l2_1d(phi1, h)
        rep.add(gamma=gam, ratio=max(best, anchor), random_sup=best, anchor_ratio=anchor)
    return rep


def _dirichlet_solve_parts(zeta, c, n):
    x = np.linspace(-c.r, c.r, n + 2)
    xi = x[1:-1]
    h = x[1] - x[0]
    A = dirichlet_matrix(zeta, c, n).astype(complex)
    lu = spla.splu(A)
    ode = assemble_H(zeta, c)
    return x, xi, h, A, lu, ode


def _homogeneous(zeta, c, n, parts):
    """Discrete solutions of H g = 0 with (g(-r), g(r)) = (1, 0) and (0, 1)."""
    x, xi, h, A, lu, ode = parts
    p = ode.p(xi)
    sols = []
    for left, right in ((1.0, 0.0), (0.0, 1.0)):
        b = np.zeros(n, dtype=complex)
        # boundary contributions of the second and first difference stencils
        b[0] -= left * (1 / h**2 - p[0] / (2 * h))
        b[-1] -= right * (1 / h**2 + p[-1] / (2 * h))
        g = np.concatenate([[left], lu.solve(b), [right]])
        sols.append(g)
    return sols


def bound_5_1_constant(c: OdeCoefficients, s: float, gamma_grid, n: int = 512, trials: int = 16,
                       seed: int = 0, singular_threshold: float = 1e-3) -> EstimateReport:
    """Smallest admissible constant in the weighted boundary estimate, per gamma.

    Three families per point: the homogeneous solution plane (boundary data
    only), interior data ``phi`` with zero boundary values, and divergence
    data ``d_x psi``. The interior families include the smallest singular
    vector of the Dirichlet matrix as a deterministic trial.
    """
    rep = EstimateReport("bound51", {"s": s, "n": n, "trials": trials},
                         "homogeneous plane (grid over data angle/phase) + random/extremal interior data", seed)
    ss = np.random.SeedSequence(seed)
    for gam, child in zip(gamma_grid, ss.spawn(len(gamma_grid))):
        gam = float(gam)
        zeta = s + 1j * gam
        br = _bracket(zeta)
        parts = _dirichlet_solve_parts(zeta, c, n)
        x, xi, h, A, lu, ode = parts
        D1 = diff1(n + 2, h).tolil()
        D1[0, :3] = np.array([-3, 4, -1]) / (2 * h)
        D1[-1, -3:] = np.array([1, -4, 3]) / (2 * h)
        D1 = D1.tocsr()

        def lhs(fv):
            return _l2_1d(fv, h) + _l2_1d(D1 @ fv, h) / br

        # (i) homogeneous plane
        g1, g2 = _homogeneous(zeta, c, n, parts)
        hom = 0.0
        for th in np.linspace(0, np.pi / 2, 33):
            for ch in np.linspace(0, 2 * np.pi, 16, endpoint=False):
                al, be = np.cos(th), np.sin(th) * np.exp(1j * ch)
                gv = al * g1 + be * g2
                rhs = br**-0.5 * (abs(al) + abs(be))
                hom = max(hom, lhs(gv) / rhs)
        # (ii) interior data
        rng = np.random.default_rng(child)
        phis = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(trials)]
        phis = [np.convolve(p_, np.ones(9) / 9, mode="same") for p_ in phis]
        # extremal direction: smallest right singular vector of A^-1 via a few inverse iterations
        v = rng.standard_normal(n) + 0j
        for _ in range(30):
            v = lu.solve(lu.solve(v), trans="H")
            v /= np.linalg.norm(v)
        phis.append(A @ v)
        phi_best = 0.0
        psi_best = 0.0
        for ph in phis:
            f_int = lu.solve(ph.astype(complex))
            fv = np.concatenate([[0], f_int, [0]])
            phi_best = max(phi_best, lhs(fv) / (br**-2 * _l2_1d(ph, h)))
            # psi data: H f = d_x psi, psi sampled on all nodes
            psi = np.concatenate([[0], ph, [0]])
            rhs_vec = (diff1(n + 2, h) @ psi)[1:-1]
            f2 = np.concatenate([[0], lu.solve(rhs_vec), [0]])
            psi_best = max(psi_best, lhs(f2) / (br**-1 * _l2_1d(psi, h)))
        sig = 1.0 / np.linalg.norm(lu.solve(v))
        singular = bool(sig / br**2 < singular_threshold)
        # anchor: homogeneous solution with f(-r) = 0, f(r) = 1
        anchor = lhs(g2) / br**-0.5
        rep.add(gamma=gam, ratio=max(hom, phi_best, psi_best), homogeneous=hom, interior_phi=phi_best,
                interior_psi=psi_best, anchor=anchor, sigma_min=sig,
                status="singular-expected" if singular else "ok")
    return rep


# ----------------------------------------------------------------------------
# shifted-line Mellin integrals on a log-t grid


def _log_ops(x, mgrid, s, c):
    """Closures for d_x, T' = t d_t + sign_s s, Lbar, L on (x, log-t) samples.

    ``t d_t`` is applied as ``t^(-1/2) d_y (t^(1/2) v) - v/2`` so the Fourier
    derivative acts on a function that decays at the small-t end.
    """
    a = c.constant_a
    h = x[1] - x[0]
    D1 = diff1(len(x), h)
    sq = np.sqrt(mgrid.t)

    def Tp(v):
        return mellin.log_derivative(sq * v, mgrid) / sq - 0.5 * v + c.sign_s * s * v

    def dx(v):
        return D1 @ v

    def Lbar(v):
        return dx(v) + 1j * a * Tp(v)

    def L(v):
        return dx(v) - 1j * a * Tp(v)

    return dx, Tp, Lbar, L


def _A_log(v, mgrid, achoice):
    if achoice == "zero":
        return np.zeros_like(v)
    if achoice == "t":
        return mgrid.t * v
    raise ValueError("log grids support achoice 'zero' or 't'")


def lemma5_weighted_integrals(u_fn: Callable, s: float, c: OdeCoefficients, achoice: str = "zero",
                              delta: float = 0.2, nx: int = 64, n_t: int = 2048, y_min: float = -60.0,
                              gamma_max: float | None = None, nt_linear: int = 64) -> EstimateReport:
    """Weighted shifted-line Mellin integrals of the decomposition
    ``model u = Phi + d_x Psi``.

    With the menu operators acting in t only, ``Phi = calL u - A u`` and
    ``Psi = -2 A u``. ``u_fn(X, T)`` must vanish for ``|t| >= delta`` and
    ``|x| >= r + delta``; only its ``t > 0`` half enters the Mellin side.
    """
    rep = EstimateReport("lemma5", {"s": s, "achoice": achoice, "delta": delta, "nx": nx, "n_t": n_t},
                         "caller-supplied u", None)
    y_max = float(np.log(delta))
    span = y_max - y_min
    if gamma_max is None:
        gamma_max = np.pi * (n_t - 1) / span
    mg = mellin.MellinGrid(float(np.exp(y_min)), delta, n_t, gamma_max,
                           int(np.ceil(2 * gamma_max / (np.pi / span))) + 1)
    L = c.r + delta
    x = np.linspace(-L, L, nx + 2)[1:-1]
    hx = x[1] - x[0]
    X, T = np.meshgrid(x, mg.t, indexing="ij")
    u = u_fn(X, T).astype(complex)
    if np.max(np.abs(u[:, -1])) > 1e-10 * max(np.max(np.abs(u)), 1e-300):
        raise ValueError("u is not supported in |t| < delta")
    dx, Tp, Lbar, Lop = _log_ops(x, mg, s, c)
    b1, b2, b3 = (b[:, None] for b in c.betas(x))
    Au = _A_log(u, mg, achoice)
    Lb_u, L_u = Lbar(u), Lop(u)
    calL_u = Lbar(L_u) + b1 * Lb_u + _A_log(Lb_u, mg, achoice) + b2 * L_u + _A_log(L_u, mg, achoice) + b3 * u + Au
    model_u = Lbar(L_u) + b1 * Lb_u + b2 * L_u + b3 * u
    Phi = calL_u - Au
    Psi = -2.0 * Au
    identity_defect = float(np.max(np.abs(model_u - (Phi + dx(Psi))))) / max(float(np.max(np.abs(model_u))), 1e-300)

    inI = np.abs(x) <= c.r
    gam = mg.gamma
    wg = np.full(len(gam), mg.d_gamma)
    wg[0] = wg[-1] = 0.5 * mg.d_gamma
    wx = hx

    def weighted(F, power):
        Fh = mellin.mellin_forward(F[inI], mg, offset=0.5, check=False).values
        wt = (1.0 + gam**2) ** (-power / 2.0)
        return float(wx * np.sum(np.abs(Fh) ** 2 * (wg * wt)) / (2 * np.pi))

    wt_t = np.full(mg.n_t, mg.h)
    wt_t[0] = wt_t[-1] = 0.5 * mg.h

    def direct(F):
        return float(wx * np.sum(np.abs(F[inI]) ** 2 * (wt_t * mg.t)))

    I_phi = weighted(Phi, 4)
    I_psi = weighted(Psi, 2)
    I_phi_w1 = weighted(Phi, 0)
    plancherel_gap = abs(I_phi_w1 - direct(Phi)) / direct(Phi) if direct(Phi) > 0 else 0.0
    A_part = weighted(Au, 4)

    # right-hand sides on a linear grid over the full W
    g = GridSpec(nx=nx, nt=nt_linear, r=c.r, delta=delta, t_kind="linear")
    Xl, Tl = g.mesh()
    ul = u_fn(Xl, Tl).astype(complex)
    norms = NormSuite(g)
    calL_lin = assemble_calL(s, c, g, achoice)
    B = norms.l2(calL_lin(ul)) + norms.hm1(ul) + norms.q_h1(ul)
    un = norms.l2(ul)
    Dx = sp.kron(diff1(g.nx, g.hx), sp.identity(g.nt), format="csr")
    dxu = norms.l2((Dx @ ul.reshape(-1)).reshape(g.shape))
    rhs_phi = delta**2 * un**2 + B**2
    rhs_psi = delta**2 * dxu**2 + B**2
    rep.add(part="phi", lhs=I_phi, rhs=rhs_phi, ratio=(I_phi / rhs_phi) if rhs_phi > 0 else None,
            weight_one=I_phi_w1, plancherel_gap=plancherel_gap, A_part=A_part,
            u_norm_sq=un**2, B=B, identity_defect=identity_defect)
    rep.add(part="psi", lhs=I_psi, rhs=rhs_psi, ratio=(I_psi / rhs_psi) if rhs_psi > 0 else None,
            dxu_norm_sq=dxu**2, B=B)
    return rep


# ----------------------------------------------------------------------------
# two-dimensional a priori constants on linear grids


class _Prop2Evaluator:
    def __init__(self, s, c, g, achoice="zero"):
        self.g = g
        self.norms = NormSuite(g)
        self.Lb = assemble_Lbar(s, c, g)
        self.L = assemble_L(s, c, g)
        self.calL = assemble_calL(s, c, g, achoice)

    def sides(self, u):
        n = self.norms
        lhs = n.l2(u) + n.l2(self.Lb(u)) + n.l2(self.L(u))
        rhs = n.l2(self.calL(u)) + n.hm1(u) + n.q_h1(u)
        return lhs, rhs

    def ratio(self, u):
        lhs, rhs = self.sides(u)
        return lhs / rhs if rhs > 0 else 0.0


def _packet_from(params, g):
    x0, t0, log_scale, tau0 = params
    L = g.r + g.margin
    x0 = float(np.clip(x0, -L, L))
    t0 = float(np.clip(t0, -g.delta, g.delta))
    return wave_packet(g, x0, t0, float(np.exp(log_scale)), float(tau0))


def prop2_constant(s: float, c: OdeCoefficients, g: GridSpec, trials: int = 32, seed: int = 0,
                   adversarial: bool = True, max_evals: int = 200, achoice: str = "zero") -> EstimateReport:
    """Empirical best constant ``C_hat(s)`` over random fields and an
    adversarially tuned wave packet (Nelder-Mead over centre, scale, tau)."""
    ev = _Prop2Evaluator(s, c, g, achoice)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    rep = EstimateReport("prop2", {"s": s, "nx": g.nx, "nt": g.nt, "delta": g.delta, "trials": trials},
                         "windowed band-limited Gaussian fields + Nelder-Mead wave packet", seed)
    best = 0.0
    best_meta = {}
    running = []
    for k in range(trials):
        u = random_field(g, rng)
        r_ = ev.ratio(u)
        if r_ > best:
            best, best_meta = r_, {"source": "random", "trial": k}
        running.append(best)
    if adversarial:
        tau_top = np.pi / g.ht / 2
        starts = [
            (0.0, 0.0, np.log(0.25 * g.delta), 0.5 * tau_top),
            (0.0, 0.0, np.log(0.5 * g.delta), 0.1 * tau_top),
            (0.0, 0.3 * g.delta, np.log(0.2 * g.delta), 0.25 * tau_top),
        ]
        per = max(1, max_evals // len(starts))
        for st in starts:
            res = minimize(lambda p: -ev.ratio(_packet_from(p, g)), np.array(st), method="Nelder-Mead",
                           options={"maxfev": per, "xatol": 1e-6, "fatol": 1e-10})
            val = -float(res.fun)
            if val > best:
                best = val
                best_meta = {"source": "packet", "x0": float(res.x[0]), "t0": float(res.x[1]),
                             "scale": float(np.exp(res.x[2])), "tau0": float(res.x[3])}
            running.append(best)
    rep.add(s=s, ratio=best, running_max=running, argmax=best_meta)
    return rep


def prop2_sweep(s_values, c: OdeCoefficients, g: GridSpec, trials: int = 32, seed: int = 0,
                adversarial: bool = True, max_evals: int = 200) -> EstimateReport:
    rep = EstimateReport("prop2", {"nx": g.nx, "nt": g.nt, "delta": g.delta, "trials": trials},
                         "windowed band-limited Gaussian fields + Nelder-Mead wave packet", seed)
    for s in s_values:
        one = prop2_constant(float(s), c, g, trials, seed, adversarial, max_evals)
        rep.records.extend(one.records)
    return rep


def discrete_extremal(s: float, c: OdeCoefficients, g: GridSpec, achoice: str = "zero") -> float:
    """Exact discrete supremum of ``||(u, Lbar u, L u)|| / ||(calL u, Lambda^-1 u, Lambda Q u)||``
    (stacked Euclidean norms) by a dense generalised eigenproblem.

    Only for small grids (``nx * nt <= 4096``). The sum-of-norms constant
    lies within a factor ``sqrt(3)`` of this value.
    """
    import scipy.linalg as la

    N = g.size
    if N > 4096:
        raise ValueError("discrete_extremal is limited to nx * nt <= 4096")
    ev = _Prop2Evaluator(s, c, g, achoice)
    P = 2
    xi = 2 * np.pi * np.fft.fftfreq(P * g.nx, g.hx)
    tau = 2 * np.pi * np.fft.fftfreq(P * g.nt, g.ht)
    XI, TAU = np.meshgrid(xi, tau, indexing="ij")
    m2 = 1.0 + XI**2 + TAU**2
    w2 = 1.0 / m2 + q_profile(TAU) ** 2 * m2
    G = np.zeros((N, N), dtype=complex)
    for j0 in range(0, N, 256):
        j1 = min(N, j0 + 256)
        k = j1 - j0
        R = np.zeros((P * g.nx, P * g.nt, k), dtype=complex)
        idx = np.arange(j0, j1)
        R[idx // g.nt, idx % g.nt, np.arange(k)] = 1.0
        F = np.fft.fft2(R, axes=(0, 1)) * w2[:, :, None]
        G[:, j0:j1] = np.fft.ifft2(F, axes=(0, 1))[: g.nx, : g.nt, :].reshape(N, k)
    Lb, L, C = ev.Lb.matrix, ev.L.matrix, ev.calL.matrix
    AA = (np.eye(N) + (Lb.conj().T @ Lb + L.conj().T @ L).toarray())
    BB = (C.conj().T @ C).toarray() + G
    mu = la.eigh(BB, AA, eigvals_only=True, subset_by_index=[0, 0])[0]
    return float(1.0 / np.sqrt(mu))


def lemma1_check(u, s: float, c: OdeCoefficients, g: GridSpec, report: EstimateReport | None = None,
                 label: str = "") -> EstimateReport:
    """``||d_x u|| / (||u|| + ||calL u|| + ||Q u||_1)``; 0/0 is reported as N/A."""
    norms = NormSuite(g)
    Dx = sp.kron(diff1(g.nx, g.hx), sp.identity(g.nt), format="csr")
    calL = assemble_calL(s, c, g)
    lhs = norms.l2((Dx @ np.asarray(u).reshape(-1)).reshape(g.shape))
    rhs = norms.l2(u) + norms.l2(calL(u)) + norms.q_h1(u)
    rep = report or EstimateReport("lemma1", {"s": s, "nx": g.nx, "nt": g.nt}, "caller-supplied u")
    if rhs == 0.0:
        rep.add(label=label, lhs=lhs, rhs=rhs, ratio=None, status="N/A")
    else:
        rep.add(label=label, lhs=lhs, rhs=rhs, ratio=lhs / rhs, status="ok")
    return rep
