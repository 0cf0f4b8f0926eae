"""Grid discretisations of the model operators in (x, t).

With a real constant ``a`` and ``T = t d_t``::

    Lbar = d_x + i a (T + sign_s * s) + P(x, t) d_t
    L    = d_x - i a (T + sign_s * s) + conj(P) d_t
    calL = Lbar L + (beta1 + A) Lbar + (beta2 + A) L + (beta3 + A)

``P`` is an optional perturbation divisible by ``t^2``. ``A`` is taken from a
small menu of order-zero operators whose principal symbol vanishes on the
segment ``t = 0``: zero, multiplication by ``t``, and ``t`` composed with a
fixed Fourier multiplier in tau.

Two t-grids are supported. On a linear grid over ``(-delta, delta)`` every
derivative is a second-order centred difference. On a log grid over
``(t_min, t_max)`` the operator ``T`` is the centred difference in
``y = log t``, which keeps it constant-coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "OdeCoefficients",
    "GridSpec",
    "DiscreteOperator",
    "ACHOICES",
    "diff1",
    "diff2",
    "assemble_Lbar",
    "assemble_L",
    "assemble_calL",
    "assemble_A",
    "apply_model_log",
    "lambda_conjugation_symbol",
    "q_profile",
    "QCutoff",
    "build_Q_cutoff",
    "apply_fourier_multiplier",
]

ACHOICES = ("zero", "t", "t_smooth")


@dataclass(frozen=True)
class OdeCoefficients:
    """Coefficients shared by the ODE family and the model operators.

    ``a`` is a nonzero real constant or a callable ``a(x)`` (then ``da`` must
    be supplied); the ``beta_j`` are constants or callables of x.
    """

    a: float | Callable = 1.0
    beta1: float | Callable = 0.0
    beta2: float | Callable = 0.0
    beta3: float | Callable = 0.0
    r: float = 1.0
    sign_s: int = 1
    da: Callable | None = None

    def __post_init__(self):
        if self.sign_s not in (1, -1):
            raise ValueError("sign_s must be +1 or -1")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if callable(self.a):
            if self.da is None:
                raise ValueError("variable a(x) needs its derivative da")
        elif self.a == 0:
            raise ValueError("a must be nonzero")

    @property
    def constant_a(self) -> float:
        if callable(self.a):
            raise ValueError("model operators need a constant a")
        return float(self.a)

    def _eval(self, v, x):
        x = np.asarray(x, dtype=float)
        return v(x) if callable(v) else np.full(x.shape, float(v))

    def a_of(self, x):
        return self._eval(self.a, x)

    def da_of(self, x):
        if callable(self.a):
            return self.da(np.asarray(x, dtype=float))
        return np.zeros(np.shape(x))

    def betas(self, x):
        return tuple(self._eval(b, x) for b in (self.beta1, self.beta2, self.beta3))

    @property
    def is_model(self) -> bool:
        """Constant a and vanishing betas (closed-form shooting solution)."""
        return (not callable(self.a)) and all(
            (not callable(b)) and b == 0 for b in (self.beta1, self.beta2, self.beta3)
        )


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid of interior nodes; samples vanish outside (support in W).

    ``t_kind="linear"``: t in (-delta, delta). ``t_kind="log"``: t in
    ``(t_min, t_max)``, log-spaced, endpoints included.
    """

    nx: int = 64
    nt: int = 64
    r: float = 1.0
    delta: float = 0.2
    x_margin: float | None = None
    t_kind: str = "linear"
    t_min: float = 1e-3
    t_max: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.nt < 8:
            raise ValueError("grid too coarse: nx and nt must be >= 8")
        if self.t_kind not in ("linear", "log"):
            raise ValueError("t_kind must be 'linear' or 'log'")
        if self.t_kind == "log" and not 0 < self.t_min < self.t_max:
            raise ValueError("log grid needs 0 < t_min < t_max")

    @property
    def margin(self) -> float:
        return self.delta if self.x_margin is None else self.x_margin

    @property
    def x(self) -> np.ndarray:
        L = self.r + self.margin
        return np.linspace(-L, L, self.nx + 2)[1:-1]

    @property
    def hx(self) -> float:
        return 2 * (self.r + self.margin) / (self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        if self.t_kind == "log":
            return np.exp(np.linspace(np.log(self.t_min), np.log(self.t_max), self.nt))
        return np.linspace(-self.delta, self.delta, self.nt + 2)[1:-1]

    @property
    def ht(self) -> float:
        if self.t_kind == "log":
            return float(np.log(self.t_max / self.t_min) / (self.nt - 1))
        return 2 * self.delta / (self.nt + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.nt)

    @property
    def size(self) -> int:
        return self.nx * self.nt

    def mesh(self):
        return np.meshgrid(self.x, self.t, indexing="ij")

    def cell(self) -> float:
        """Quadrature weight for discrete L2 norms (linear grids)."""
        return self.hx * self.ht


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse operator on ``grid`` samples flattened in C order (x major)."""

    matrix: sp.csr_matrix
    grid: GridSpec
    order: int
    bc: str = "support-in-W"
    label: str = ""

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        return (self.matrix @ u.reshape(-1)).reshape(self.grid.shape)

    __call__ = apply

    def adjoint(self) -> "DiscreteOperator":
        return DiscreteOperator(self.matrix.conj().T.tocsr(), self.grid, self.order, self.bc, self.label + "*")

    def __add__(self, other: "DiscreteOperator") -> "DiscreteOperator":
        if other.grid != self.grid:
            raise ValueError("incompatible grids")
        return DiscreteOperator((self.matrix + other.matrix).tocsr(), self.grid, max(self.order, other.order), self.bc)

    def __matmul__(self, other: "DiscreteOperator") -> "DiscreteOperator":
        if other.grid != self.grid:
            raise ValueError("incompatible grids")
        return DiscreteOperator((self.matrix @ other.matrix).tocsr(), self.grid, self.order + other.order, self.bc)

    def write_coo(self, path) -> None:
        """Text export: one ``row col re im`` line per stored entry."""
        m = self.matrix.tocoo()
        order = np.lexsort((m.col, m.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# shape {m.shape[0]} {m.shape[1]} order {self.order} bc {self.bc}\n")
            for k in order:
                v = complex(m.data[k])
                fh.write(f"{m.row[k]} {m.col[k]} {v.real:.17g} {v.imag:.17g}\n")


def diff1(n: int, h: float) -> sp.csr_matrix:
    """Centred first difference with zero extension at both ends."""
    e = np.ones(n - 1)
    return sp.diags([-e, e], [-1, 1], shape=(n, n), format="csr") / (2 * h)


def diff2(n: int, h: float) -> sp.csr_matrix:
    e = np.ones(n - 1)
    return sp.diags([e, -2 * np.ones(n), e], [-1, 0, 1], shape=(n, n), format="csr") / h**2


def _t_generator(g: GridSpec) -> sp.csr_matrix:
    """``t d_t`` on the t axis."""
    if g.t_kind == "log":
        return diff1(g.nt, g.ht)
    return (sp.diags(g.t) @ diff1(g.nt, g.ht)).tocsr()


def _parts(g: GridSpec):
    Ix = sp.identity(g.nx, format="csr")
    Dx = sp.kron(diff1(g.nx, g.hx), sp.identity(g.nt), format="csr")
    T = sp.kron(Ix, _t_generator(g), format="csr")
    return Dx, T


def _perturbation(g: GridSpec, pert):
    if pert is None:
        return None
    X, Tm = g.mesh()
    coef = np.asarray(pert(X, Tm), dtype=complex).reshape(-1)
    if g.t_kind == "log":
        # d_t = t^-1 d_y
        Dt = sp.kron(sp.identity(g.nx), sp.diags(1.0 / g.t) @ diff1(g.nt, g.ht), format="csr")
    else:
        Dt = sp.kron(sp.identity(g.nx), diff1(g.nt, g.ht), format="csr")
    return coef, Dt


def assemble_Lbar(s: float, c: OdeCoefficients, g: GridSpec, perturbation: Callable | None = None) -> DiscreteOperator:
    """``d_x + i a (t d_t + sign_s s)`` plus an optional ``P(x,t) d_t``.

    ``perturbation`` is ``P(X, T)`` on mesh arrays and should be divisible
    by ``t^2``.
    """
    a = c.constant_a
    Dx, T = _parts(g)
    shift = c.sign_s * s * sp.identity(g.size, format="csr")
    M = Dx + 1j * a * (T + shift)
    p = _perturbation(g, perturbation)
    if p is not None:
        M = M + sp.diags(p[0]) @ p[1]
    return DiscreteOperator(M.tocsr(), g, 1, label="Lbar")


def assemble_L(s: float, c: OdeCoefficients, g: GridSpec, perturbation: Callable | None = None) -> DiscreteOperator:
    a = c.constant_a
    Dx, T = _parts(g)
    shift = c.sign_s * s * sp.identity(g.size, format="csr")
    M = Dx - 1j * a * (T + shift)
    p = _perturbation(g, perturbation)
    if p is not None:
        M = M + sp.diags(np.conj(p[0])) @ p[1]
    return DiscreteOperator(M.tocsr(), g, 1, label="L")


def _smooth_multiplier(tau):
    """Fixed order-zero symbol used by the ``t_smooth`` menu entry."""
    return tau**2 / (1.0 + tau**2)


def _t_multiplier_matrix(g: GridSpec, symbol) -> np.ndarray:
    """Dense nt x nt matrix of a tau-multiplier on the zero-padded t axis."""
    n = g.nt
    P = 2 * n
    tau = 2 * np.pi * np.fft.fftfreq(P, g.ht)
    E = np.zeros((P, n))
    E[:n, :n] = np.eye(n)
    return np.fft.ifft(symbol(tau)[:, None] * np.fft.fft(E, axis=0), axis=0)[:n, :]


def assemble_A(g: GridSpec, achoice: str = "zero") -> DiscreteOperator:
    """Order-zero operator from the menu, symbol vanishing at t = 0."""
    if achoice not in ACHOICES:
        raise ValueError(f"achoice must be one of {ACHOICES}")
    if achoice == "zero":
        M = sp.csr_matrix((g.size, g.size), dtype=complex)
    elif achoice == "t":
        M = sp.kron(sp.identity(g.nx), sp.diags(g.t), format="csr").astype(complex)
    else:
        if g.t_kind != "linear":
            raise ValueError("t_smooth needs a linear t grid")
        Mt = np.diag(g.t) @ _t_multiplier_matrix(g, _smooth_multiplier)
        M = sp.kron(sp.identity(g.nx), sp.csr_matrix(Mt), format="csr")
    return DiscreteOperator(M, g, 0, label=f"A[{achoice}]")


def assemble_calL(s: float, c: OdeCoefficients, g: GridSpec, achoice: str = "zero",
                  perturbation: Callable | None = None) -> DiscreteOperator:
    Lb = assemble_Lbar(s, c, g, perturbation)
    L = assemble_L(s, c, g, perturbation)
    A = assemble_A(g, achoice).matrix
    X, _ = g.mesh()
    b1, b2, b3 = (sp.diags(b.reshape(-1).astype(complex)) for b in c.betas(X))
    M = Lb.matrix @ L.matrix + (b1 + A) @ Lb.matrix + (b2 + A) @ L.matrix + b3 + A
    return DiscreteOperator(M.tocsr(), g, 2, label=f"calL[s={s}]")


def apply_model_log(u: np.ndarray, x: np.ndarray, mgrid, s: float, c: OdeCoefficients) -> np.ndarray:
    """Pure model operator on ``u[x, t]`` sampled on a Mellin grid.

    ``t d_t`` is applied by Fourier differentiation in ``log t``; x
    derivatives are centred differences on the uniform ``x`` nodes with
    zero extension. Expanded form for constant ``a``::

        d_x^2 + a^2 T'^2 + (b1 + b2) d_x + i a (b1 - b2) T' + b3,   T' = t d_t + sign_s s
    """
    from .mellin import log_derivative

    a = c.constant_a
    h = x[1] - x[0]
    D1 = diff1(len(x), h)
    D2 = diff2(len(x), h)
    b1, b2, b3 = c.betas(x)
    Tp = lambda v: log_derivative(v, mgrid) + c.sign_s * s * v  # noqa: E731
    Tu = Tp(u)
    out = D2 @ u + a**2 * Tp(Tu)
    out = out + (b1 + b2)[:, None] * (D1 @ u) + 1j * a * (b1 - b2)[:, None] * Tu + b3[:, None] * u
    return out


def lambda_conjugation_symbol(s: float, tau):
    """Symbol of ``Lambda^-s [t, Lambda^s] d_t`` for ``m(tau) = (1 + tau^2)^(1/2)``.

    ``[t, Lambda^s]`` has symbol ``i d_tau(m^s) = i s tau m^(s-2)``; composing
    with ``d_t`` (symbol ``i tau``) and ``m^-s`` leaves ``-s tau^2 / (1+tau^2)``.
    """
    tau = np.asarray(tau, dtype=float)
    val = -s * tau**2 / (1.0 + tau**2)
    return float(val) if val.ndim == 0 else val


def q_profile(tau):
    """1 for tau <= -1, 0 for tau >= -1/2, quintic smoothstep in between."""
    tau = np.asarray(tau, dtype=float)
    z = np.clip((tau + 1.0) / 0.5, 0.0, 1.0)
    return 1.0 - z**3 * (10.0 - 15.0 * z + 6.0 * z**2)


def apply_fourier_multiplier(u: np.ndarray, hx: float, ht: float, symbol, pad: int = 2) -> np.ndarray:
    """Apply ``symbol(XI, TAU)`` on a zero-padded periodic box; returns the full padded field."""
    nx, nt = u.shape
    U = np.zeros((pad * nx, pad * nt), dtype=complex)
    U[:nx, :nt] = u
    xi = 2 * np.pi * np.fft.fftfreq(pad * nx, hx)
    tau = 2 * np.pi * np.fft.fftfreq(pad * nt, ht)
    XI, TAU = np.meshgrid(xi, tau, indexing="ij")
    return np.fft.ifft2(np.fft.fft2(U) * symbol(XI, TAU))


@dataclass(frozen=True)
class QCutoff:
    """Microlocal cutoff ``q(tau)`` acting on the padded periodic extension."""

    grid: GridSpec
    pad: int = 2
    order: int = 0
    label: str = field(default="Q")

    def apply(self, u: np.ndarray, padded: bool = False) -> np.ndarray:
        out = apply_fourier_multiplier(u, self.grid.hx, self.grid.ht, lambda XI, TAU: q_profile(TAU), self.pad)
        if padded:
            return out
        return out[: self.grid.nx, : self.grid.nt]

    __call__ = apply


def build_Q_cutoff(g: GridSpec, pad: int = 2) -> QCutoff:
    if g.t_kind != "linear":
        raise ValueError("Q needs a linear (periodically extendable) t grid")
    return QCutoff(g, pad)
