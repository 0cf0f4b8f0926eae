"""Partial Mellin transform in t on log-spaced grids.

Forward transform, evaluated on the horizontal line ``Im = offset``::

    F(gamma + i*offset) = int_0^inf f(t) t^(-i gamma + offset) dt/t

Inversion uses ``f(t) = (1/2pi) int F(gamma) t^(i gamma) d gamma``; the
Plancherel constant for the dt/t measure is also ``1/2pi``. Both integrals are
trapezoid sums: in ``y = log t`` for the forward direction, in gamma for the
inverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MellinGrid",
    "MellinSample",
    "taper",
    "mellin_forward",
    "mellin_inverse",
    "log_derivative",
    "plancherel_defect",
    "tdt_symbol_defect",
    "shift_identity_defect",
    "conjugation_defect",
    "refinement_ratios",
]

DECAY_TOL = 1e-8


@dataclass(frozen=True)
class MellinGrid:
    """Uniform grid in ``log t`` paired with a uniform gamma grid.

    The gamma spacing must satisfy ``d_gamma <= pi / (log t_max - log t_min)``
    so that inversion does not alias.
    """

    t_min: float = float(np.exp(-40.0))
    t_max: float = float(np.exp(5.0))
    n_t: int = 1024
    gamma_max: float = 40.0
    n_gamma: int = 1201

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        if self.n_t < 32 or self.n_gamma < 32:
            raise ValueError("node counts must be >= 32")
        if self.d_gamma > np.pi / self.log_span * (1 + 1e-12):
            raise ValueError(
                f"gamma grid too sparse: d_gamma={self.d_gamma:.4g} > pi/log-span={np.pi / self.log_span:.4g}"
            )

    @classmethod
    def for_span(cls, y_min: float, y_max: float, n_t: int, gamma_max: float | None = None) -> "MellinGrid":
        """Grid on ``log t in [y_min, y_max]`` with gamma range tied to the t resolution."""
        h = (y_max - y_min) / (n_t - 1)
        gmax = min(40.0, 0.9 * np.pi / h) if gamma_max is None else gamma_max
        n_gamma = int(np.ceil(2 * gmax / (np.pi / (y_max - y_min)))) + 1
        return cls(float(np.exp(y_min)), float(np.exp(y_max)), n_t, float(gmax), max(n_gamma, 32))

    @property
    def log_span(self) -> float:
        return float(np.log(self.t_max) - np.log(self.t_min))

    @property
    def y(self) -> np.ndarray:
        return np.linspace(np.log(self.t_min), np.log(self.t_max), self.n_t)

    @property
    def t(self) -> np.ndarray:
        return np.exp(self.y)

    @property
    def h(self) -> float:
        return self.log_span / (self.n_t - 1)

    @property
    def gamma(self) -> np.ndarray:
        return np.linspace(-self.gamma_max, self.gamma_max, self.n_gamma)

    @property
    def d_gamma(self) -> float:
        return 2 * self.gamma_max / (self.n_gamma - 1)


@dataclass
class MellinSample:
    values: np.ndarray
    gamma: np.ndarray
    offset: float
    grid: MellinGrid
    quad_error: float = 0.0

    def to_rows(self):
        return [(float(g), float(v.real), float(v.imag)) for g, v in zip(self.gamma, self.values)]


def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def taper(grid: MellinGrid) -> np.ndarray:
    """Cosine taper over one decade of t at each end of the grid."""
    y = grid.y
    dec = np.log(10.0)
    w = np.ones_like(y)
    lo = y < y[0] + dec
    hi = y > y[-1] - dec
    w[lo] = 0.5 - 0.5 * np.cos(np.pi * (y[lo] - y[0]) / dec)
    w[hi] = 0.5 - 0.5 * np.cos(np.pi * (y[-1] - y[hi]) / dec)
    return w


def _check_decay(f: np.ndarray, offset: float, grid: MellinGrid):
    g = np.abs(f) * np.exp(offset * grid.y)
    scale = g.max()
    if scale > 0 and max(g[0], g[-1]) > DECAY_TOL * scale:
        raise ValueError("input does not decay at the grid ends; pass window=True")


def _kernel(gamma: np.ndarray, grid: MellinGrid, offset: float) -> np.ndarray:
    y = grid.y
    return np.exp(np.outer(-1j * gamma, y) + offset * y) * _trap_weights(grid.n_t, grid.h)


def mellin_forward(f, grid: MellinGrid, offset: float = 0.0, window: bool = False,
                   gamma: np.ndarray | None = None, check: bool = True) -> MellinSample:
    """Trapezoid-in-log-t Mellin transform of samples ``f`` taken on ``grid.t``.

    The reported ``quad_error`` is the sup difference against the same sum on
    every other node.
    """
    f = np.asarray(f)
    if f.shape[-1] != grid.n_t:
        raise ValueError("samples do not match the grid")
    if window:
        f = f * taper(grid)
    elif check:
        _check_decay(f if f.ndim == 1 else np.abs(f).max(axis=0), offset, grid)
    gam = grid.gamma if gamma is None else np.asarray(gamma, dtype=float)
    K = _kernel(gam, grid, offset)
    vals = f @ K.T
    err = 0.0
    if grid.n_t % 2 == 1 and f.ndim == 1:
        y2 = grid.y[::2]
        K2 = np.exp(np.outer(-1j * gam, y2) + offset * y2) * _trap_weights(len(y2), 2 * grid.h)
        err = float(np.max(np.abs(f[::2] @ K2.T - vals)))
    return MellinSample(values=vals, gamma=gam, offset=offset, grid=grid, quad_error=err)


def mellin_inverse(F: MellinSample, t: np.ndarray | None = None) -> np.ndarray:
    """Reconstruct samples on ``F.grid.t`` (or ``t``) from a transform on a gamma grid."""
    g = F.gamma
    dg = np.diff(g)
    if len(g) < 2 or not np.allclose(dg, dg[0]):
        raise ValueError("inverse needs a uniform gamma grid")
    if dg[0] > np.pi / F.grid.log_span * (1 + 1e-12):
        raise ValueError("gamma grid too sparse for the log-t span")
    tt = F.grid.t if t is None else np.asarray(t, dtype=float)
    y = np.log(tt)
    w = _trap_weights(len(g), dg[0])
    K = np.exp(np.outer(y, 1j * g)) * w
    out = (F.values @ K.T) / (2 * np.pi)
    return out * np.exp(-F.offset * y)


def log_derivative(f, grid: MellinGrid) -> np.ndarray:
    """``t d/dt f`` = ``d/dy f`` by Fourier differentiation in ``y = log t``.

    Assumes ``f`` has decayed at both ends of the grid (periodic extension).
    """
    f = np.asarray(f)
    n = grid.n_t
    k = 2 * np.pi * np.fft.fftfreq(n, grid.h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(f, axis=-1), axis=-1)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    nb = np.linalg.norm(b)
    if nb == 0:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / nb)


def plancherel_defect(f, grid: MellinGrid) -> dict[str, float]:
    """Relative Plancherel defects for ``dt/t`` (line 0) and ``dt`` (line 1/2)."""
    f = np.asarray(f)
    wt = _trap_weights(grid.n_t, grid.h)
    wg = _trap_weights(grid.n_gamma, grid.d_gamma)
    out = {}
    for name, off, lhs in (
        ("dt_over_t", 0.0, np.sum(wt * np.abs(f) ** 2)),
        ("dt", 0.5, np.sum(wt * grid.t * np.abs(f) ** 2)),
    ):
        F = mellin_forward(f, grid, offset=off)
        rhs = np.sum(wg * np.abs(F.values) ** 2) / (2 * np.pi)
        out[name] = 0.0 if lhs == 0 else float(abs(lhs - rhs) / lhs)
    return out


def tdt_symbol_defect(f, grid: MellinGrid) -> float:
    """``||(t d_t f)^ - i gamma f^|| / ||f^||`` over the gamma nodes."""
    f = np.asarray(f)
    F = mellin_forward(f, grid)
    D = mellin_forward(log_derivative(f, grid), grid, check=False)
    return _rel(D.values, 1j * F.gamma * F.values) if np.any(F.values) else float(np.linalg.norm(D.values))


def shift_identity_defect(f, grid: MellinGrid) -> float:
    """Sup relative gap between ``(t^(1/2) f)^(gamma)`` and ``f^(gamma + i/2)``."""
    f = np.asarray(f)
    a = mellin_forward(np.sqrt(grid.t) * f, grid, offset=0.0).values
    b = mellin_forward(f, grid, offset=0.5).values
    scale = np.max(np.abs(b))
    if scale == 0:
        return float(np.max(np.abs(a)))
    return float(np.max(np.abs(a - b)) / scale)


def conjugation_defect(fx, gt, x, s: float, coeffs, grid: MellinGrid, offset: float = 0.0,
                       rel_floor: float = 1e-6) -> float:
    """Compare the transform of the model operator applied to ``u = fx (x) gt``
    with ``H_{s + i gamma}`` applied to the transform of ``u``.

    Both sides share the x-discretisation (second-order differences on ``x``
    with Dirichlet ends), so the defect isolates the t <-> gamma exchange.
    ``fx`` may be a 2-D array of separable terms summed over axis 0 pairs
    with ``gt``. Gamma nodes where ``||u^||`` is below ``rel_floor`` times its
    maximum are skipped: there both sides are pure roundoff.
    """
    from .operators import apply_model_log
    from .shooting import apply_H

    fx = np.atleast_2d(fx)
    gt = np.atleast_2d(gt)
    u = np.einsum("kx,kt->xt", fx, gt)
    Lu = apply_model_log(u, x, grid, s, coeffs)
    lhs = mellin_forward(Lu, grid, offset=offset).values  # (nx, ngamma)
    uhat = mellin_forward(u, grid, offset=offset).values
    norms = np.linalg.norm(uhat, axis=0)
    floor = rel_floor * norms.max()
    worst = 0.0
    for j, g in enumerate(grid.gamma):
        zeta = s + 1j * (g + 1j * offset)
        denom = norms[j]
        if denom <= floor or denom < 1e-300:
            continue
        rhs = apply_H(uhat[:, j], x, zeta, coeffs)
        worst = max(worst, float(np.linalg.norm(lhs[:, j] - rhs) / denom))
    return worst


def refinement_ratios(values, floor: float = 1e-13) -> list[float]:
    """Successive ratios ``coarse / fine``; pairs already under ``floor`` give inf."""
    out = []
    for a, b in zip(values[:-1], values[1:]):
        out.append(np.inf if b <= floor else a / b)
    return out
