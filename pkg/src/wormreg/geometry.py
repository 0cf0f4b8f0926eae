"""Worm-domain boundary geometry near the Levi-flat annulus.

Chart coordinates ``(x, theta, t)`` on the boundary::

    z2 = exp(x + i theta)
    z1 = exp(2ix) (exp(it) (1 - phi(2x)) - 1)

The CR field ``Lbar = d_x + i d_theta + gamma(x, t) d_t`` annihilates both
coordinate functions. Its coefficients depend on ``(x, t)`` only, so the
commutator ``[Lbar, L]`` is a multiple of ``d_t`` and the Levi coefficient
``nu`` vanishes identically.

The chart traces the level set ``|z1 + exp(i log|z2|^2)| = 1 - phi``, so the
domain profile seen by the defining function is ``phi * (2 - phi)`` (it
vanishes on the same interval and is positive wherever ``phi`` is).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhiProfile",
    "WormConfig",
    "ChartPoint",
    "LeviData",
    "ScanReport",
    "eval_phi",
    "defining_function",
    "boundary_chart",
    "gamma_coefficient",
    "gamma_derivatives",
    "alpha_coefficient",
    "cr_annihilation_residual",
    "levi_coefficients",
    "pseudoconvexity_scan",
]

# |t| below which alpha uses its Taylor series
ALPHA_TAYLOR_CUTOFF = 1e-3


@dataclass(frozen=True)
class PhiProfile:
    """``phi(u) = M exp(-sigma / (|u| - 2 r_flat)^2)`` for ``|u| > 2 r_flat``, else 0.

    ``M <= 0`` is accepted so negative controls can be built; such a profile
    fails :func:`pseudoconvexity_scan`.
    """

    M: float = 0.5
    sigma: float = 1.0

    def __post_init__(self):
        if not self.M < 1.0:
            raise ValueError("phi.M must be < 1 so that 1 - phi stays positive")
        if not self.sigma > 0.0:
            raise ValueError("phi.sigma must be positive")


@dataclass(frozen=True)
class WormConfig:
    r_flat: float = 0.5
    delta: float = 0.5
    phi: PhiProfile = field(default_factory=PhiProfile)

    def __post_init__(self):
        if not self.r_flat > 0:
            raise ValueError("r_flat must be positive")
        if not 0 < self.delta < np.pi:
            raise ValueError("delta must lie in (0, pi)")

    @property
    def x_max(self) -> float:
        """Half-width of the chart in x (``2|x| < r + delta`` with r = 2 r_flat)."""
        return self.r_flat + 0.5 * self.delta


@dataclass(frozen=True)
class ChartPoint:
    x: float
    theta: float
    t: float


@dataclass(frozen=True)
class LeviData:
    mu: float
    nu: float


@dataclass
class ScanReport:
    x: np.ndarray
    t: np.ndarray
    mu: np.ndarray
    tol: float
    flat_max_abs_mu_on_axis: float
    violations: list[tuple[float, float, float]]

    @property
    def mu_min(self) -> float:
        return float(self.mu.min())

    @property
    def argmin(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmin(self.mu), self.mu.shape)
        return float(self.x[i]), float(self.t[j])

    @property
    def ok(self) -> bool:
        return not self.violations and self.flat_max_abs_mu_on_axis == 0.0

    def summary(self) -> dict:
        xm, tm = self.argmin
        return {
            "mu_min": self.mu_min,
            "argmin_x": xm,
            "argmin_t": tm,
            "tol": self.tol,
            "violations": len(self.violations),
            "flat_axis_max_abs_mu": self.flat_max_abs_mu_on_axis,
            "ok": self.ok,
        }


def _phi_derivs(u, cfg: WormConfig):
    """Return phi, phi', phi'' at ``u`` (arrays broadcast)."""
    u = np.asarray(u, dtype=float)
    p = cfg.phi
    v = np.abs(u) - 2.0 * cfg.r_flat
    out = v > 0
    vs = np.where(out, v, 1.0)
    f = np.where(out, p.M * np.exp(-p.sigma / vs**2), 0.0)
    g = 2.0 * p.sigma / vs**3
    d1 = np.where(out, np.sign(u) * f * g, 0.0)
    d2 = np.where(out, f * (g**2 - 6.0 * p.sigma / vs**4), 0.0)
    return f, d1, d2


def eval_phi(u, cfg: WormConfig):
    """Profile value and first derivative; exactly zero on ``|u| <= 2 r_flat``."""
    f, d1, _ = _phi_derivs(u, cfg)
    if np.ndim(u) == 0:
        return float(f), float(d1)
    return f, d1


def defining_function(z1: complex, z2: complex, cfg: WormConfig) -> float:
    """Signed defining function, positive inside the worm domain."""
    if z2 == 0:
        raise ValueError("z2 must be nonzero")
    u = np.log(abs(z2) ** 2)
    f, _ = eval_phi(u, cfg)
    profile = f * (2.0 - f)
    return float(1.0 - profile - abs(z1 + np.exp(1j * u)) ** 2)


def boundary_chart(p: ChartPoint, cfg: WormConfig) -> tuple[complex, complex]:
    f, _ = eval_phi(2.0 * p.x, cfg)
    z2 = np.exp(p.x + 1j * p.theta)
    z1 = np.exp(2j * p.x) * (np.exp(1j * p.t) * (1.0 - f) - 1.0)
    return complex(z1), complex(z2)


def gamma_coefficient(x, t, cfg: WormConfig):
    """The ``d_t`` coefficient of the CR field."""
    f, d1, _ = _phi_derivs(2.0 * np.asarray(x, dtype=float), cfg)
    den = 1.0 - f
    if np.any(den <= 0):
        raise ValueError("1 - phi(2x) must be positive")
    return 2.0 * (np.exp(-1j * np.asarray(t)) - 1.0 + f - 1j * d1) / den


def gamma_derivatives(x, t, cfg: WormConfig):
    """Closed-form ``(d_x gamma, d_t gamma)``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    f, d1, d2 = _phi_derivs(2.0 * x, cfg)
    den = 1.0 - f
    num = np.exp(-1j * t) - 1.0 + f - 1j * d1
    # chain rule: d/dx phi(2x) = 2 phi'(2x)
    dnum = 2.0 * d1 - 2j * d2
    dden = -2.0 * d1
    gx = 2.0 * (dnum * den - num * dden) / den**2
    gt = -2j * np.exp(-1j * t) / den
    return gx, gt


def alpha_coefficient(t):
    """``alpha(t) = 2 (exp(-it) - 1) / (it)``, with alpha(0) = -2."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < ALPHA_TAYLOR_CUTOFF
    ts = np.where(small, 1.0, t)
    direct = 2.0 * (np.exp(-1j * ts) - 1.0) / (1j * ts)
    # -2 sum_{k>=0} (-it)^k / (k+1)!
    it = -1j * t
    series = -2.0 * (1.0 + it / 2.0 + it**2 / 6.0 + it**3 / 24.0 + it**4 / 120.0 + it**5 / 720.0)
    out = np.where(small, series, direct)
    if out.ndim == 0:
        return complex(out)
    return out


def cr_annihilation_residual(p: ChartPoint, h: float, cfg: WormConfig, gamma_shift: complex = 0.0) -> float:
    """max(|Lbar z1|, |Lbar z2|) with central differences of the chart.

    ``gamma_shift`` perturbs the field (negative control).
    """
    if not 0 < h < 0.1 * cfg.delta:
        raise ValueError("finite-difference step too large for the chart")
    if abs(p.t) + h >= cfg.delta or abs(p.x) + h >= cfg.x_max:
        raise ValueError("stencil leaves the chart")

    def chart(dx=0.0, dth=0.0, dt=0.0):
        return np.array(boundary_chart(ChartPoint(p.x + dx, p.theta + dth, p.t + dt), cfg))

    d_x = (chart(dx=h) - chart(dx=-h)) / (2 * h)
    d_th = (chart(dth=h) - chart(dth=-h)) / (2 * h)
    d_t = (chart(dt=h) - chart(dt=-h)) / (2 * h)
    g = gamma_coefficient(p.x, p.t, cfg) + gamma_shift
    lz = d_x + 1j * d_th + g * d_t
    return float(np.max(np.abs(lz)))


def levi_coefficients(x, t, cfg: WormConfig):
    """Levi data from ``[Lbar, L] = (Lbar conj(gamma) - L gamma) d_t = i mu d_t``."""
    g = gamma_coefficient(x, t, cfg)
    gx, gt = gamma_derivatives(x, t, cfg)
    mu = -2.0 * np.imag(gx) - 2.0 * np.imag(np.conj(g) * gt)
    if np.ndim(mu) == 0:
        return LeviData(mu=float(mu), nu=0.0)
    return mu, np.zeros_like(mu)


def pseudoconvexity_scan(cfg: WormConfig, nx: int = 101, nt: int = 101, tol: float = 1e-10,
                         x_extent: float | None = None) -> ScanReport:
    """Evaluate mu on a closed grid over the chart and report sign violations.

    ``x_extent`` restricts the scan to ``|x| <= x_extent`` (default: the
    open chart, sampled 1% inside its edge).
    """
    xe = 0.99 * cfg.x_max if x_extent is None else x_extent
    x = np.linspace(-xe, xe, nx)
    t = np.linspace(-0.99 * cfg.delta, 0.99 * cfg.delta, nt)
    if nt % 2:
        t[nt // 2] = 0.0
    X, T = np.meshgrid(x, t, indexing="ij")
    mu, _ = levi_coefficients(X, T, cfg)
    bad = np.argwhere(mu < -tol)
    violations = [(float(x[i]), float(t[j]), float(mu[i, j])) for i, j in bad]
    flat = np.abs(x) <= cfg.r_flat
    axis = t == 0.0
    flat_axis = float(np.max(np.abs(mu[np.ix_(flat, axis)]))) if axis.any() and flat.any() else 0.0
    return ScanReport(x=x, t=t, mu=mu, tol=tol, flat_max_abs_mu_on_axis=flat_axis, violations=violations)
