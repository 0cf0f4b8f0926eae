"""Shooting for the ODE family H_zeta and argument-principle zero location.

``H_zeta = (d + i zeta a)(d - i zeta a) + b1 (d + i zeta a) + b2 (d - i zeta a) + b3``
expands to ``f'' + p f' + q f`` with::

    p = b1 + b2
    q = zeta^2 a^2 - i zeta a' + i zeta a (b1 - b2) + b3

``Phi(zeta) = phi_zeta(r)``, where ``phi_zeta`` solves ``H_zeta phi = 0`` with
``phi(-r) = 0, phi'(-r) = 1``, is entire in zeta and vanishes exactly on the
exceptional set. ``Phi'`` comes from the variational system integrated
alongside.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import OdeCoefficients, diff1, diff2

log = logging.getLogger(__name__)

__all__ = [
    "OdeData",
    "ShootingResult",
    "ShootingError",
    "ZeroCertificate",
    "ExceptionalExponents",
    "assemble_H",
    "apply_H",
    "apply_H_factored",
    "shoot",
    "shoot_many",
    "count_zeros",
    "locate_zeros",
    "exceptional_sobolev",
    "dirichlet_matrix",
    "dirichlet_sigma_min",
    "SigmaMin",
]


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class OdeData:
    """``f'' + p(x) f' + q(x) f`` with ``dq = d q / d zeta``."""

    zeta: complex
    p: callable
    q: callable
    dq: callable


def assemble_H(zeta: complex, c: OdeCoefficients) -> OdeData:
    zeta = complex(zeta)

    def p(x):
        b1, b2, _ = c.betas(x)
        return b1 + b2

    def q(x):
        a, da = c.a_of(x), c.da_of(x)
        b1, b2, b3 = c.betas(x)
        return zeta**2 * a**2 - 1j * zeta * da + 1j * zeta * a * (b1 - b2) + b3

    def dq(x):
        a, da = c.a_of(x), c.da_of(x)
        b1, b2, _ = c.betas(x)
        return 2 * zeta * a**2 - 1j * da + 1j * a * (b1 - b2)

    return OdeData(zeta, p, q, dq)


def apply_H(f, x, zeta: complex, c: OdeCoefficients) -> np.ndarray:
    """Expanded form on uniform interior nodes ``x`` (zero extension)."""
    f = np.asarray(f)
    h = x[1] - x[0]
    ode = assemble_H(zeta, c)
    return diff2(len(x), h) @ f + ode.p(x) * (diff1(len(x), h) @ f) + ode.q(x) * f


def apply_H_factored(f, df, d2f, x, zeta: complex, c: OdeCoefficients) -> np.ndarray:
    """Factored form, given exact derivatives of ``f`` (test oracle)."""
    a, da = c.a_of(x), c.da_of(x)
    b1, b2, b3 = c.betas(x)
    iz = 1j * zeta
    g = df - iz * a * f  # (d - i zeta a) f
    dg = d2f - iz * (da * f + a * df)
    return dg + iz * a * g + b1 * (df + iz * a * f) + b2 * g + b3 * f


@dataclass
class ShootingResult:
    phi_end: complex
    dphi_end: complex
    dzeta_phi_end: complex
    steps: int = 0
    rejected: int = 0
    err_estimate: float = 0.0


# Dormand-Prince 5(4)
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rhs(x, Y, zetas, c):
    """Y rows: phi, phi', dphi/dzeta, dphi'/dzeta; columns: zeta batch."""
    xa = np.array([x])
    b1, b2, b3 = (v[0] for v in c.betas(xa))
    a, da = c.a_of(xa)[0], c.da_of(xa)[0]
    p = b1 + b2
    q = zetas**2 * a**2 - 1j * zetas * da + 1j * zetas * a * (b1 - b2) + b3
    dq = 2 * zetas * a**2 - 1j * da + 1j * a * (b1 - b2)
    out = np.empty_like(Y)
    out[0] = Y[1]
    out[1] = -p * Y[1] - q * Y[0]
    out[2] = Y[3]
    out[3] = -p * Y[3] - q * Y[2] - dq * Y[0]
    return out


def shoot_many(zetas, c: OdeCoefficients, tol: float = 1e-11, max_steps: int = 200000):
    """Integrate the extended system for a batch of zeta values at once.

    Step control uses the largest scaled error over the batch, so every
    member meets ``tol``. Returns arrays ``(Phi, Phi_x, dPhi/dzeta)`` and a
    stats dict.
    """
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-14, 1e-6]")
    zetas = np.atleast_1d(np.asarray(zetas, dtype=complex))
    Y = np.zeros((4, zetas.size), dtype=complex)
    Y[1] = 1.0
    x0, x1 = -c.r, c.r
    x = x0
    scale0 = float(np.max(np.abs(zetas))) * float(np.max(np.abs(c.a_of(np.linspace(x0, x1, 5)))))
    h = min(0.05, 0.1 / (1.0 + scale0)) * (x1 - x0)
    K = np.empty((7,) + Y.shape, dtype=complex)
    steps = rejected = 0
    err_acc = 0.0
    K[0] = _rhs(x, Y, zetas, c)
    while x < x1:
        if steps + rejected > max_steps:
            raise ShootingError(f"step budget exhausted at x={x:.6g}")
        last = h >= x1 - x
        if last:
            h = x1 - x
        elif h < 1e-14 * max(1.0, abs(x)):
            raise ShootingError(f"step size underflow at x={x:.6g}")
        for i in range(1, 7):
            Yi = Y + h * np.tensordot(_A[i], K[:i], axes=(0, 0))
            K[i] = _rhs(x + _C[i] * h, Yi, zetas, c)
        Ynew = Y + h * np.tensordot(_B, K, axes=(0, 0))
        errv = h * np.tensordot(_E, K, axes=(0, 0))
        sc = tol * (1.0 + np.maximum(np.abs(Y), np.abs(Ynew)))
        err = float(np.max(np.abs(errv) / sc))
        if err <= 1.0:
            x = x1 if last else x + h
            Y = Ynew
            K[0] = K[6]  # FSAL
            steps += 1
            err_acc += err * tol
        else:
            rejected += 1
        fac = 0.9 * (1.0 / max(err, 1e-10)) ** 0.2
        h *= min(5.0, max(0.2, fac))
    stats = {"steps": steps, "rejected": rejected, "err_estimate": err_acc}
    return Y[0], Y[1], Y[2], stats


def shoot(zeta: complex, c: OdeCoefficients, tol: float = 1e-11) -> ShootingResult:
    phi, dphi, dz, st = shoot_many([zeta], c, tol)
    return ShootingResult(complex(phi[0]), complex(dphi[0]), complex(dz[0]), st["steps"], st["rejected"], st["err_estimate"])


# ----------------------------------------------------------------------------
# argument principle

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class Box:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("box must have positive width and height")

    @property
    def corners(self):
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.re_max - self.re_min, self.im_max - self.im_min))

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= z.real <= self.re_max + pad) and (self.im_min - pad <= z.imag <= self.im_max + pad)

    def grow(self, eps: float) -> "Box":
        return Box(self.re_min - eps, self.re_max + eps, self.im_min - eps, self.im_max + eps)

    def as_dict(self):
        return {"re_min": self.re_min, "re_max": self.re_max, "im_min": self.im_min, "im_max": self.im_max}


def _as_box(box) -> Box:
    if isinstance(box, Box):
        return box
    if isinstance(box, dict):
        return Box(**box)
    return Box(*box)


class EdgeError(RuntimeError):
    """The contour passes too close to a zero for certified rounding."""


def _winding(box: Box, c: OdeCoefficients, tol: float, n0: int = 32, max_n: int = 1024) -> tuple[int, float, float]:
    """Returns (count, quadrature value, min |Phi| on nodes)."""
    prev = None
    n = n0
    corners = box.corners
    while n <= max_n:
        xg, wg = _gauss(n)
        zs, ws = [], []
        for k in range(4):
            z0, z1 = corners[k], corners[(k + 1) % 4]
            zs.append(0.5 * (z0 + z1) + 0.5 * (z1 - z0) * xg)
            ws.append(0.5 * (z1 - z0) * wg)
        zs = np.concatenate(zs)
        ws = np.concatenate(ws)
        phi, _, dphi, _ = shoot_many(zs, c, tol)
        mn = float(np.min(np.abs(phi)))
        if mn == 0.0:
            raise EdgeError("zero on the contour")
        val = np.sum(ws * dphi / phi) / (2j * np.pi)
        est = val.real
        k = int(round(est))
        if abs(est - k) <= 0.25 and abs(val.imag) <= 0.25 and prev is not None and prev == k:
            return k, float(est), mn
        prev = k if abs(est - k) <= 0.25 else None
        n *= 2
    raise EdgeError(f"winding quadrature did not settle (last value {est:.4f})")


def count_zeros(box, c: OdeCoefficients, tol: float = 1e-11, retries: int = 4) -> int:
    """Winding number of Phi around ``box``; the box is nudged outward if an
    edge runs too close to a zero."""
    b = _as_box(box)
    return _count_nudged(b, c, tol, retries)[0]


def _count_nudged(b: Box, c, tol, retries):
    eps = 1e-3 * b.diameter
    last = None
    for attempt in range(retries + 1):
        try:
            k, _, _ = _winding(b, c, tol)
            return k, b
        except EdgeError as exc:
            last = exc
            log.debug("edge too close to a zero (%s); nudging box by %g", exc, eps)
            b = b.grow(eps)
            eps *= 2.7
    raise ShootingError(f"could not certify winding number: {last}")


@dataclass
class ZeroCertificate:
    box: dict
    winding: int
    zeros: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def zeta(self) -> list[complex]:
        return [complex(z["re"], z["im"]) for z in self.zeros]

    @property
    def zero_count(self) -> int:
        return sum(z["multiplicity"] for z in self.zeros)

    def as_dict(self):
        return {"box": self.box, "winding": self.winding, "zeros": self.zeros, "flags": self.flags}


def _newton(z0: complex, c, tol, max_iter=50):
    z = complex(z0)
    for it in range(1, max_iter + 1):
        phi, _, dphi, _ = shoot_many([z], c, tol)
        phi, dphi = complex(phi[0]), complex(dphi[0])
        if dphi == 0:
            return z, abs(phi), abs(dphi), it, False
        step = phi / dphi
        z -= step
        if abs(step) <= 1e-13 * (1 + abs(z)):
            phi, _, dphi, _ = shoot_many([z], c, tol)
            return z, float(abs(phi[0])), float(abs(dphi[0])), it, True
    return z, float(abs(phi)), float(abs(dphi)), max_iter, False


def _fallback_min(b: Box, c, tol):
    """Golden-section minimisation of |Phi| along the box's horizontal midline."""
    from scipy.optimize import minimize_scalar

    ym = 0.5 * (b.im_min + b.im_max)
    f = lambda xr: float(abs(shoot_many([complex(xr, ym)], c, tol)[0][0]))  # noqa: E731
    res = minimize_scalar(f, bounds=(b.re_min, b.re_max), method="bounded", options={"xatol": 1e-12})
    return complex(res.x, ym)


def _split(b: Box) -> list[Box]:
    # off-centre cut so symmetric configurations do not put zeros on the cut
    fr = 0.5 + 0.0317
    if (b.re_max - b.re_min) >= (b.im_max - b.im_min):
        m = b.re_min + fr * (b.re_max - b.re_min)
        return [Box(b.re_min, m, b.im_min, b.im_max), Box(m, b.re_max, b.im_min, b.im_max)]
    m = b.im_min + fr * (b.im_max - b.im_min)
    return [Box(b.re_min, b.re_max, b.im_min, m), Box(b.re_min, b.re_max, m, b.im_max)]


def locate_zeros(box, c: OdeCoefficients, tol: float = 1e-11, min_size: float = 1e-6,
                 max_boxes: int = 4000) -> ZeroCertificate:
    """Subdivide until each box has winding <= 1, then refine by Newton."""
    root = _as_box(box)
    total, root = _count_nudged(root, c, tol, 4)
    cert = ZeroCertificate(box=root.as_dict(), winding=total)
    queue = [(root, total)]
    seen = 0
    while queue:
        b, k = queue.pop(0)
        seen += 1
        if seen > max_boxes:
            raise ShootingError("box budget exhausted")
        if k == 0:
            continue
        if k == 1 or b.diameter < min_size:
            z0 = complex(0.5 * (b.re_min + b.re_max), 0.5 * (b.im_min + b.im_max))
            z, res, dmag, iters, ok = _newton(z0, c, tol)
            if not ok or not b.contains(z, pad=1e-9):
                cert.flags.append(f"newton-fallback near {z0:.6g}")
                z1 = _fallback_min(b, c, tol)
                z, res, dmag, iters, ok = _newton(z1, c, tol)
                if not ok or not b.contains(z, pad=1e-9):
                    # only sub-boxes can still isolate it
                    if b.diameter >= min_size:
                        for sb in _split(b):
                            kk, sb2 = _count_nudged(sb, c, tol, 2)
                            queue.append((sb2, kk))
                        continue
            entry = {"re": float(z.real), "im": float(z.imag), "residual": float(res),
                     "dphi": float(dmag), "newton_iterations": int(iters), "multiplicity": int(k)}
            if k > 1:
                cert.flags.append(f"multiplicity {k} near {z:.6g}")
            cert.zeros.append(entry)
            continue
        subs = _split(b)
        counts = []
        for sb in subs:
            kk, sb2 = _count_nudged(sb, c, tol, 2)
            counts.append((sb2, kk))
        if sum(kk for _, kk in counts) != k:
            cert.flags.append(f"sub-box counts disagree at {b.as_dict()}")
        queue.extend(counts)
    cert.zeros.sort(key=lambda e: (round(e["re"], 10), round(e["im"], 10)))
    return cert


@dataclass
class ExceptionalExponents:
    s_min: float
    s_max: float
    gamma_max: float
    strip: dict
    rows: list[dict]
    certificate: ZeroCertificate

    @property
    def values(self) -> list[float]:
        return [r["s"] for r in self.rows]


def exceptional_sobolev(s_min: float, s_max: float, gamma_max: float, c: OdeCoefficients,
                        tol: float = 1e-11) -> ExceptionalExponents:
    """Exceptional exponents ``s = Re zeta + 1/2`` from zeros with ``|Im zeta| <= gamma_max``.

    The search region is truncated at ``gamma_max``; the strip actually
    searched is recorded in the result.
    """
    if s_min < 0:
        raise ValueError("s_min must be >= 0")
    if not s_min < s_max:
        raise ValueError("need s_min < s_max")
    if not gamma_max > 0:
        raise ValueError("gamma_max must be positive")
    box = Box(s_min - 0.5, s_max - 0.5, -gamma_max, gamma_max)
    cert = locate_zeros(box, c, tol)
    rows = []
    for z in cert.zeros:
        s = z["re"] + 0.5
        if not (s_min <= s <= s_max and abs(z["im"]) <= gamma_max):
            continue
        if rows and abs(rows[-1]["s"] - s) <= 1e-9:
            continue
        rows.append({"s": s, "re_zeta": z["re"], "im_zeta": z["im"], "residual": z["residual"]})
    rows.sort(key=lambda r: r["s"])
    dedup = []
    for r in rows:
        if dedup and abs(dedup[-1]["s"] - r["s"]) <= 1e-9:
            continue
        dedup.append(r)
    strip = {"re_zeta_min": box.re_min, "re_zeta_max": box.re_max, "im_zeta_min": box.im_min,
             "im_zeta_max": box.im_max, "searched_box": cert.box}
    return ExceptionalExponents(s_min, s_max, gamma_max, strip, dedup, cert)


# ----------------------------------------------------------------------------
# Dirichlet probe


def dirichlet_matrix(zeta: complex, c: OdeCoefficients, n: int) -> sp.csr_matrix:
    """n interior-node Dirichlet discretisation of H_zeta on [-r, r]."""
    x = np.linspace(-c.r, c.r, n + 2)[1:-1]
    h = x[1] - x[0]
    ode = assemble_H(zeta, c)
    return (diff2(n, h) + sp.diags(ode.p(x)) @ diff1(n, h) + sp.diags(ode.q(x).astype(complex))).tocsc()


@dataclass
class SigmaMin:
    value: float
    iterations: int
    singular: bool = False

    def __float__(self):
        return self.value


def dirichlet_sigma_min(zeta: complex, c: OdeCoefficients, n: int = 512, tol: float = 1e-12,
                        max_iter: int = 2000, seed: int = 0) -> SigmaMin:
    """Smallest singular value by inverse power iteration on ``A^H A``."""
    if n < 64:
        raise ValueError("n must be >= 64")
    A = dirichlet_matrix(zeta, c, n).astype(complex)
    try:
        lu = spla.splu(A)
    except RuntimeError:
        return SigmaMin(0.0, 0, True)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        z = lu.solve(w, trans="H")
        if not np.all(np.isfinite(z)):
            return SigmaMin(0.0, it, True)
        nz = np.linalg.norm(z)
        new = float(np.real(np.vdot(v, z)))
        v = z / nz
        if it > 1 and abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    if lam <= 0:
        return SigmaMin(0.0, it, True)
    return SigmaMin(float(1.0 / np.sqrt(lam)), it)
