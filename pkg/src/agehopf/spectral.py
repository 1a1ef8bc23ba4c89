"""Characteristic quasi-polynomial at the positive equilibrium.

Eigenvalues ``lambda`` of the rescaled linearisation are written as
``lambda = tau * zeta``; then they are the zeros of

    g(zeta) = zeta**2 + p1*zeta + p0 + (q1*zeta + q0) * exp(-tau*zeta)

with ``tau``-independent coefficients.  Root search and counting work in
``zeta``; :func:`det_delta` evaluates the original 2x2 determinant in
``lambda`` as an independent cross-check.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContourThroughRoot,
    NoPositiveEquilibrium,
    OutsideOmega,
    PoleAtLambda,
    QuadratureFailure,
)
from .model import Form, ModelParams, beta_star, check_assumptions, positive_equilibrium

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CharCoeffs:
    p1: float
    p0: float
    q1: float
    q0: float


@dataclass(frozen=True)
class ComplexRoot:
    value: complex
    residual: float
    multiplicity_hint: int = 1


@dataclass(frozen=True)
class SearchRegion:
    """Rectangle ``[re_min, re_max] x [-im_max, im_max]`` in zeta."""

    re_min: float
    re_max: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max) or not self.im_max > 0:
            raise ValueError(f"degenerate search region {self}")

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (
            self.re_min - slack <= z.real <= self.re_max + slack
            and abs(z.imag) <= self.im_max + slack
        )


def char_coeffs(p: ModelParams) -> CharCoeffs:
    rep = check_assumptions(p)
    if not rep.positive_equilibrium_exists:
        raise NoPositiveEquilibrium("characteristic coefficients need a positive equilibrium")
    a, m, r, s, e = p.alpha, p.m, p.r, p.sigma, p.eta
    mae2 = m * a * e * e
    p1 = (mae2 * (r + 2 * s) - a * a * e * e - m * s * e + 1) / mae2
    p0 = s * (m * r * (2 * a * e - 1) - 2 * a * (a * e - 1)) / (m * a * e)
    q1 = -s
    q0 = s * (-m * r * a * e * e + a * a * e * e - 1) / mae2
    return CharCoeffs(p1, p0, q1, q0)


def zero_value_closed_form(p: ModelParams) -> float:
    """``g(0) = p0 + q0`` in factored form, positive when an equilibrium exists."""
    ae1 = p.alpha * p.eta - 1.0
    return p.sigma * ae1 * (p.m * p.r * p.eta - ae1) / (p.m * p.alpha * p.eta**2)


def g_eval(c: CharCoeffs, zeta, tau: float):
    """Quasi-polynomial value; accepts scalars or numpy arrays."""
    zeta = np.asarray(zeta, dtype=complex) if not np.isscalar(zeta) else complex(zeta)
    exp = np.exp if isinstance(zeta, np.ndarray) else cmath.exp
    return zeta * zeta + c.p1 * zeta + c.p0 + (c.q1 * zeta + c.q0) * exp(-tau * zeta)


def g_prime(c: CharCoeffs, zeta, tau: float):
    """``dg/dzeta`` at fixed ``tau``."""
    zeta = np.asarray(zeta, dtype=complex) if not np.isscalar(zeta) else complex(zeta)
    exp = np.exp if isinstance(zeta, np.ndarray) else cmath.exp
    return 2 * zeta + c.p1 + (c.q1 - tau * (c.q1 * zeta + c.q0)) * exp(-tau * zeta)


def f_tilde(c: CharCoeffs, lam, tau: float):
    """Numerator of the determinant in the ``lambda`` variable."""
    lam = np.asarray(lam, dtype=complex) if not np.isscalar(lam) else complex(lam)
    exp = np.exp if isinstance(lam, np.ndarray) else cmath.exp
    return (
        lam * lam
        + tau * c.p1 * lam
        + tau * tau * c.p0
        + (tau * c.q1 * lam + tau * tau * c.q0) * exp(-lam)
    )


def _linearisation_blocks(p: ModelParams, tau: float):
    """Entries of the derivative of the boundary map at the positive equilibrium.

    Returns ``(M1, m2)`` where ``M1`` multiplies the population integrals
    ``(int u, int v)`` and ``m2`` multiplies ``int beta u`` in the predator
    row.  Built from the equilibrium integrals, not from the coefficient
    formulas, so it checks them independently.
    """
    eq = positive_equilibrium(p, tau, Form.RESCALED)
    U = eq.total
    V = eq.V_bar
    xi = beta_star(p.sigma, tau) * eq.profile.tail_mass(1.0)
    a, m, e = p.alpha, p.m, p.eta
    D = m * U + V
    M1 = np.array(
        [
            [-m * a * e * V * xi / D**2, a * e * xi / D - a * e * V * xi / D**2],
            [
                -a * V / D + a * m * V * U / D**2,
                p.lambda_birth - 2 * p.r / p.K * V - a * U / D + a * V * U / D**2,
            ],
        ]
    )
    m2 = a * e * V / D
    return M1, m2


def det_delta(p: ModelParams, tau: float, lam: complex) -> complex:
    """Determinant of the characteristic matrix at ``lambda`` (rescaled frame)."""
    lam = complex(lam)
    if not lam.real > -p.nu * tau:
        raise OutsideOmega(f"Re(lambda) = {lam.real} is not > -nu*tau = {-p.nu * tau}")
    ls = lam + p.sigma * tau
    lm = lam + p.mu * tau
    if abs(ls) < 1e-14 * max(1.0, abs(lam)) or abs(lm) < 1e-14 * max(1.0, abs(lam)):
        raise PoleAtLambda(f"lambda = {lam} is a pole of the resolvent kernels")
    M1, m2 = _linearisation_blocks(p, tau)
    k_u = 1.0 / ls
    k_v = 1.0 / lm
    k_beta = beta_star(p.sigma, tau) * cmath.exp(-ls) / ls
    d00 = 1.0 - tau * M1[0, 0] * k_u - tau * m2 * k_beta
    d01 = -tau * M1[0, 1] * k_v
    d10 = -tau * M1[1, 0] * k_u
    d11 = 1.0 - tau * M1[1, 1] * k_v
    return d00 * d11 - d01 * d10


# ---------------------------------------------------------------- root search

def _newton(c: CharCoeffs, z: complex, tau: float, maxiter: int, tol: float):
    for _ in range(maxiter):
        try:
            gz = g_eval(c, z, tau)
            dz = gz / g_prime(c, z, tau)
        except (OverflowError, ZeroDivisionError):
            return None
        if not (math.isfinite(dz.real) and math.isfinite(dz.imag)):
            return None
        z = z - dz
        if abs(dz) <= tol * max(1.0, abs(z)):
            return z
        if abs(z) > 1e6:
            return None
    return None


def find_roots(
    c: CharCoeffs,
    tau: float,
    region: SearchRegion,
    *,
    spacing: float = 0.05,
    nu: float | None = None,
    maxiter: int = 60,
    residual_tol: float = 1e-10,
    dedup_tol: float = 1e-6,
) -> list[ComplexRoot]:
    """Zeros of ``g`` inside ``region`` by Newton iteration from a seed grid.

    Seeds that diverge or leave the region are dropped (and counted in the
    debug log).  Roots come back sorted by decreasing real part, then by
    imaginary part, with conjugate pairs completed.
    """
    re_lo = region.re_min
    if nu is not None and re_lo <= -nu:
        raise OutsideOmega(f"search region reaches Re(zeta) = {re_lo} <= -nu = {-nu}")
    n_re = max(2, int(math.ceil((region.re_max - region.re_min) / spacing)) + 1)
    n_im = max(2, int(math.ceil(region.im_max / spacing)) + 1)
    res = np.linspace(region.re_min, region.re_max, n_re)
    ims = np.linspace(0.0, region.im_max, n_im)

    found: list[complex] = []
    failures = 0
    for x in res:
        for y in ims:
            z = _newton(c, complex(x, y), tau, maxiter, 1e-15)
            if z is None:
                failures += 1
                continue
            if abs(z.imag) < 1e-10:
                z = complex(z.real, 0.0)
            if not region.contains(z, slack=1e-9):
                continue
            if abs(g_eval(c, z, tau)) >= residual_tol:
                failures += 1
                continue
            for cand in (z, z.conjugate()):
                if not any(abs(cand - w) < dedup_tol for w in found):
                    found.append(cand)
    if failures:
        log.debug("find_roots: %d of %d seeds did not converge", failures, n_re * n_im)

    out = []
    for z in sorted(found, key=lambda w: (-round(w.real, 12), w.imag)):
        d = abs(g_prime(c, z, tau))
        out.append(ComplexRoot(z, abs(g_eval(c, z, tau)), 1 if d > 1e-6 else 2))
    return out


# ------------------------------------------------------------ root counting

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def root_modulus_bound(c: CharCoeffs) -> float:
    """Every zero with ``Re(zeta) >= 0`` has modulus below this value."""
    return abs(c.p1) + abs(c.q1) + math.sqrt(abs(c.p0) + abs(c.q0)) + 1.0


def _edge_integral(c: CharCoeffs, tau: float, z0: complex, z1: complex, panels: int):
    """Gauss-Legendre integral of g'/g along the segment z0 -> z1."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    z = z0 + (z1 - z0) * t
    gz = g_eval(c, z, tau)
    return np.sum(w * g_prime(c, z, tau) / gz) * (z1 - z0), np.min(np.abs(gz))


def _winding(c: CharCoeffs, tau: float, corners, max_panels: int):
    panels = 4
    prev = None
    while panels <= max_panels:
        total = 0j
        gmin = math.inf
        for z0, z1 in zip(corners, corners[1:] + corners[:1]):
            val, gm = _edge_integral(c, tau, z0, z1, panels)
            total += val
            gmin = min(gmin, gm)
        n = total / (2j * math.pi)
        if prev is not None:
            near = abs(n.real - round(n.real)) < 1e-3 and abs(n.imag) < 1e-3
            stable = abs(n - prev) < 1e-3
            if near and stable:
                return int(round(n.real)), gmin
        prev = n
        panels *= 2
    raise QuadratureFailure(f"winding number did not settle near an integer (last {prev})")


def count_unstable_roots(
    c: CharCoeffs,
    tau: float,
    *,
    offsets=(1e-4, 3e-4, 1e-3),
    max_panels: int = 4096,
) -> int:
    """Number of zeros of ``g`` with ``Re(zeta) > eps`` via the argument principle.

    The contour is the rectangle ``[eps, R] x [-R, R]`` with ``R`` from
    :func:`root_modulus_bound`.  When the contour passes too close to a
    zero, the next offset in ``offsets`` is tried.
    """
    R = root_modulus_bound(c)
    # scale for deciding that |g| on the contour is effectively zero
    scale = abs(c.p0) + abs(c.q0) + 1e-300
    last_err = None
    for eps in offsets:
        corners = [complex(eps, -R), complex(R, -R), complex(R, R), complex(eps, R)]
        try:
            n, gmin = _winding(c, tau, corners, max_panels)
        except QuadratureFailure as exc:
            last_err = exc
            continue
        if gmin < 1e-9 * scale:
            last_err = ContourThroughRoot(f"|g| = {gmin:.3g} on contour at eps = {eps}")
            continue
        return n
    if isinstance(last_err, ContourThroughRoot):
        raise last_err
    raise ContourThroughRoot(f"all contour offsets failed: {last_err}")
