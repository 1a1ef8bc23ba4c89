"""Randomised internal consistency checks (the ``verify`` subcommand).

Each check compares two independently computed routes to the same
quantity over many random draws and reports the worst discrepancy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hopf import omega0, simple_root_check, tau_k, transversality
from .model import (
    Form,
    ModelParams,
    check_assumptions,
    equilibrium_residual,
    positive_equilibrium,
    trivial_equilibrium,
    validate,
)
from .spectral import char_coeffs, det_delta, f_tilde, g_eval, zero_value_closed_form


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    worst: float
    tol: float
    samples: int
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} worst={self.worst:.3e}  tol={self.tol:.0e}  n={self.samples}"


def random_params(rng: np.random.Generator, hopf: bool = False, max_tries: int = 100000) -> ModelParams:
    """Draw parameters with a positive equilibrium (and the Hopf condition if asked)."""
    for _ in range(max_tries):
        lam = rng.uniform(0.3, 3.0)
        mu = rng.uniform(0.05, 0.9 * lam)
        raw = {
            "Lambda": lam,
            "mu": mu,
            "K": rng.uniform(10.0, 500.0),
            "alpha": rng.uniform(0.5, 6.0),
            "m": rng.uniform(0.1, 5.0),
            "sigma": rng.uniform(0.1, 2.0),
            "eta": rng.uniform(0.3, 1.5),
        }
        p = validate(raw)
        rep = check_assumptions(p)
        # keep a visible margin so tolerances are not dominated by near-degenerate draws
        if not rep.positive_equilibrium_exists or min(
            rep.margin_existence_upper, rep.margin_existence_lower
        ) < 1e-3:
            continue
        if hopf and (not rep.hopf_feasible or rep.margin_hopf < 1e-3):
            continue
        return p
    raise RuntimeError("could not draw feasible parameters")


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_scaling(rng, n: int, tol: float = 1e-12) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng)
        c = char_coeffs(p)
        tau = rng.uniform(1e-3, 5.0)
        z = complex(rng.uniform(-p.nu, 2.0), rng.uniform(-5.0, 5.0))
        worst = max(worst, _rel(f_tilde(c, tau * z, tau), tau * tau * g_eval(c, z, tau)))
    return IdentityCheck("f~(tau z) = tau^2 g(z)", worst, tol, n, worst < tol)


def check_determinant(rng, n: int, tol: float = 1e-10) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng)
        c = char_coeffs(p)
        tau = rng.uniform(0.1, 5.0)
        lo = -p.nu * tau
        lam = complex(rng.uniform(lo + 0.05 * abs(lo), 5.0), rng.uniform(-10.0, 10.0))
        closed = f_tilde(c, lam, tau) / ((lam + p.sigma * tau) * (lam + p.mu * tau))
        worst = max(worst, _rel(det_delta(p, tau, lam), closed))
    return IdentityCheck("det Delta = f~/g~ on Omega", worst, tol, n, worst < tol)


def check_equilibria(rng, n: int, tol: float = 1e-10) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng)
        tau = rng.uniform(0.05, 5.0)
        for form in (Form.ORIGINAL, Form.RESCALED):
            worst = max(worst, equilibrium_residual(p, tau, positive_equilibrium(p, tau, form)))
            worst = max(worst, equilibrium_residual(p, tau, trivial_equilibrium(p, tau, form)))
    return IdentityCheck("equilibrium residuals", worst, tol, n, worst < tol)


def check_zero_value(rng, n: int, tol: float = 1e-12) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng)
        c = char_coeffs(p)
        # the sum cancels near the existence boundary; measure against the terms
        err = abs(c.p0 + c.q0 - zero_value_closed_form(p)) / (abs(c.p0) + abs(c.q0))
        worst = max(worst, err)
    return IdentityCheck("p0 + q0 closed form", worst, tol, n, worst < tol)


def check_crossing(rng, n: int) -> IdentityCheck:
    """Transversality and simple-root margins must both be positive."""
    smallest = math.inf
    for _ in range(n):
        p = random_params(rng, hopf=True)
        c = char_coeffs(p)
        w = omega0(c)
        t0 = tau_k(c, w, 0)
        smallest = min(smallest, transversality(c, w), simple_root_check(c, w, t0))
    return IdentityCheck("transversality, |g'(i w0)| > 0", smallest, 0.0, n, smallest > 0.0)


def check_ladder(rng, n: int, tol: float = 1e-12, k_max: int = 5) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng, hopf=True)
        c = char_coeffs(p)
        w = omega0(c)
        gap = 2 * math.pi / w
        taus = [tau_k(c, w, k) for k in range(k_max + 1)]
        for a, b in zip(taus, taus[1:]):
            worst = max(worst, _rel(b - a, gap))
    return IdentityCheck("tau_k gap = 2 pi / omega0", worst, tol, n, worst < tol)


def check_critical_root(rng, n: int, tol: float = 1e-10, k_max: int = 5) -> IdentityCheck:
    worst = 0.0
    for _ in range(n):
        p = random_params(rng, hopf=True)
        c = char_coeffs(p)
        w = omega0(c)
        scale = abs(c.p0) + abs(c.q0) + w * w
        for k in range(k_max + 1):
            worst = max(worst, abs(g_eval(c, 1j * w, tau_k(c, w, k))) / scale)
    return IdentityCheck("g(i w0) = 0 at every tau_k", worst, tol, n, worst < tol)


def run_identity_suite(samples: int = 1000, seed: int = 20240501) -> list[IdentityCheck]:
    rng = np.random.default_rng(seed)
    return [
        check_scaling(rng, samples),
        check_determinant(rng, samples),
        check_equilibria(rng, samples),
        check_zero_value(rng, samples),
        check_crossing(rng, samples),
        check_ladder(rng, samples),
        check_critical_root(rng, samples),
    ]


def check_point(p: ModelParams, tau: float) -> list[IdentityCheck]:
    """The scaling, determinant and equilibrium identities at one parameter set."""
    c = char_coeffs(p)
    rng = np.random.default_rng(0)
    scal = det = 0.0
    for _ in range(100):
        z = complex(rng.uniform(-0.9 * p.nu, 2.0), rng.uniform(-5.0, 5.0))
        scal = max(scal, _rel(f_tilde(c, tau * z, tau), tau * tau * g_eval(c, z, tau)))
        lam = tau * z
        closed = f_tilde(c, lam, tau) / ((lam + p.sigma * tau) * (lam + p.mu * tau))
        det = max(det, _rel(det_delta(p, tau, lam), closed))
    res = max(
        equilibrium_residual(p, tau, fn(p, tau, form))
        for fn in (positive_equilibrium, trivial_equilibrium)
        for form in (Form.ORIGINAL, Form.RESCALED)
    )
    return [
        IdentityCheck("config: scaling identity", scal, 1e-12, 100, scal < 1e-12),
        IdentityCheck("config: determinant identity", det, 1e-10, 100, det < 1e-10),
        IdentityCheck("config: equilibrium residuals", res, 1e-10, 4, res < 1e-10),
    ]
