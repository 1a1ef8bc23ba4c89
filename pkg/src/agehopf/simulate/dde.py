"""Delay-equation reduction of the age-structured model.

Integrating the transport equation over ages, and over ages above the
fertility threshold, closes the system in three totals:

    U = int u da                  (all predators)
    P = beta* int_{thr}^inf u da  (fertility-weighted predators)
    V                              (prey)

with the birth flux ``b = eta alpha V P / (m U + V)``.  Along
characteristics ``u(t, thr) = b(t - thr) exp(-sigma thr)`` and
``beta* exp(-sigma thr) = sigma``, which gives

    U' = b(t) - sigma U
    P' = sigma b(t - delay) - sigma P
    V' = r V (1 - V/K) - alpha V U / (m U + V)

In the rescaled frame every right-hand side picks up a factor ``tau`` and
the delay is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..errors import BlowUp, StepNotDividingDelay
from ..model import Form, ModelParams, beta_star, fertility_threshold
from .types import DdeState, Trajectory

MIN_STEPS_PER_DELAY = 100


@dataclass(frozen=True)
class DdeSystem:
    params: ModelParams
    tau: float
    form: Form
    delay: float
    scale: float
    beta_star: float

    def birth(self, U: float, P: float, V: float) -> float:
        p = self.params
        den = p.m * U + V
        return p.eta * p.alpha * V * P / den if den > 0 else 0.0

    def rhs(self, U: float, P: float, V: float, b_delayed: float):
        p = self.params
        s = self.scale
        den = p.m * U + V
        b = p.eta * p.alpha * V * P / den if den > 0 else 0.0
        pred = p.alpha * V * U / den if den > 0 else 0.0
        return (
            s * (b - p.sigma * U),
            s * p.sigma * (b_delayed - P),
            s * (p.r * V * (1.0 - V / p.K) - pred),
        )

    def equilibrium_point(self):
        """``(U*, P*, V_bar)`` of the positive equilibrium."""
        from ..model import positive_equilibrium

        eq = positive_equilibrium(self.params, self.tau, Form.ORIGINAL)
        return eq.total, self.params.sigma * eq.total, eq.V_bar


def reduce_to_dde(p: ModelParams, tau: float, form=Form.RESCALED) -> DdeSystem:
    form = Form.parse(form)
    s = tau if form is Form.RESCALED else 1.0
    return DdeSystem(p, tau, form, fertility_threshold(form, tau), s, beta_star(p.sigma, tau))


def _profile_mass(u0, a0: float) -> float:
    if hasattr(u0, "tail_mass"):
        return u0.tail_mass(a0)
    val, _ = quad(lambda a: float(u0(a)), a0, math.inf, limit=200)
    return val


# 4-point Lagrange weights for the midpoint of an interval
_MID_CENTRED = (-1 / 16, 9 / 16, 9 / 16, -1 / 16)   # nodes i-1, i, i+1, i+2
_MID_LEFT = (5 / 16, 15 / 16, -5 / 16, 1 / 16)       # nodes i, i+1, i+2, i+3
_MID_RIGHT = (1 / 16, -5 / 16, 15 / 16, 5 / 16)      # nodes i-2, i-1, i, i+1


def _midpoint(seg, i: int, last: int) -> float:
    """Cubic interpolant of ``seg`` at ``i + 1/2`` using nodes ``<= last``."""
    if i >= 1 and i + 2 <= last:
        w, j = _MID_CENTRED, i - 1
    elif i == 0 and 3 <= last:
        w, j = _MID_LEFT, 0
    elif i >= 2 and i + 1 <= last:
        w, j = _MID_RIGHT, i - 2
    else:
        return 0.5 * (seg[i] + seg[i + 1])
    return w[0] * seg[j] + w[1] * seg[j + 1] + w[2] * seg[j + 2] + w[3] * seg[j + 3]


def simulate_dde(
    p: ModelParams,
    tau: float,
    form,
    init,
    t_end: float,
    sample_every: float,
    *,
    dt: float | None = None,
    steps_per_delay: int | None = None,
    history: str = "constant",
) -> Trajectory:
    """Classical RK4 with the delayed birth flux read from stored history.

    ``init = (u0, V0)`` with ``u0`` an age profile in the simulation frame.
    ``history="constant"`` holds the birth flux at its initial value for
    ``t < 0``; ``history="renewal"`` reconstructs the births that produced
    ``u0``, which makes the reduction exactly equivalent to the PDE.
    Samples between steps use cubic Hermite interpolation.
    """
    form = Form.parse(form)
    sysm = reduce_to_dde(p, tau, form)
    delay = sysm.delay
    if steps_per_delay is None:
        if dt is None:
            steps_per_delay = 400
        else:
            steps_per_delay = round(delay / dt)
            if abs(steps_per_delay * dt - delay) > 1e-9 * delay:
                raise StepNotDividingDelay(f"dt = {dt} does not divide the delay {delay}")
    N = int(steps_per_delay)
    if N < MIN_STEPS_PER_DELAY:
        raise StepNotDividingDelay(f"need at least {MIN_STEPS_PER_DELAY} steps per delay, got {N}")
    h = delay / N
    if t_end <= 0 or sample_every <= 0:
        raise ValueError("t_end and sample_every must be positive")
    n_steps = int(math.ceil(t_end / h - 1e-9))

    u0, V0 = init
    U = _profile_mass(u0, 0.0)
    P = sysm.beta_star * _profile_mass(u0, delay)
    V = float(V0)
    b0 = sysm.birth(U, P, V)

    s_grid = np.linspace(-delay, 0.0, N + 1)
    if history == "constant":
        hist = np.full(N + 1, b0)
    elif history == "renewal":
        # births at time s < 0 are the current density at age -s, undone by survival
        ages = -s_grid
        hist = np.asarray(u0(ages), dtype=float) * np.exp(p.sigma * sysm.scale * ages) / sysm.scale
    else:
        raise ValueError("history must be 'constant' or 'renewal'")
    hist = [float(x) for x in hist]
    sol = [b0]

    n_samples = int(math.floor(t_end / sample_every + 1e-9)) + 1
    ts = [k * sample_every for k in range(n_samples)]
    Us, Vs = [U], [V]
    next_k = 1

    rhs = sysm.rhs
    for n in range(n_steps):
        j = n - N
        if j < 0:
            seg, i, last = hist, j + N, N
        else:
            seg, i, last = sol, j, n
        bl = seg[i]
        br = seg[i + 1]
        bm = _midpoint(seg, i, last)

        k1 = rhs(U, P, V, bl)
        y2 = (U + 0.5 * h * k1[0], P + 0.5 * h * k1[1], V + 0.5 * h * k1[2])
        k2 = rhs(*y2, bm)
        y3 = (U + 0.5 * h * k2[0], P + 0.5 * h * k2[1], V + 0.5 * h * k2[2])
        k3 = rhs(*y3, bm)
        y4 = (U + h * k3[0], P + h * k3[1], V + h * k3[2])
        k4 = rhs(*y4, br)
        U1 = U + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        P1 = P + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        V1 = V + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (math.isfinite(U1) and math.isfinite(P1) and math.isfinite(V1)):
            raise BlowUp(f"non-finite state at t = {(n + 1) * h}")

        t0 = n * h
        t1 = t0 + h
        if next_k < n_samples and ts[next_k] <= t1 + 1e-9 * h:
            f1 = rhs(U1, P1, V1, br)
            while next_k < n_samples and ts[next_k] <= t1 + 1e-9 * h:
                x = min(max((ts[next_k] - t0) / h, 0.0), 1.0)
                Us.append(_hermite(U, U1, k1[0], f1[0], h, x))
                Vs.append(_hermite(V, V1, k1[2], f1[2], h, x))
                next_k += 1
        U, P, V = U1, P1, V1
        sol.append(sysm.birth(U, P, V))

    window = (hist + sol)[-(N + 1):]
    final = DdeState(n_steps * h, U, P, V, np.array(window))
    meta = {
        "solver": "dde",
        "form": form.value,
        "tau": tau,
        "dt": h,
        "history": history,
        "params": p.as_dict(),
        "final_state": final,
    }
    return Trajectory(np.array(ts[: len(Us)]), np.array(Us), np.array(Vs), None, meta)


def _hermite(y0, y1, f0, f1, h, x):
    x2 = x * x
    x3 = x2 * x
    return (
        (2 * x3 - 3 * x2 + 1) * y0
        + (x3 - 2 * x2 + x) * h * f0
        + (-2 * x3 + 3 * x2) * y1
        + (x3 - x2) * h * f1
    )
