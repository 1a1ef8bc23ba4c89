"""One-at-a-time parameter sweeps and critical-delay curves."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import AgeHopfError
from .hopf import analyze
from .model import AgeProfile, Form, ModelParams, check_assumptions
from .simulate import OscillationMetrics, build_grid, metrics, simulate_dde, simulate_pde

SWEEPABLE = ("K", "alpha", "m", "eta", "sigma")
# mean prey below this fraction of K after the transient counts as collapse to the origin
COLLAPSE_FRACTION = 1e-6
SWEEP_HEADER = (
    "param", "value", "feasible", "tau0", "amplitude_U", "amplitude_V",
    "mean_U", "mean_V", "period", "converged",
)


@dataclass(frozen=True)
class InitialData:
    """Exponential initial predator profile plus initial prey.

    ``frame="original"`` means ``u0_coef * exp(-u0_rate * a)`` is given in
    physical age and is rescaled when the simulation runs in the rescaled
    frame; ``frame="simulation"`` uses the numbers as given.
    """

    u0_coef: float = 30.3745
    u0_rate: float = 1.0
    V0: float = 37.3494
    frame: str = "original"

    def profile(self, tau: float, form) -> AgeProfile:
        prof = AgeProfile(self.u0_coef, self.u0_rate)
        if self.frame == "original" and Form.parse(form) is Form.RESCALED:
            return prof.rescaled(tau)
        return prof


@dataclass(frozen=True)
class SimSettings:
    form: Form = Form.RESCALED
    da: float = 0.01
    dt_divisor: int = 400
    t_end: float = 600.0
    sample_every: float = 0.1
    t_transient: float = 300.0
    initial: InitialData = field(default_factory=InitialData)
    dde_history: str = "renewal"


def run_simulation(p: ModelParams, tau: float, sim: SimSettings, solver: str = "pde", **kw):
    """Simulate with either solver using the shared settings block."""
    u0 = sim.initial.profile(tau, sim.form)
    if solver == "pde":
        grid = build_grid(p, tau, sim.form, sim.da, min_decay=u0.rate)
        return simulate_pde(p, tau, sim.form, grid, (u0, sim.initial.V0), sim.t_end,
                            sim.sample_every, **kw)
    if solver == "dde":
        return simulate_dde(p, tau, sim.form, (u0, sim.initial.V0), sim.t_end, sim.sample_every,
                            steps_per_delay=sim.dt_divisor, history=sim.dde_history)
    raise ValueError(f"unknown solver {solver!r}")


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    tau: float
    vary: str
    values: tuple
    sim: SimSettings = field(default_factory=SimSettings)
    solver: str = "pde"

    def __post_init__(self):
        if self.vary not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.vary!r}; choose from {SWEEPABLE}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class SweepRow:
    value: float
    feasible: bool
    tau0: float | None
    metrics: OscillationMetrics | None
    reason: str = ""


def _tau0(p: ModelParams):
    rep = check_assumptions(p)
    if not rep.hopf_feasible:
        return None, "hopf assumption fails"
    try:
        return analyze(p, k_max=0).tau_ks[0], ""
    except AgeHopfError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _run_row(spec: SweepSpec, value: float) -> SweepRow:
    try:
        p = spec.base.replace(**{spec.vary: value})
    except AgeHopfError as exc:
        return SweepRow(value, False, None, None, f"{type(exc).__name__}: {exc}")
    if not check_assumptions(p).positive_equilibrium_exists:
        return SweepRow(value, False, None, None, "no positive equilibrium")
    tau0, why = _tau0(p)
    try:
        traj = run_simulation(p, spec.tau, spec.sim, spec.solver)
        met = metrics(traj, spec.sim.t_transient)
    except AgeHopfError as exc:
        return SweepRow(value, True, tau0, None, f"{type(exc).__name__}: {exc}")
    if met.mean_V < COLLAPSE_FRACTION * p.K:
        why = "; ".join(x for x in (why, "populations collapse toward the origin") if x)
    return SweepRow(value, True, tau0, met, why)


def run_sweep(spec: SweepSpec, n_jobs: int = 1) -> list[SweepRow]:
    """Simulate every sweep value; failures are recorded per row.

    Rows come back in input order regardless of ``n_jobs``.
    """
    if n_jobs <= 1:
        return [_run_row(spec, v) for v in spec.values]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(_run_row, [spec] * len(spec.values), spec.values))


def hopf_curve(base: ModelParams, vary: str, values) -> list[tuple]:
    """``(value, tau0, reason)`` for each substituted parameter value."""
    out = []
    for v in values:
        try:
            p = base.replace(**{vary: v})
        except AgeHopfError as exc:
            out.append((float(v), None, f"{type(exc).__name__}: {exc}"))
            continue
        tau0, why = _tau0(p)
        out.append((float(v), tau0, why))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g") if math.isfinite(x) else str(x)
    return str(x)


def sweep_csv(param: str, rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for row in rows:
        m = row.metrics
        w.writerow([
            param,
            _fmt(row.value),
            _fmt(row.feasible),
            _fmt(row.tau0),
            _fmt(m.amplitude_U if m else None),
            _fmt(m.amplitude_V if m else None),
            _fmt(m.mean_U if m else None),
            _fmt(m.mean_V if m else None),
            _fmt(m.period if m else None),
            _fmt(m.converged if m else None),
        ])
    return buf.getvalue()


def trend_holds(rows: list[SweepRow], direction: str, slack: float = 0.01) -> bool:
    """Check amplitude_V is monotone in the sweep value within a relative slack.

    Rows without metrics are skipped.  ``direction`` is ``"up"`` or ``"down"``.
    """
    pts = sorted((r.value, r.metrics.amplitude_V) for r in rows if r.metrics is not None)
    for (_, a), (_, b) in zip(pts, pts[1:]):
        band = slack * max(abs(a), abs(b))
        if direction == "up" and b < a - band:
            return False
        if direction == "down" and b > a + band:
            return False
    return True


__all__ = [
    "InitialData", "SimSettings", "SweepRow", "SweepSpec", "hopf_curve", "run_simulation",
    "run_sweep", "sweep_csv", "trend_holds",
]
