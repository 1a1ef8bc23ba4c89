"""Command line interface: config parsing, subcommand dispatch, CSV output.

Every failure is reported as one line on stderr of the form::

    agehopf: error exit=<code> kind=<ExceptionName> msg=<text>

and the process exits with the code carried by the exception (2 for
config and usage, 3 for violated assumptions, 4 for numerical failures).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema

from . import hopf as hopf_mod
from .errors import AgeHopfError, ConfigError, ConfigSyntaxError, SchemaError
from .identities import IdentityCheck, check_point, run_identity_suite
from .model import (
    Form,
    ModelParams,
    check_assumptions,
    equilibrium_residual,
    positive_equilibrium,
    trivial_equilibrium,
    validate,
)
from .simulate import Trajectory, metrics
from .spectral import SearchRegion, char_coeffs, count_unstable_roots, find_roots, root_modulus_bound
from .sweep import SWEEPABLE, InitialData, SimSettings, SweepSpec, run_simulation, run_sweep, sweep_csv

PROG = "agehopf"

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["params"],
    "properties": {
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["Lambda", "mu", "K", "alpha", "m", "sigma", "eta"],
            "properties": {k: _NUM for k in ("Lambda", "mu", "r", "K", "alpha", "m", "sigma", "eta")},
        },
        "tau": _POS,
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "form": {"enum": ["original", "rescaled"]},
                "da": _POS,
                "dt_divisor": {"type": "integer", "minimum": 1},
                "t_end": _POS,
                "sample_every": _POS,
                "t_transient": {"type": "number", "minimum": 0},
                "dde_history": {"enum": ["constant", "renewal"]},
                "initial": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "u0_coef": {"type": "number", "minimum": 0},
                        "u0_rate": _POS,
                        "V0": {"type": "number", "minimum": 0},
                        "frame": {"enum": ["original", "simulation"]},
                    },
                },
            },
        },
        "hopf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"k_max": {"type": "integer", "minimum": 0}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trajectory": {"type": "string"},
                "snapshots": {"type": ["string", "null"]},
                "snapshot_every": _POS,
                "sweep": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class OutputSpec:
    trajectory: str | None = None
    snapshots: str | None = None
    snapshot_every: float = 1.0
    sweep: str | None = None


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    tau: float | None = None
    sim: SimSettings = field(default_factory=SimSettings)
    k_max: int = hopf_mod.DEFAULT_K_MAX
    output: OutputSpec = field(default_factory=OutputSpec)


def _schema_message(err: jsonschema.ValidationError) -> str:
    where = ".".join(str(x) for x in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise SchemaError(_schema_message(errors[0]))

    params = validate(doc["params"])
    s = doc.get("sim", {})
    init = InitialData(**s.get("initial", {}))
    sim_kw = {k: v for k, v in s.items() if k != "initial"}
    if "form" in sim_kw:
        sim_kw["form"] = Form.parse(sim_kw["form"])
    sim = SimSettings(initial=init, **sim_kw)
    out = OutputSpec(**doc.get("output", {}))
    return RunConfig(
        params=params,
        tau=doc.get("tau"),
        sim=sim,
        k_max=doc.get("hopf", {}).get("k_max", hopf_mod.DEFAULT_K_MAX),
        output=out,
    )


def load_config(path: str) -> RunConfig:
    """Read a config file; a bare name falls back to the bundled configs."""
    p = Path(path)
    if p.is_file():
        return parse_config(p.read_text())
    bundled = resources.files("agehopf") / "configs" / p.name
    if p.parent == Path(".") and bundled.is_file():
        return parse_config(bundled.read_text())
    raise ConfigError(f"config file not found: {path}")


# ------------------------------------------------------------------ output


def _g6(x) -> str:
    return format(x, ".6g")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "U", "V"))
    for t, U, V in zip(traj.t, traj.U, traj.V):
        w.writerow((_g17(t), _g17(U), _g17(V)))
    return buf.getvalue()


def snapshots_csv(traj: Trajectory) -> str:
    """Long format: one row per (snapshot time, age node)."""
    ages = traj.meta.get("ages")
    if not traj.snapshots or ages is None:
        raise ConfigError("no snapshots recorded (use the PDE solver with --snapshots)")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "a", "u"))
    for t, u in traj.snapshots:
        ts = _g17(t)
        for a, val in zip(ages, u):
            w.writerow((ts, _g17(a), _g17(val)))
    return buf.getvalue()


def _emit(text: str, dest: str, stdout) -> None:
    if dest == "-":
        stdout.write(text)
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


class UsageError(ConfigError):
    pass


def _need_tau(args, cfg: RunConfig) -> float:
    tau = args.tau if getattr(args, "tau", None) is not None else cfg.tau
    if tau is None:
        raise UsageError("tau not given (use --tau or the config's tau)")
    if not tau > 0:
        raise UsageError(f"tau must be positive, got {tau}")
    return float(tau)


def cmd_equilibria(args, cfg: RunConfig, out) -> int:
    p = cfg.params
    tau = args.tau if args.tau is not None else cfg.tau
    # the original-frame profile does not depend on tau
    t_ref = 1.0 if tau is None else float(tau)
    eq = positive_equilibrium(p, t_ref, Form.ORIGINAL)
    print("positive equilibrium", file=out)
    print(f"  V_bar          {_g6(eq.V_bar)}", file=out)
    print(f"  U_star         {_g6(eq.U_star)}", file=out)
    print(f"  original       u(a) = {_g6(eq.coef)} exp(-{_g6(eq.rate)} a)", file=out)
    if tau is not None:
        er = positive_equilibrium(p, t_ref, Form.RESCALED)
        print(f"  rescaled tau={_g6(tau)}  u(a) = {_g6(er.coef)} exp(-{_g6(er.rate)} a)", file=out)
        print(f"  residual       {equilibrium_residual(p, t_ref, er):.3e}", file=out)
    tr = trivial_equilibrium(p, t_ref, Form.ORIGINAL)
    print("trivial equilibrium (predator-free)", file=out)
    print(f"  V              {_g6(tr.V_bar)}", file=out)
    print(f"  prey age       v(a) = {_g6(tr.coef)} exp(-{_g6(tr.rate)} a)", file=out)
    return 0


def cmd_coeffs(args, cfg: RunConfig, out) -> int:
    p = cfg.params
    c = char_coeffs(p)
    rep = check_assumptions(p)
    for name in ("p1", "p0", "q1", "q0"):
        print(f"{name:<16}{_g6(getattr(c, name))}", file=out)
    print(f"{'p0+q0':<16}{_g6(c.p0 + c.q0)}", file=out)
    print(f"{'p0-q0':<16}{_g6(c.p0 - c.q0)}", file=out)
    print(f"{'margin mr eta-(alpha eta-1)':<30}{_g6(rep.margin_existence_upper)}", file=out)
    print(f"{'margin alpha eta-1':<30}{_g6(rep.margin_existence_lower)}", file=out)
    print(f"{'margin hopf':<30}{_g6(rep.margin_hopf)}", file=out)
    return 0


def cmd_hopf(args, cfg: RunConfig, out) -> int:
    k_max = args.k_max if args.k_max is not None else cfg.k_max
    res = hopf_mod.analyze(cfg.params, k_max=k_max)
    print(f"{'omega0':<22}{_g6(res.omega0)}", file=out)
    print(f"{'theta roots':<22}{', '.join(_g6(t) for t in res.theta_roots)}", file=out)
    for k, tk in enumerate(res.tau_ks):
        print(f"{f'tau_{k}':<22}{_g6(tk)}", file=out)
    print(f"{'branch':<22}{'upper' if res.branch_upper else 'lower'}", file=out)
    print(f"{'transversality':<22}{_g6(res.transversality_value)}", file=out)
    print(f"{'simple-root margin':<22}{_g6(res.simple_root_margin)}", file=out)
    print(f"{'period 2pi/omega0':<22}{_g6(res.period)}", file=out)
    return 0


def _parse_floats(text: str, n: int | None = None, what: str = "list") -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} numbers, got {len(vals)}")
    if not vals:
        raise UsageError(f"{what} is empty")
    return vals


def cmd_roots(args, cfg: RunConfig, out) -> int:
    p = cfg.params
    tau = _need_tau(args, cfg)
    c = char_coeffs(p)
    if args.region:
        re_min, re_max, im_max = _parse_floats(args.region, 3, "--region")
    else:
        R = root_modulus_bound(c)
        re_min, re_max, im_max = -0.5 * p.nu, R, R
    region = SearchRegion(re_min, re_max, im_max)
    roots = find_roots(c, tau, region, spacing=args.spacing, nu=p.nu)
    print(f"roots of g in [{_g6(re_min)}, {_g6(re_max)}] x [-{_g6(im_max)}, {_g6(im_max)}] at tau={_g6(tau)}",
          file=out)
    for r in roots:
        z = r.value
        print(f"  {z.real: .6g} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.6g}i"
              f"  |g|={r.residual:.1e}", file=out)
    n = count_unstable_roots(c, tau)
    print(f"unstable count  {n}", file=out)
    return 0


def _sim_settings(args, cfg: RunConfig) -> SimSettings:
    sim = cfg.sim
    changes = {}
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = args.t_end
    if getattr(args, "da", None) is not None:
        changes["da"] = args.da
    if getattr(args, "form", None) is not None:
        changes["form"] = Form.parse(args.form)
    return replace(sim, **changes) if changes else sim


def cmd_simulate(args, cfg: RunConfig, out) -> int:
    tau = _need_tau(args, cfg)
    sim = _sim_settings(args, cfg)
    dest = args.out or cfg.output.trajectory
    if dest is None:
        raise UsageError("no output path (use --out or output.trajectory)")
    snap_dest = args.snapshots or cfg.output.snapshots
    kw = {}
    if snap_dest:
        if args.solver != "pde":
            raise UsageError("snapshots are only available from the PDE solver")
        kw["snapshot_every"] = args.snapshot_every or cfg.output.snapshot_every
    traj = run_simulation(cfg.params, tau, sim, args.solver, **kw)
    _emit(trajectory_csv(traj), dest, out)
    if snap_dest:
        _emit(snapshots_csv(traj), snap_dest, out)

    summary = sys.stderr if "-" in (dest, snap_dest) else out
    if sim.t_transient < traj.t[-1]:
        met = metrics(traj, sim.t_transient)
        period = "none" if met.period is None else _g6(met.period)
        print(f"amplitude_V={_g6(met.amplitude_V)} mean_V={_g6(met.mean_V)} "
              f"amplitude_U={_g6(met.amplitude_U)} mean_U={_g6(met.mean_U)} "
              f"period={period} converged={str(met.converged).lower()}", file=summary)
    return 0


def cmd_sweep(args, cfg: RunConfig, out) -> int:
    tau = _need_tau(args, cfg)
    dest = args.out or cfg.output.sweep
    if dest is None:
        raise UsageError("no output path (use --out or output.sweep)")
    values = _parse_floats(args.values, what="--values")
    try:
        spec = SweepSpec(cfg.params, tau, args.param, tuple(values), _sim_settings(args, cfg), args.solver)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_sweep(spec, n_jobs=args.jobs)
    _emit(sweep_csv(args.param, rows), dest, out)
    return 0


def cmd_verify(args, cfg: RunConfig, out) -> int:
    checks: list[IdentityCheck] = run_identity_suite(args.samples, args.seed)
    checks += check_point(cfg.params, cfg.tau if cfg.tau is not None else 1.0)
    for chk in checks:
        print(chk.line(), file=out)
    ok = all(c.passed for c in checks)
    print("all identities pass" if ok else "identity suite FAILED", file=out)
    return 0 if ok else 4


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit 2."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog=PROG, description="Age-structured predator-prey Hopf analysis and simulation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON run configuration (path or bundled name)")
        sp.set_defaults(func=func)
        return sp

    sp = add("equilibria", cmd_equilibria, "print the positive and trivial equilibria")
    sp.add_argument("--tau", type=float)
    add("coeffs", cmd_coeffs, "print characteristic coefficients and assumption margins")
    sp = add("hopf", cmd_hopf, "critical frequency, critical delays and crossing checks")
    sp.add_argument("--k-max", type=int, dest="k_max")
    sp = add("roots", cmd_roots, "roots of the characteristic function at a delay")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--region", help="re_min,re_max,im_max (write --region=-0.05,1,1 for a negative start)")
    sp.add_argument("--spacing", type=float, default=0.05)
    sp = add("simulate", cmd_simulate, "simulate and write the trajectory CSV")
    sp.add_argument("--solver", choices=("pde", "dde"), default="pde")
    sp.add_argument("--out")
    sp.add_argument("--snapshots", help="write age-profile snapshots (PDE only)")
    sp.add_argument("--snapshot-every", type=float, dest="snapshot_every")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--t-end", type=float, dest="t_end")
    sp.add_argument("--da", type=float)
    sp.add_argument("--form", choices=("original", "rescaled"))
    sp = add("sweep", cmd_sweep, "one-at-a-time parameter sweep to CSV")
    sp.add_argument("--param", required=True, choices=SWEEPABLE)
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--out")
    sp.add_argument("--solver", choices=("pde", "dde"), default="pde")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--t-end", type=float, dest="t_end")
    sp.add_argument("--jobs", type=int, default=1)
    sp = add("verify", cmd_verify, "run the internal identity suite")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=20240501)
    return ap


def _error_line(exc: BaseException, code: int) -> str:
    msg = " ".join(str(exc).split())
    return f"{PROG}: error exit={code} kind={type(exc).__name__} msg={msg}"


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        return args.func(args, cfg, stdout)
    except AgeHopfError as exc:
        print(_error_line(exc, exc.exit_code), file=stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        # invalid values reaching library code, unreadable or unwritable files
        print(_error_line(exc, 2), file=stderr)
        return 2
    except ArithmeticError as exc:
        print(_error_line(exc, 4), file=stderr)
        return 4


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
