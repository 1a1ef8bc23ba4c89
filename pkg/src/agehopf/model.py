"""Parameters, assumption checks, equilibria and coordinate maps.

The predator is structured by age ``a`` with mortality ``sigma``; newborns
enter through a ratio-dependent (Michaelis-Menten) renewal condition and
fertility is a step at the maturation age ``tau``.  Two coordinate frames
are supported:

* ``Form.ORIGINAL``: physical time and age, fertility threshold at ``tau``.
* ``Form.RESCALED``: time and age divided by ``tau`` and densities
  multiplied by ``tau``, so the fertility threshold sits at age 1 and all
  rates carry a factor ``tau``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    InconsistentGrowthRate,
    NoPositiveEquilibrium,
    NonPositiveParameter,
    ParameterError,
)


class Form(str, enum.Enum):
    ORIGINAL = "original"
    RESCALED = "rescaled"

    @classmethod
    def parse(cls, value) -> "Form":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown form {value!r}; expected 'original' or 'rescaled'") from None


@dataclass(frozen=True)
class ModelParams:
    """The eight biological constants.

    ``r`` and ``nu`` are derived: ``r = lambda_birth - mu`` and
    ``nu = min(sigma, mu)``.  Build instances with :func:`validate`.
    """

    lambda_birth: float
    mu: float
    K: float
    alpha: float
    m: float
    sigma: float
    eta: float
    r: float = field(init=False)
    nu: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "r", self.lambda_birth - self.mu)
        object.__setattr__(self, "nu", min(self.sigma, self.mu))

    def replace(self, **changes) -> "ModelParams":
        """Return a validated copy with some constants swapped."""
        raw = self.as_dict()
        raw.pop("r")
        raw.update(changes)
        return validate(raw)

    def as_dict(self) -> dict:
        return {
            "Lambda": self.lambda_birth,
            "mu": self.mu,
            "r": self.r,
            "K": self.K,
            "alpha": self.alpha,
            "m": self.m,
            "sigma": self.sigma,
            "eta": self.eta,
        }


# accepted spellings for the prey birth rate and the parameter names used by sweeps
_ALIASES = {
    "Lambda": "lambda_birth",
    "lambda": "lambda_birth",
    "lambda_birth": "lambda_birth",
    "mu": "mu",
    "K": "K",
    "alpha": "alpha",
    "m": "m",
    "sigma": "sigma",
    "eta": "eta",
    "r": "r",
}
_REQUIRED = ("lambda_birth", "mu", "K", "alpha", "m", "sigma", "eta")


def validate(raw: Mapping[str, float]) -> ModelParams:
    """Build :class:`ModelParams` from a mapping of constants.

    ``r`` may be supplied, but only as a consistency check against
    ``Lambda - mu`` (relative tolerance 1e-12).
    """
    values = {}
    for key, value in raw.items():
        if key not in _ALIASES:
            raise ParameterError(f"unknown parameter {key!r}")
        values[_ALIASES[key]] = float(value)
    for name in _REQUIRED:
        if name not in values:
            raise ParameterError(f"missing parameter {name!r}")
        v = values[name]
        if not math.isfinite(v) or v <= 0.0:
            raise NonPositiveParameter(f"{name} must be positive and finite, got {v!r}")

    r_derived = values["lambda_birth"] - values["mu"]
    if r_derived <= 0.0:
        raise InconsistentGrowthRate(
            f"r = Lambda - mu = {r_derived!r} must be positive"
        )
    if "r" in values:
        r_given = values["r"]
        if abs(r_given - r_derived) > 1e-12 * max(abs(r_given), abs(r_derived)):
            raise InconsistentGrowthRate(
                f"r = {r_given!r} disagrees with Lambda - mu = {r_derived!r}"
            )
    return ModelParams(**{k: values[k] for k in _REQUIRED})


def beta_star(sigma: float, tau: float) -> float:
    """Fertility level that normalises ``int_tau^inf beta* exp(-sigma a) da`` to 1."""
    if sigma <= 0 or tau < 0:
        raise ValueError("beta_star needs sigma > 0 and tau >= 0")
    return sigma * math.exp(sigma * tau)


@dataclass(frozen=True)
class AssumptionReport:
    positive_equilibrium_exists: bool
    hopf_feasible: bool
    margin_existence_upper: float
    margin_existence_lower: float
    margin_hopf: float


def check_assumptions(p: ModelParams) -> AssumptionReport:
    ae = p.alpha * p.eta
    mre = p.m * p.r * p.eta
    upper = mre - (ae - 1.0)
    lower = ae - 1.0
    hopf = (3.0 * ae + 1.0) * (ae - 1.0) - mre * (3.0 * ae - 1.0)
    exists = upper > 0.0 and lower > 0.0
    return AssumptionReport(
        positive_equilibrium_exists=exists,
        hopf_feasible=exists and hopf > 0.0,
        margin_existence_upper=upper,
        margin_existence_lower=lower,
        margin_hopf=hopf,
    )


@dataclass(frozen=True)
class AgeProfile:
    """Exponential age density ``coef * exp(-rate * a)``."""

    coef: float
    rate: float

    def __call__(self, a):
        return self.coef * np.exp(-self.rate * np.asarray(a, dtype=float))

    def tail_mass(self, a0: float = 0.0) -> float:
        """``int_{a0}^inf`` of the density."""
        return self.coef * math.exp(-self.rate * a0) / self.rate

    def rescaled(self, tau: float) -> "AgeProfile":
        """The same population expressed on the rescaled age axis."""
        return AgeProfile(self.coef * tau, self.rate * tau)

    def unscaled(self, tau: float) -> "AgeProfile":
        return AgeProfile(self.coef / tau, self.rate / tau)


@dataclass(frozen=True)
class EquilibriumProfile:
    """Steady state ``(coef * exp(-rate * a), V_bar)``.

    For ``kind == "positive"`` the profile is the predator density; for
    ``kind == "trivial"`` the predator is absent and the profile is the prey
    age density (whose total is ``V_bar``).
    """

    coef: float
    rate: float
    V_bar: float
    form: Form
    tau: float
    kind: str = "positive"

    @property
    def profile(self) -> AgeProfile:
        return AgeProfile(self.coef, self.rate)

    @property
    def total(self) -> float:
        return self.coef / self.rate

    @property
    def U_star(self) -> float:
        """Total predator population (zero on the trivial branch)."""
        return self.total if self.kind == "positive" else 0.0

    def density(self, a):
        return self.profile(a)


def _scale(form: Form, tau: float) -> float:
    return tau if form is Form.RESCALED else 1.0


def fertility_threshold(form: Form, tau: float) -> float:
    return 1.0 if Form.parse(form) is Form.RESCALED else tau


def positive_equilibrium(p: ModelParams, tau: float, form=Form.RESCALED) -> EquilibriumProfile:
    form = Form.parse(form)
    rep = check_assumptions(p)
    if not rep.positive_equilibrium_exists:
        raise NoPositiveEquilibrium(
            "no positive equilibrium: need m r eta > alpha eta - 1 > 0 "
            f"(margins {rep.margin_existence_upper:.6g}, {rep.margin_existence_lower:.6g})"
        )
    if tau <= 0:
        raise ValueError("tau must be positive")
    ae1 = p.alpha * p.eta - 1.0
    mre = p.m * p.r * p.eta
    coef = p.K * p.sigma * ae1 * (mre - ae1) / (p.m * p.m * p.r * p.eta)
    V_bar = p.K * (mre - ae1) / mre
    s = _scale(form, tau)
    return EquilibriumProfile(coef * s, p.sigma * s, V_bar, form, tau, "positive")


def trivial_equilibrium(p: ModelParams, tau: float, form=Form.RESCALED) -> EquilibriumProfile:
    """Predator-free state: prey at carrying capacity, age profile of rate mu."""
    form = Form.parse(form)
    if tau <= 0:
        raise ValueError("tau must be positive")
    s = _scale(form, tau)
    return EquilibriumProfile(s * p.mu * p.K, s * p.mu, p.K, form, tau, "trivial")


def _prey_growth(p: ModelParams, U: float, V: float) -> float:
    if V == 0.0:
        return 0.0
    return p.r * V * (1.0 - V / p.K) - p.alpha * V * U / (p.m * U + V)


def equilibrium_residual(p: ModelParams, tau: float, prof: EquilibriumProfile) -> float:
    """Largest relative violation of the steady-state relations.

    Checks the renewal condition at age 0, the decay rate of the profile
    against the mortality in the profile's frame, and the prey balance.
    """
    s = _scale(prof.form, tau)
    V = prof.V_bar
    if prof.kind == "trivial":
        V_from_profile = prof.total
        boundary = s * (p.lambda_birth * V - p.r / p.K * V * V)
        res = [
            abs(prof.coef - boundary) / max(abs(prof.coef), 1e-300),
            abs(prof.rate - s * p.mu) / (s * p.mu),
            abs(V_from_profile - V) / max(abs(V), 1e-300),
            abs(_prey_growth(p, 0.0, V)) / (p.r * max(V, 1e-300)),
        ]
        return max(res)

    U = prof.total
    thr = fertility_threshold(prof.form, tau)
    xi = beta_star(p.sigma, tau) * prof.profile.tail_mass(thr)
    boundary = s * p.eta * p.alpha * V * xi / (p.m * U + V)
    res = [
        abs(prof.coef - boundary) / max(abs(prof.coef), 1e-300),
        abs(prof.rate - s * p.sigma) / (s * p.sigma),
        abs(_prey_growth(p, U, V)) / (p.r * max(V, 1e-300)),
    ]
    return max(res)


def rescale_state(t, a, u, V, *, tau: float):
    """Map ``(t, a, u, V)`` from the original frame to the rescaled one."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return t / tau, a / tau, u * tau, V


def unscale_state(t, a, u, V, *, tau: float):
    if tau <= 0:
        raise ValueError("tau must be positive")
    return t * tau, a * tau, u / tau, V
