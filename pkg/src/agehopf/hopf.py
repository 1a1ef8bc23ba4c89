"""Critical frequency, critical delays and crossing conditions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import AmbiguousTheta, CosineOutOfRange, NoPositiveTheta
from .model import ModelParams
from .spectral import CharCoeffs, char_coeffs, count_unstable_roots, g_prime

NEAR_CRITICAL_WINDOW = 1e-3
DEFAULT_K_MAX = 5


def theta_roots(c: CharCoeffs) -> list[float]:
    """Real roots of ``theta**2 + b*theta + c0``, largest first.

    ``theta`` is the squared frequency of a purely imaginary eigenvalue.
    Complex roots give an empty list.
    """
    b = c.p1**2 - 2 * c.p0 - c.q1**2
    c0 = c.p0**2 - c.q0**2
    disc = b * b - 4 * c0
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # avoid cancellation in the smaller-magnitude root
    if b >= 0:
        big = -(b + sq) / 2
    else:
        big = (-b + sq) / 2
    small = c0 / big if big != 0 else 0.0
    return sorted([big, small], reverse=True)


def omega0(c: CharCoeffs) -> float:
    """Crossing frequency: square root of the unique positive theta root."""
    roots = [t for t in theta_roots(c) if t > 0]
    if not roots:
        raise NoPositiveTheta("no positive root of the frequency quadratic")
    if len(roots) == 2:
        candidates = []
        for th in roots:
            w = math.sqrt(th)
            try:
                ladder = [tau_k(c, w, k) for k in range(DEFAULT_K_MAX + 1)]
            except CosineOutOfRange:
                ladder = []
            candidates.append((w, ladder))
        raise AmbiguousTheta("two positive roots of the frequency quadratic", candidates)
    return math.sqrt(roots[0])


def _cos_sin(c: CharCoeffs, w: float):
    den = c.q1**2 * w * w + c.q0**2
    cos_v = ((c.q0 - c.p1 * c.q1) * w * w - c.p0 * c.q0) / den
    sin_v = w * (c.q1 * w * w + c.p1 * c.q0 - c.p0 * c.q1) / den
    return cos_v, sin_v


def tau_k(c: CharCoeffs, omega0: float, k: int) -> float:
    """k-th critical delay (original time units) for the frequency ``omega0``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    cos_v, sin_v = _cos_sin(c, omega0)
    if abs(cos_v) > 1.0:
        if abs(cos_v) - 1.0 > 1e-10:
            raise CosineOutOfRange(f"cosine {cos_v!r} outside [-1, 1]")
        cos_v = math.copysign(1.0, cos_v)
    phase = math.acos(cos_v)
    if sin_v < 0:
        phase = 2 * math.pi - phase
    return (phase + 2 * k * math.pi) / omega0


def branch_upper(c: CharCoeffs, omega0: float) -> bool:
    """True when the principal arccos branch applies (sine term >= 0)."""
    return _cos_sin(c, omega0)[1] >= 0


def transversality(c: CharCoeffs, omega0: float) -> float:
    """Quantity whose sign is that of ``dRe(zeta)/dtau`` at each crossing."""
    return (2 * omega0**2 + c.p1**2 - 2 * c.p0 - c.q1**2) / (
        (c.q1 * omega0) ** 2 + c.q0**2
    )


def simple_root_check(c: CharCoeffs, omega0: float, tau: float) -> float:
    """``|g'(i omega0)|`` at ``tau``; nonzero means the crossing root is simple."""
    return abs(g_prime(c, 1j * omega0, tau))


@dataclass(frozen=True)
class HopfResult:
    omega0: float
    theta_roots: list
    tau_ks: list
    branch_upper: bool
    transversality_value: float
    simple_root_margin: float
    coeffs: CharCoeffs = field(repr=False, default=None)

    @property
    def period(self) -> float:
        """Linear-theory oscillation period in original time."""
        return 2 * math.pi / self.omega0


def analyze(p: ModelParams, k_max: int = DEFAULT_K_MAX) -> HopfResult:
    c = char_coeffs(p)
    w = omega0(c)
    taus = [tau_k(c, w, k) for k in range(k_max + 1)]
    return HopfResult(
        omega0=w,
        theta_roots=theta_roots(c),
        tau_ks=taus,
        branch_upper=branch_upper(c, w),
        transversality_value=transversality(c, w),
        simple_root_margin=simple_root_check(c, w, taus[0]),
        coeffs=c,
    )


class Regime(str, enum.Enum):
    STABLE = "StableFocusOrNode"
    UNSTABLE = "Unstable"
    NEAR_CRITICAL = "NearCritical"


@dataclass(frozen=True)
class StabilityVerdict:
    regime: Regime
    tau: float
    count: int | None = None
    k: int | None = None
    distance: float | None = None

    def __str__(self):
        if self.regime is Regime.UNSTABLE:
            return f"Unstable({self.count})"
        if self.regime is Regime.NEAR_CRITICAL:
            return f"NearCritical(k={self.k}, distance={self.distance:.3g})"
        return self.regime.value


def classify(p: ModelParams, tau: float, k_max: int = DEFAULT_K_MAX) -> StabilityVerdict:
    c = char_coeffs(p)
    try:
        w = omega0(c)
        ladder = [tau_k(c, w, k) for k in range(k_max + 1)]
    except NoPositiveTheta:
        ladder = []
    except AmbiguousTheta as exc:
        ladder = [t for _, lad in exc.candidates for t in lad]
    for k, tk in enumerate(ladder):
        if abs(tau - tk) < NEAR_CRITICAL_WINDOW:
            return StabilityVerdict(Regime.NEAR_CRITICAL, tau, k=k % (k_max + 1), distance=tau - tk)
    n = count_unstable_roots(c, tau)
    if n == 0:
        return StabilityVerdict(Regime.STABLE, tau, count=0)
    return StabilityVerdict(Regime.UNSTABLE, tau, count=n)
