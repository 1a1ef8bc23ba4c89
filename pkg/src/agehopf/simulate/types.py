from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AgeGrid:
    """Uniform age grid with nodes ``0, da, ..., n_cells*da = a_max``.

    ``threshold_index`` is the node where fertility switches on.
    """

    a_max: float
    da: float
    n_cells: int
    threshold_index: int

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.da

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_cells + 1, self.da)
        w[0] = w[-1] = 0.5 * self.da
        return w


@dataclass(frozen=True)
class PdeState:
    t: float
    u: np.ndarray
    V: float
    U: float
    P: float


@dataclass(frozen=True)
class DdeState:
    t: float
    U: float
    P: float
    V: float
    birth_history: np.ndarray  # b on [t - delay, t], spacing dt


@dataclass
class Trajectory:
    t: np.ndarray
    U: np.ndarray
    V: np.ndarray
    snapshots: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.U = np.asarray(self.U, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if not (len(self.t) == len(self.U) == len(self.V)):
            raise ValueError("t, U, V lengths differ")
        if len(self.t) > 1:
            dt = np.diff(self.t)
            if np.any(dt <= 0):
                raise ValueError("sample times must increase strictly")
            if np.ptp(dt) > 1e-9 * max(1.0, abs(self.t[-1])):
                raise ValueError("sample times must be uniformly spaced")

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.U, self.V])

    @property
    def time_scale(self) -> float:
        """Factor converting this trajectory's time axis to original time."""
        return self.meta.get("tau", 1.0) if self.meta.get("form") == "rescaled" else 1.0


@dataclass(frozen=True)
class OscillationMetrics:
    amplitude_U: float
    amplitude_V: float
    mean_U: float
    mean_V: float
    period: float | None
    converged: bool
