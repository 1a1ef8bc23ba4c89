from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from ..errors import InsufficientData, MismatchedSampling
from .types import OscillationMetrics, Trajectory

PEAK_PROMINENCE = 1e-3
CONVERGED_RATIO = 1e-3


def peak_times(t: np.ndarray, y: np.ndarray, prominence: float) -> np.ndarray:
    """Times of strict local maxima, refined by a parabola through 3 samples."""
    idx, _ = find_peaks(y, prominence=prominence)
    if len(idx) == 0:
        return np.empty(0)
    dt = t[1] - t[0]
    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    curv = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(curv != 0, 0.5 * (y0 - y2) / curv, 0.0)
    return t[idx] + np.clip(shift, -0.5, 0.5) * dt


def metrics(traj: Trajectory, t_transient: float) -> OscillationMetrics:
    """Amplitude, mean and period of the samples at or after ``t_transient``."""
    if len(traj.t) == 0 or t_transient >= traj.t[-1]:
        raise InsufficientData("t_transient is not before the final sample")
    sel = traj.t >= t_transient
    if sel.sum() < 3:
        raise InsufficientData("fewer than 3 samples after the transient")
    t, U, V = traj.t[sel], traj.U[sel], traj.V[sel]
    mean_U = float(U.mean())
    mean_V = float(V.mean())
    amp_U = float(U.max() - U.min())
    amp_V = float(V.max() - V.min())

    peaks = peak_times(t, V, PEAK_PROMINENCE * abs(mean_V))
    period = float(np.mean(np.diff(peaks))) if len(peaks) >= 3 else None
    return OscillationMetrics(
        amplitude_U=amp_U,
        amplitude_V=amp_V,
        mean_U=mean_U,
        mean_V=mean_V,
        period=period,
        converged=bool(amp_V < CONVERGED_RATIO * abs(mean_V)),
    )


def compare(a: Trajectory, b: Trajectory) -> float:
    """Largest relative discrepancy ``|x_a - x_b| / (1 + |x_a|)`` over U and V."""
    if len(a.t) != len(b.t) or not np.allclose(a.t, b.t, rtol=0, atol=1e-9 * max(1.0, abs(a.t[-1]))):
        raise MismatchedSampling("trajectories are not sampled at the same times")
    dU = np.abs(a.U - b.U) / (1 + np.abs(a.U))
    dV = np.abs(a.V - b.V) / (1 + np.abs(a.V))
    return float(max(dU.max(), dV.max()))


def quarter_amplitudes(traj: Trajectory, var: str = "V"):
    """Amplitudes over the last and the previous quarter of the run."""
    y = getattr(traj, var)
    t = traj.t
    T = t[-1]
    last = y[t >= 0.75 * T]
    prev = y[(t >= 0.5 * T) & (t < 0.75 * T)]
    return float(np.ptp(last)), float(np.ptp(prev))
