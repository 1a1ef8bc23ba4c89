import math

import numpy as np
import pytest

from agehopf.errors import GridTooCoarse, InsufficientData, MismatchedSampling, NegativeDensity, StepNotDividingDelay
from agehopf.model import AgeProfile, Form, positive_equilibrium
from agehopf.simulate import (
    Trajectory,
    build_grid,
    compare,
    initial_state,
    metrics,
    peak_times,
    quarter_amplitudes,
    reduce_to_dde,
    simulate_dde,
    simulate_pde,
    step_pde,
)


def test_grid_shape(bench):
    g = build_grid(bench, 2.0, Form.RESCALED, 0.01)
    assert g.threshold_index == 100
    assert g.a_max >= 30.0 and g.ages[-1] == pytest.approx(g.a_max)
    w = g.trapezoid_weights()
    assert w.sum() == pytest.approx(g.a_max)
    # original frame: threshold sits at tau, decay rate sigma
    g2 = build_grid(bench, 2.0, Form.ORIGINAL, 0.02)
    assert g2.threshold_index == 100 and g2.a_max >= 60.0


def test_grid_errors(bench):
    with pytest.raises(GridTooCoarse):
        build_grid(bench, 2.0, Form.RESCALED, 0.2)
    with pytest.raises(ValueError):
        build_grid(bench, 2.0, Form.RESCALED, 0.03)  # does not divide the threshold
    with pytest.raises(ValueError):
        build_grid(bench, 2.0, Form.RESCALED, -0.01)


@pytest.mark.parametrize("form", list(Form))
def test_pde_equilibrium_is_stationary(bench, form):
    """The continuous equilibrium drifts only by the O(da^2) quadrature error."""
    tau = 1.5
    eq = positive_equilibrium(bench, tau, form)
    base = 0.01 if form is Form.RESCALED else 0.015
    t_end = 30.0 if form is Form.RESCALED else 45.0
    drift = []
    for da in (base, base / 2):
        grid = build_grid(bench, tau, form, da)
        traj = simulate_pde(bench, tau, form, grid, (eq.profile, eq.V_bar), t_end, 100 * base)
        drift.append(max(np.max(np.abs(traj.V / eq.V_bar - 1)), np.max(np.abs(traj.U / eq.U_star - 1))))
    assert drift[0] < 1e-4
    assert drift[0] / drift[1] > 3.5


def test_dde_equilibrium_is_stationary(bench):
    tau = 1.5
    eq = positive_equilibrium(bench, tau)
    for history in ("constant", "renewal"):
        traj = simulate_dde(bench, tau, Form.RESCALED, (eq.profile, eq.V_bar), 30.0, 1.0, history=history)
        assert np.max(np.abs(traj.V / eq.V_bar - 1)) < 1e-9


def test_step_pde_matches_simulate(bench):
    tau = 1.5
    grid = build_grid(bench, tau, Form.RESCALED, 0.01)
    u0 = AgeProfile(25.0, 1.0)
    s = initial_state(bench, tau, Form.RESCALED, grid, u0, 40.0)
    for _ in range(10):
        s = step_pde(s, bench, tau, Form.RESCALED, grid)
    traj = simulate_pde(bench, tau, Form.RESCALED, grid, (u0, 40.0), 0.1, 0.1)
    # simulate_pde averages the t=0 newborn node, so the two differ only slightly
    assert s.V == pytest.approx(traj.V[-1], rel=1e-4)
    assert s.t == pytest.approx(0.1)


def test_negative_initial_density(bench):
    grid = build_grid(bench, 1.5, Form.RESCALED, 0.01)
    with pytest.raises(NegativeDensity):
        initial_state(bench, 1.5, Form.RESCALED, grid, AgeProfile(-1.0, 1.0), 10.0)


def test_pde_stays_nonnegative(bench):
    grid = build_grid(bench, 2.0, Form.RESCALED, 0.01, min_decay=2.0)
    traj = simulate_pde(bench, 2.0, Form.RESCALED, grid, (AgeProfile(60.0, 2.0), 37.0), 100.0, 0.5,
                        snapshot_every=25.0)
    assert np.all(traj.U > 0) and np.all(traj.V > 0)
    assert len(traj.snapshots) == 5
    assert all(np.all(u >= 0) for _, u in traj.snapshots)


def test_dde_step_must_divide_delay(bench):
    eq = positive_equilibrium(bench, 2.0)
    with pytest.raises(StepNotDividingDelay):
        simulate_dde(bench, 2.0, Form.RESCALED, (eq.profile, eq.V_bar), 10.0, 1.0, dt=0.003)
    with pytest.raises(StepNotDividingDelay):
        simulate_dde(bench, 2.0, Form.RESCALED, (eq.profile, eq.V_bar), 10.0, 1.0, steps_per_delay=10)


def test_dde_reduction_scales(bench):
    rs = reduce_to_dde(bench, 2.0, Form.RESCALED)
    og = reduce_to_dde(bench, 2.0, Form.ORIGINAL)
    assert rs.delay == 1.0 and og.delay == 2.0
    assert rs.scale == 2.0 and og.scale == 1.0
    x = og.equilibrium_point()
    b = og.birth(*x)
    assert np.allclose(og.rhs(*x, b), 0.0, atol=1e-12)


def _pde_dde(bench, tau, da, t_end=60.0):
    init = (AgeProfile(30.3745, 1.0).rescaled(tau), 37.3494)
    grid = build_grid(bench, tau, Form.RESCALED, da, min_decay=init[0].rate)
    pde = simulate_pde(bench, tau, Form.RESCALED, grid, init, t_end, 0.1)
    dde = simulate_dde(bench, tau, Form.RESCALED, init, t_end, 0.1, history="renewal")
    return pde, dde


def test_pde_converges_to_dde_oracle(bench):
    errs = [compare(*_pde_dde(bench, 1.5, da)) for da in (0.02, 0.01, 0.005)]
    assert errs[2] < errs[1] < errs[0]
    order = math.log2(errs[1] / errs[2])
    assert order >= 1.0
    assert errs[2] < 1e-4


def test_frozen_coupling_is_first_order(bench):
    tau = 1.5
    init = (AgeProfile(30.3745, 1.0).rescaled(tau), 37.3494)
    dde = simulate_dde(bench, tau, Form.RESCALED, init, 60.0, 0.1, history="renewal")
    errs = []
    for da in (0.01, 0.005):
        grid = build_grid(bench, tau, Form.RESCALED, da, min_decay=init[0].rate)
        pde = simulate_pde(bench, tau, Form.RESCALED, grid, init, 60.0, 0.1, coupling="frozen")
        errs.append(compare(pde, dde))
    assert 1.6 < errs[0] / errs[1] < 2.4


def test_original_and_rescaled_frames_agree(bench):
    tau = 1.5
    u0 = AgeProfile(30.3745, 1.0)
    g_o = build_grid(bench, tau, Form.ORIGINAL, 0.0075, min_decay=1.0)
    g_r = build_grid(bench, tau, Form.RESCALED, 0.005, min_decay=1.5)
    a = simulate_pde(bench, tau, Form.ORIGINAL, g_o, (u0, 37.3494), 45.0, 1.5)
    b = simulate_pde(bench, tau, Form.RESCALED, g_r, (u0.rescaled(tau), 37.3494), 30.0, 1.0)
    assert np.allclose(a.V, b.V, rtol=1e-4)
    # U in the rescaled frame carries no extra factor: the age integral absorbs it
    assert np.allclose(a.U, b.U, rtol=1e-4)


def _sine(period=7.0, amp=2.0, mean=10.0, t_end=100.0, dt=0.05):
    t = np.arange(0.0, t_end + dt / 2, dt)
    return Trajectory(t, mean + 0.5 * amp * np.sin(2 * np.pi * t / period), mean + amp * np.sin(2 * np.pi * t / period))


def test_metrics_on_sinusoid():
    m = metrics(_sine(), 20.0)
    assert m.period == pytest.approx(7.0, rel=1e-4)
    assert m.amplitude_V == pytest.approx(4.0, rel=1e-3)
    assert m.mean_V == pytest.approx(10.0, abs=0.05)
    assert not m.converged


def test_metrics_constant_is_converged():
    t = np.arange(0, 50, 0.1)
    m = metrics(Trajectory(t, np.ones_like(t), 3 * np.ones_like(t)), 10.0)
    assert m.converged and m.period is None and m.amplitude_V == 0.0


def test_metrics_errors():
    with pytest.raises(InsufficientData):
        metrics(_sine(t_end=10.0), 10.0)


def test_peak_times_refined():
    t = np.arange(0, 20, 0.3)
    y = np.cos(2 * np.pi * (t - 0.1) / 5.0)
    pk = peak_times(t, y, 0.1)
    assert np.allclose(pk, [5.1, 10.1, 15.1], atol=0.02)


def test_compare_and_mismatch():
    a = _sine()
    assert compare(a, a) == 0.0
    with pytest.raises(MismatchedSampling):
        compare(a, _sine(t_end=50.0))


def test_quarter_amplitudes():
    q = quarter_amplitudes(_sine())
    assert q[0] == pytest.approx(q[1], rel=1e-2)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0, 1, 1], [0, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        Trajectory([0, 1, 3], [0, 0, 0], [0, 0, 0])
    tr = Trajectory([0, 1], [1, 2], [3, 4], meta={"form": "rescaled", "tau": 2.0})
    assert tr.time_scale == 2.0 and tr.samples.shape == (2, 3)
