import math

import pytest

from agehopf.errors import AmbiguousTheta, CosineOutOfRange, NoPositiveTheta
from agehopf.hopf import (
    Regime,
    analyze,
    branch_upper,
    classify,
    omega0,
    simple_root_check,
    tau_k,
    theta_roots,
    transversality,
)
from agehopf.spectral import CharCoeffs, SearchRegion, char_coeffs, find_roots, g_eval


def test_theta_roots_benchmark(bench):
    c = char_coeffs(bench)
    th = theta_roots(c)
    assert th[0] == pytest.approx(0.0255495730057254, rel=1e-12)
    assert th[0] > th[1]
    # both solve theta^2 + b theta + c = 0
    b = c.p1**2 - 2 * c.p0 - c.q1**2
    cc = c.p0**2 - c.q0**2
    for t in th:
        assert abs(t * t + b * t + cc) < 1e-15


def test_omega0_and_tau0_benchmark(bench):
    c = char_coeffs(bench)
    w = omega0(c)
    assert w == pytest.approx(0.15984233796377417, rel=1e-12)
    assert tau_k(c, w, 0) == pytest.approx(1.9339777172857389, rel=1e-12)


def test_critical_root_on_imaginary_axis(bench):
    c = char_coeffs(bench)
    w = omega0(c)
    for k in range(4):
        assert abs(g_eval(c, 1j * w, tau_k(c, w, k))) < 1e-14


def test_ladder_spacing(bench):
    res = analyze(bench, k_max=5)
    gaps = [b - a for a, b in zip(res.tau_ks, res.tau_ks[1:])]
    for g in gaps:
        assert g == pytest.approx(2 * math.pi / res.omega0, rel=1e-12)
    assert res.period == pytest.approx(39.30864242365858, rel=1e-12)


def test_branch_and_trig_values(bench):
    c = char_coeffs(bench)
    w = omega0(c)
    assert branch_upper(c, w)
    phase = w * tau_k(c, w, 0)
    assert math.cos(phase) == pytest.approx(0.95259814805, abs=1e-9)
    assert math.sin(phase) == pytest.approx(0.30423, abs=1e-5)


def test_transversality_sign_matches_root_motion(bench):
    """Re of the critical root increases through tau0 (tracked by Newton)."""
    c = char_coeffs(bench)
    w = omega0(c)
    t0 = tau_k(c, w, 0)
    assert transversality(c, w) > 0
    h = 1e-3
    reals = []
    for tau in (t0 - h, t0 + h):
        roots = find_roots(c, tau, SearchRegion(-0.05, 0.05, 0.3))
        reals.append(max(r.value.real for r in roots))
    assert reals[0] < 0 < reals[1]


def test_simple_root(bench):
    c = char_coeffs(bench)
    w = omega0(c)
    assert simple_root_check(c, w, tau_k(c, w, 0)) > 0.1


def test_no_positive_theta(bench):
    with pytest.raises(NoPositiveTheta):
        omega0(char_coeffs(bench.replace(m=10.0)))


def test_ambiguous_theta_reports_both_ladders():
    c = CharCoeffs(0.1, 1.0, 0.5, 0.5)
    with pytest.raises(AmbiguousTheta) as info:
        omega0(c)
    cands = info.value.candidates
    assert len(cands) == 2
    for w, ladder in cands:
        assert w > 0 and len(ladder) >= 1
        assert abs(g_eval(c, 1j * w, ladder[0])) < 1e-12


def test_cosine_out_of_range():
    # with q0 = q1 = 0 the crossing equations have no solution for any omega
    c = CharCoeffs(1.0, 1.0, 1e-9, 1e-9)
    with pytest.raises(CosineOutOfRange):
        tau_k(c, 0.5, 0)


def test_classify_regimes(bench):
    assert classify(bench, 0.9).regime is Regime.STABLE
    v = classify(bench, 2.0)
    assert v.regime is Regime.UNSTABLE and v.count == 2
    assert str(v) == "Unstable(2)"
    near = classify(bench, 1.9339777172857389 + 1e-4)
    assert near.regime is Regime.NEAR_CRITICAL and near.k == 0
    assert near.distance == pytest.approx(1e-4, rel=1e-6)


def test_analyze_fields(bench):
    res = analyze(bench, k_max=2)
    assert len(res.tau_ks) == 3
    assert res.branch_upper and res.transversality_value > 0 and res.simple_root_margin > 0
