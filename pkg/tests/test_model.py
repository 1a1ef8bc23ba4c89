import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from agehopf.errors import InconsistentGrowthRate, NonPositiveParameter, NoPositiveEquilibrium, ParameterError
from agehopf.model import (
    AgeProfile,
    Form,
    beta_star,
    check_assumptions,
    equilibrium_residual,
    fertility_threshold,
    positive_equilibrium,
    rescale_state,
    trivial_equilibrium,
    unscale_state,
    validate,
)

from conftest import BENCH_RAW


def test_validate_derives_r_and_nu(bench):
    assert bench.r == pytest.approx(1.0, abs=1e-15)
    assert bench.nu == 0.2


@pytest.mark.parametrize("key", ["Lambda", "lambda", "lambda_birth"])
def test_validate_accepts_birth_rate_aliases(key):
    raw = dict(BENCH_RAW)
    raw[key] = raw.pop("Lambda")
    assert validate(raw).lambda_birth == 1.2


def test_validate_rejects_unknown_and_missing():
    with pytest.raises(ParameterError, match="speed"):
        validate({**BENCH_RAW, "speed": 1.0})
    raw = dict(BENCH_RAW)
    del raw["K"]
    with pytest.raises(ParameterError, match="K"):
        validate(raw)


@pytest.mark.parametrize("key, value", [("K", 0.0), ("sigma", -1.0), ("alpha", math.nan), ("m", math.inf)])
def test_validate_rejects_nonpositive(key, value):
    with pytest.raises(NonPositiveParameter):
        validate({**BENCH_RAW, key: value})


def test_growth_rate_consistency():
    assert validate({**BENCH_RAW, "r": 1.0}).r == pytest.approx(1.0)
    with pytest.raises(InconsistentGrowthRate):
        validate({**BENCH_RAW, "r": 0.9})
    with pytest.raises(InconsistentGrowthRate):
        validate({**BENCH_RAW, "mu": 1.2})


def test_replace_revalidates(bench):
    q = bench.replace(alpha=2.5)
    assert q.alpha == 2.5 and q.K == bench.K
    with pytest.raises(NonPositiveParameter):
        bench.replace(m=-1.0)


def test_margins_benchmark(bench):
    rep = check_assumptions(bench)
    assert rep.positive_equilibrium_exists and rep.hopf_feasible
    assert rep.margin_existence_upper == pytest.approx(0.31, abs=1e-12)
    assert rep.margin_existence_lower == pytest.approx(1.35, abs=1e-12)
    assert rep.margin_hopf == pytest.approx(0.8245, abs=1e-12)


def test_margins_infeasible(bench):
    assert not check_assumptions(bench.replace(alpha=0.9)).positive_equilibrium_exists
    rep = check_assumptions(bench.replace(m=10.0))
    assert rep.positive_equilibrium_exists and not rep.hopf_feasible


@pytest.mark.parametrize("sigma, tau", [(0.5, 2.0), (0.5, 0.9), (1.3, 0.1), (0.05, 4.0)])
def test_beta_star_normalisation(sigma, tau):
    val, _ = quad(lambda a: beta_star(sigma, tau) * math.exp(-sigma * a), tau, math.inf)
    assert val == pytest.approx(1.0, rel=1e-10)


def test_fertility_threshold():
    assert fertility_threshold(Form.RESCALED, 2.0) == 1.0
    assert fertility_threshold("original", 2.0) == 2.0


def test_profile_tail_mass_matches_quadrature():
    prof = AgeProfile(30.3745, 1.0)
    val, _ = quad(prof, 1.0, math.inf)
    assert prof.tail_mass(1.0) == pytest.approx(val, rel=1e-12)


def test_profile_rescale_roundtrip():
    prof = AgeProfile(15.18725, 0.5)
    back = prof.rescaled(2.0).unscaled(2.0)
    assert back.coef == pytest.approx(prof.coef) and back.rate == pytest.approx(prof.rate)
    # the rescaled profile at age a/tau carries tau times the density
    assert prof.rescaled(2.0)(0.7) == pytest.approx(2.0 * prof(1.4))


def test_positive_equilibrium_benchmark(bench):
    eq = positive_equilibrium(bench, 2.0, Form.ORIGINAL)
    assert eq.V_bar == pytest.approx(37.34939759036143, rel=1e-13)
    assert eq.U_star == pytest.approx(30.374510088546945, rel=1e-13)
    assert eq.rate == 0.5
    r2 = positive_equilibrium(bench, 2.0)
    assert r2.coef == pytest.approx(30.374510088546945, rel=1e-13)
    assert r2.rate == pytest.approx(1.0)
    assert positive_equilibrium(bench, 0.9).coef == pytest.approx(13.6685, abs=1e-4)


@pytest.mark.parametrize("form", list(Form))
@pytest.mark.parametrize("tau", [0.3, 0.9, 2.0, 5.0])
def test_equilibrium_residuals(bench, form, tau):
    assert equilibrium_residual(bench, tau, positive_equilibrium(bench, tau, form)) < 1e-12
    assert equilibrium_residual(bench, tau, trivial_equilibrium(bench, tau, form)) < 1e-12


def test_equilibrium_residual_flags_wrong_state(bench):
    eq = positive_equilibrium(bench, 2.0)
    from dataclasses import replace

    assert equilibrium_residual(bench, 2.0, replace(eq, V_bar=eq.V_bar * 1.01)) > 1e-3


def test_trivial_equilibrium(bench):
    tr = trivial_equilibrium(bench, 2.0, Form.ORIGINAL)
    assert tr.V_bar == bench.K
    assert tr.U_star == 0.0
    assert tr.total == pytest.approx(bench.K)


def test_no_positive_equilibrium(bench):
    with pytest.raises(NoPositiveEquilibrium):
        positive_equilibrium(bench.replace(alpha=0.9), 2.0)


def test_rescale_state_roundtrip():
    a = np.linspace(0, 10, 11)
    u = np.exp(-a)
    t, a2, u2, V = rescale_state(4.0, a, u, 3.0, tau=2.0)
    assert t == 2.0 and np.allclose(a2, a / 2) and np.allclose(u2, 2 * u) and V == 3.0
    t, a3, u3, _ = unscale_state(t, a2, u2, V, tau=2.0)
    assert t == 4.0 and np.allclose(a3, a) and np.allclose(u3, u)


feasible = st.tuples(
    st.floats(1.5, 5.0),   # alpha
    st.floats(0.2, 1.5),   # sigma
    st.floats(10.0, 400.0),  # K
    st.floats(0.05, 5.0),  # tau
)


@settings(max_examples=200, deadline=None)
@given(feasible, st.sampled_from(list(Form)))
def test_equilibrium_residual_property(args, form):
    alpha, sigma, K, tau = args
    # choose m inside the existence window so a positive equilibrium exists
    m = 1.5 * (alpha - 1.0)
    p = validate({**BENCH_RAW, "alpha": alpha, "sigma": sigma, "K": K, "m": m})
    eq = positive_equilibrium(p, tau, form)
    assert eq.V_bar > 0 and eq.U_star > 0
    assert equilibrium_residual(p, tau, eq) < 1e-10
