import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pools import random_joint
from smoothent import bounds
from smoothent.dist import FactorSequence, unconditional
from smoothent.errors import DomainError, TOutOfRange
from smoothent.spectrum import from_factors, from_joint, power, tail_mass
from smoothent.tightness import family

F3 = family(3).distribution


def test_epsilon_of_delta_examples():
    assert bounds.epsilon_of_delta(10, 0.0, 4) == 1.0
    # exponent -10 / (2 log2(5)^2)
    expected = 2.0 ** (-10.0 / (2 * math.log2(5) ** 2))
    assert bounds.epsilon_of_delta(1000, 0.1, 2) == pytest.approx(expected, rel=1e-14)
    assert bounds.epsilon_of_delta(1000, 0.1, 2) == pytest.approx(0.525801, abs=1e-6)


@pytest.mark.parametrize("n", [1, 10, 1000])
@pytest.mark.parametrize("delta", [0.01, 0.3, 1.5])
def test_delta_round_trip(n, delta):
    eps = bounds.epsilon_of_delta(n, delta, 5)
    assert bounds.delta_of_epsilon(n, eps, 5) == pytest.approx(delta, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        bounds.epsilon_of_delta(0, 0.1, 2)
    with pytest.raises(DomainError):
        bounds.delta_of_epsilon(10, 0.0, 2)
    with pytest.raises(TOutOfRange):
        bounds.mgf_log(F3, 1.0)
    with pytest.raises(DomainError):
        bounds.chernoff_optimize(F3, 10, 5.0)
    with pytest.raises(DomainError):
        bounds.r_t_eval(0.5, 0.0)


def test_mgf_examples():
    assert bounds.mgf_log(F3, 0.0) == (0.0, 0.0)
    for k in (1, 3, 5):
        u = unconditional([2.0**-k] * 2**k)
        for t in (-0.5 / math.log2(2**k + 3), 0.1 / math.log2(2**k + 3), 1 / math.log2(2**k + 3)):
            r = bounds.mgf_log(u, t)
            assert r.exact == pytest.approx(k * t, abs=1e-12)
            assert r.residual == pytest.approx(0.5 * t * t * math.log2(2**k + 3) ** 2, abs=1e-12)
    # two-term sum: half the mass at level 1, half at level 2
    r = bounds.mgf_log(F3, 0.2)
    assert r.exact == pytest.approx(math.log2(0.5 * 2**0.2 + 0.5 * 2**0.4), abs=1e-14)
    assert r.residual > 0


def test_chernoff_delta_zero():
    rep = bounds.chernoff_optimize(F3, 50, 0.0)
    assert rep.bound_value == 1.0 and rep.t_star == 0.0


def test_quadratic_exponent_reproduces_closed_form():
    for n, delta, size in ((100, 0.2, 3), (40, 0.7, 5), (7, 0.05, 17)):
        f = family(size).distribution
        t0 = delta / math.log2(size + 3) ** 2
        forced = bounds.chernoff_exponent(f, n, delta, t0, mgf="quadratic")
        assert 2.0**forced == pytest.approx(bounds.epsilon_of_delta(n, delta, size), rel=1e-12)


def test_chernoff_family_example():
    rep = bounds.chernoff_optimize(F3, 100, 0.2)
    closed = bounds.epsilon_of_delta(100, 0.2, 3)
    assert closed == pytest.approx(0.81264, abs=1e-5)
    s = power(from_joint(F3), 100)
    exact = tail_mass(s, s.source_entropy + 20, "above").mass
    assert exact <= rep.bound_value <= closed
    assert rep.t_star == pytest.approx(1 / math.log2(6))


def test_chernoff_factor_sequence_matches_repeat():
    fs = FactorSequence.repeat(F3, 30)
    a = bounds.chernoff_optimize(fs, None, 0.1)
    b = bounds.chernoff_optimize(F3, 30, 0.1)
    assert a.bound_value == b.bound_value


def test_report_json_and_holds():
    reps = bounds.tail_bound_reports(F3, 100, 0.2, power(from_joint(F3), 100))
    assert [r.name for r in reps] == ["upper_tail", "lower_tail"]
    assert all(r.holds for r in reps)
    t1 = bounds.smooth_entropy_bound_reports(150.0, 100, 0.2, 3, hmax=155.0, hmin=145.0)
    assert all(r.holds for r in t1)
    assert t1[0].to_json()["bound_value"] == pytest.approx(170.0)
    assert bounds.smooth_entropy_bound_reports(1.0, 1, 0.1, 2)[0].holds is None


def test_r_t_examples():
    assert bounds.r_t_eval(0.7, 1.0) == 0.0
    assert bounds.r_t_eval(0.0, 5.0) == 0.0
    assert bounds.r_t_eval(0.5, 4.0) == pytest.approx(2 - 0.5 * math.log(4) - 1, abs=1e-15)
    assert bounds.r_t_eval(0.5, 4.0) == pytest.approx(0.306853, abs=1e-6)


@pytest.mark.parametrize("check", [
    bounds.check_rt_monotone,
    bounds.check_rt_reflection,
    bounds.check_rt_concave,
    bounds.check_rt_quadratic,
])
def test_appendix_grids(check):
    rows = check()
    assert rows
    assert [r for r in rows if not r.holds] == []


def test_mgf_quadratic_on_family():
    for size in (3, 5, 17):
        f = family(size).distribution
        assert all(r.holds for r in bounds.check_mgf_quadratic(f))
        assert all(r.holds for r in bounds.check_centered_mgf(f))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(-1, 1))
def test_mgf_bound_on_random_joints(seed, frac):
    j = random_joint(np.random.default_rng(seed))
    t = frac / math.log2(j.x_size + 3)
    r = bounds.mgf_log(j, t)
    assert r.residual >= -1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12), st.floats(0.01, 1.0))
def test_chernoff_chain(seed, n, frac):
    j = random_joint(np.random.default_rng(seed), 3, 2)
    delta = frac * math.log2(j.x_size)
    s = power(from_joint(j), n)
    h = s.source_entropy
    closed = bounds.epsilon_of_delta(n, delta, j.x_size)
    for side, tail_side, thr in (("upper", "above", h + n * delta), ("lower", "below", h - n * delta)):
        c = bounds.chernoff_optimize(j, n, delta, side).bound_value
        assert tail_mass(s, thr, tail_side).mass <= c + 1e-12
        assert c <= closed + 1e-12 <= 1 + 1e-12


def test_mgf_residual_on_500_joints():
    rng = np.random.default_rng(500)
    worst = 0.0
    for _ in range(500):
        j = random_joint(rng)
        a = 1 / math.log2(j.x_size + 3)
        for t in np.linspace(-a, a, 11):
            r = bounds.mgf_log(j, float(t))
            worst = min(worst, r.residual)
            assert bounds.centered_log2_mgf(j, float(t)) <= 0.5 * t * t * math.log2(j.x_size + 3) ** 2 + 1e-12
    assert worst >= -1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 64), st.floats(0.05, 1.0))
def test_tail_below_closed_form_for_distinct_factors(seed, n, frac):
    rng = np.random.default_rng(seed)
    # probabilities in eighths keep the number of distinct level sums small
    pool = []
    for _ in range(3):
        cut = np.sort(rng.choice(np.arange(1, 8), size=2, replace=False))
        pool.append(unconditional(np.diff(np.concatenate(([0], cut, [8]))) / 8))
    fs = FactorSequence([pool[int(i)] for i in rng.integers(0, 3, size=n)])
    s = from_factors(fs)
    delta = frac * math.log2(3)
    closed = bounds.epsilon_of_delta(n, delta, 3)
    c_up = bounds.chernoff_optimize(fs, None, delta, "upper").bound_value
    c_lo = bounds.chernoff_optimize(fs, None, delta, "lower").bound_value
    assert tail_mass(s, s.source_entropy + n * delta, "above").mass <= c_up + 1e-12 <= closed + 2e-12
    assert tail_mass(s, s.source_entropy - n * delta, "below").mass <= c_lo + 1e-12 <= closed + 2e-12
