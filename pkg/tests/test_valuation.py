import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    adapted_forward_value_by_quadrature,
    expectation_over_normal,
    skorokhod_value_by_vertices,
    value_by_maximization,
)

from insiderlab.paths import TimeGrid
from insiderlab.strategies import MarketParams, ParamCurves
from insiderlab.valuation import (
    Region,
    SignalDistribution,
    skorokhod_quadrature,
    unconditional_forward_closed,
    unconditional_forward_quadrature,
    unconditional_skorokhod,
    unconditional_skorokhod_erf,
    value_bb_or_forward_det,
    value_curve,
    value_forward_adapted_truncated,
    value_forward_noshort,
    value_honest_noshort,
    value_skorokhod,
)

positive_theta = st.tuples(
    st.floats(-0.1, 0.3),  # r
    st.floats(1e-4, 0.5),  # mu - r
    st.floats(0.05, 1.0),  # sigma
    st.floats(0.1, 5.0),  # T
).map(lambda x: MarketParams(x[0] + x[1], x[0], x[2], x[3]))


def test_honest_regions():
    v = value_honest_noshort(MarketParams(0.02, 0.02, 0.3, 1.0))
    assert v.total == 0.02 and v.region is Region.RISK_FREE_ONLY
    v = value_honest_noshort(MarketParams(0.03, 0.02, 0.3, 1.0))
    assert v.total == pytest.approx(0.0205556, abs=1e-7) and v.region is Region.INTERIOR
    v = value_honest_noshort(MarketParams(0.2, 0.02, 0.3, 1.0))
    assert v.total == pytest.approx(0.155, abs=1e-15) and v.region is Region.FULLY_INVESTED


def test_forward_and_skorokhod_examples(base_params):
    p = base_params
    assert value_forward_noshort(p, -p.theta).total == 0.02
    assert value_forward_noshort(p, 0.1).total == pytest.approx(0.028889, abs=1e-6)
    assert value_forward_noshort(p, 0.5).total == pytest.approx(0.135, abs=1e-15)
    assert value_skorokhod(p, -0.2).total == 0.02
    assert value_skorokhod(p, 0.5).total == pytest.approx(0.18, abs=1e-15)
    assert value_skorokhod(p, -p.theta + 1e-12).total == pytest.approx(0.02, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(p=positive_theta, b=st.floats(-10, 10))
def test_piecewise_values_match_maximization_oracle(p, b):
    ref = value_by_maximization(p.mu, p.r, p.sigma, p.T, b)
    assert value_forward_noshort(p, b).total == pytest.approx(ref, abs=1e-10)
    ref_sk = skorokhod_value_by_vertices(p.mu, p.r, p.sigma, p.T, b)
    assert value_skorokhod(p, b).total == pytest.approx(ref_sk, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(p=positive_theta, b=st.floats(-10, 10))
def test_ordering(p, b):
    sk = value_skorokhod(p, b).total
    fw = value_forward_noshort(p, b).total
    rT = p.r * p.T
    assert sk >= fw >= rT
    if b <= -p.theta * p.T:
        assert sk == fw == rT
    else:
        assert sk > fw


@settings(max_examples=200, deadline=None)
@given(p=positive_theta)
def test_continuity_at_breakpoints(p):
    for kink in (-p.theta * p.T, -p.theta * p.T + p.sigma * p.T):
        lo, hi = np.nextafter(kink, -np.inf), np.nextafter(kink, np.inf)
        for fn in (value_forward_noshort, value_skorokhod):
            assert abs(fn(p, hi).total - fn(p, lo).total) < 1e-12


def test_deterministic_integral_value(base_params):
    flat = ParamCurves(TimeGrid(1.0, 10), 0.02, 0.02, 0.3)
    assert value_bb_or_forward_det(flat, 0.0) == pytest.approx(0.02, abs=1e-16)
    c = ParamCurves.constant(base_params, 10)
    assert value_bb_or_forward_det(c, 0.1) == pytest.approx(
        value_forward_noshort(base_params, 0.1).total, abs=1e-14
    )
    g = TimeGrid(1.0, 50)
    sig = 0.3 + 0.1 * g.times
    low = value_bb_or_forward_det(ParamCurves(g, 0.03, 0.02, sig), 0.0)
    high = value_bb_or_forward_det(ParamCurves(g, 0.03, 0.02, 2 * sig), 0.0)
    assert high < low


def test_adapted_truncated_examples(base_params):
    p0 = MarketParams(0.03, 0.02, 0.3, 1.0)
    assert value_forward_adapted_truncated(p0, 0.3, 1.0) == 0.0
    v = value_forward_adapted_truncated(p0, 0.0, math.exp(-2))
    assert v == pytest.approx(0.58544, abs=1e-5)
    for eps in (1e-3, 1e-4):
        d = value_forward_adapted_truncated(p0, 0.2, eps / 2) - value_forward_adapted_truncated(p0, 0.2, eps)
        assert abs(d - 0.5 * math.log(2)) < 1e-3
    with pytest.raises(ValueError):
        value_forward_adapted_truncated(p0, 0.0, 0.0)
    with pytest.raises(ValueError):
        value_forward_adapted_truncated(p0, 0.0, 1.5)


@settings(max_examples=40, deadline=None)
@given(p=positive_theta, b=st.floats(-3, 3), frac=st.floats(1e-3, 0.9))
def test_adapted_truncated_matches_growth_integral(p, b, frac):
    eps = frac * p.T
    ref = adapted_forward_value_by_quadrature(p.mu, p.r, p.sigma, p.T, b, eps)
    assert value_forward_adapted_truncated(p, b, eps) == pytest.approx(ref, rel=1e-10, abs=1e-11)


def test_unconditional_skorokhod_reference_case(base_params):
    d = SignalDistribution(0.0, 1.0)
    closed = unconditional_skorokhod(base_params, d)
    assert closed == pytest.approx(0.144749, abs=1e-6)
    assert unconditional_skorokhod_erf(base_params) == pytest.approx(closed, abs=1e-14)
    assert skorokhod_quadrature(base_params, d) == pytest.approx(closed, abs=1e-9)


def test_unconditional_skorokhod_limits():
    d = SignalDistribution(0.0, 1.0)
    assert unconditional_skorokhod(MarketParams(0.02, 0.02, 1e-9, 1.0), d) == pytest.approx(0.02, abs=1e-8)
    # with mu > r a nearly riskless stock is always held and earns mu
    assert unconditional_skorokhod(MarketParams(0.03, 0.02, 1e-9, 1.0), d) == pytest.approx(0.03, abs=1e-8)
    tiny = MarketParams(0.02, 0.02, 1e-9, 1.0)
    assert unconditional_forward_quadrature(tiny, d).closed_form == pytest.approx(0.02, abs=1e-8)
    p = MarketParams(0.03, 0.02, 0.3, 1.0)
    far = unconditional_skorokhod(p, SignalDistribution(10.0, 1.0))
    assert far == pytest.approx(p.r + p.theta * p.sigma + p.sigma * 10.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(
    p=positive_theta,
    e=st.floats(-2, 2),
    v=st.floats(0.05, 10),
)
def test_unconditional_closed_forms_match_whole_line_quadrature(p, e, v):
    d = SignalDistribution(e, v)
    sk_ref = expectation_over_normal(
        lambda b: skorokhod_value_by_vertices(p.mu, p.r, p.sigma, p.T, b), e, v, [-p.theta * p.T]
    )
    assert unconditional_skorokhod(p, d) == pytest.approx(sk_ref, abs=1e-8)
    fw = unconditional_forward_quadrature(p, d)
    assert fw.closed_form == pytest.approx(fw.quadrature, abs=1e-8)
    assert fw.quadrature < unconditional_skorokhod(p, d)


def test_unconditional_forward_point_mass(base_params):
    d = SignalDistribution(0.5, 1e-10)
    assert unconditional_forward_closed(base_params, d) == pytest.approx(0.135, abs=1e-6)


def test_printed_forward_expression_is_reported_not_trusted(base_params):
    res = unconditional_forward_quadrature(base_params, SignalDistribution(0.0, 1.0))
    assert res.printed is not None
    assert res.quadrature == pytest.approx(0.1234415408, abs=1e-9)
    # the printed expression does not reproduce the integral
    assert abs(res.printed_discrepancy) > 1e-2
    assert unconditional_forward_quadrature(base_params, SignalDistribution(0.5, 1.0)).printed is None


def test_value_curve_table(base_params, tmp_path):
    p = base_params
    b = np.linspace(-p.theta, -p.theta + p.sigma, 31)
    tab = value_curve(p, b)
    assert tab.v_forward[0] == tab.v_skorokhod[0] == tab.v_riskfree[0] == 0.02
    assert np.all(tab.v_skorokhod >= tab.v_forward)
    np.testing.assert_allclose(tab.v_honest, 0.0205556, atol=1e-7)
    tab.to_csv(tmp_path / "v.csv")
    assert open(tmp_path / "v.csv").readline().strip() == "b,v_riskfree,v_honest,v_forward,v_skorokhod"


def test_value_curve_nonpositive_theta():
    tab = value_curve(MarketParams(0.01, 0.02, 0.3, 2.0), [0.0, 1.0])
    np.testing.assert_array_equal(tab.v_honest, [0.04, 0.04])
