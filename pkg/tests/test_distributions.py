from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surgecycle.distributions import (Exponential, Pareto, Uniform, from_dict, interior_grid,
                                      reciprocal_survival_convex)
from surgecycle.errors import ConfigError, DomainError


def test_survival_examples():
    assert Uniform().survival(0.8) == pytest.approx(0.2, abs=1e-15)
    assert Uniform().survival(-1.0) == 1.0
    assert Uniform().survival(2.0) == 0.0
    assert Exponential(1 / 30).survival(30 * math.log(4)) == pytest.approx(0.25, abs=1e-15)


def test_survival_inv_examples():
    assert Uniform().survival_inv(0.2) == pytest.approx(0.8, abs=1e-15)
    assert Uniform().survival_inv(0.4) == pytest.approx(0.6, abs=1e-15)
    assert Uniform().survival_inv(1.0) == 0.0


@pytest.mark.parametrize("q", [0.0, -0.1, 1.5])
def test_survival_inv_domain(q):
    with pytest.raises(DomainError):
        Uniform().survival_inv(q)


def test_mean_above_examples():
    assert Uniform().mean_above(0.8) == pytest.approx(0.9, abs=1e-15)
    assert Exponential(2.5).mean_above(5.0) == pytest.approx(5.0 + 0.4, abs=1e-12)
    assert Uniform().mean_above(-2.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        Uniform().mean_above(1.0)


def test_mean_above_matches_quadrature():
    d = Pareto(1.0, 3.0)
    v = 2.0
    xs = np.geomspace(v, 1e5, 400001)
    dens = 3.0 / xs ** 4
    num = np.trapezoid(xs * dens, xs) if hasattr(np, "trapezoid") else np.trapz(xs * dens, xs)
    assert d.mean_above(v) == pytest.approx(num / d.survival(v), rel=1e-5)


def test_convexity_examples():
    assert reciprocal_survival_convex(Uniform(), np.linspace(0.01, 0.99, 99))
    assert reciprocal_survival_convex(Exponential(2.5), np.linspace(0.01, 3.0, 200))
    with pytest.raises(DomainError):
        reciprocal_survival_convex(Uniform(), [0.2, 0.4])
    with pytest.raises(DomainError):
        reciprocal_survival_convex(Uniform(), [0.0, 0.4, 0.6])


def test_bad_parameters():
    with pytest.raises(ConfigError):
        Uniform(1.0, 0.0)
    with pytest.raises(ConfigError):
        Exponential(0.0)
    with pytest.raises(ConfigError):
        Pareto(1.0, 1.0)


def test_from_dict_round_trip():
    for d in (Uniform(0.0, 2.0), Exponential(2.5), Pareto(1.0, 3.0)):
        assert from_dict(d.to_dict()) == d
    assert from_dict({"type": "exponential", "mean": 30.0}) == Exponential(1 / 30)
    with pytest.raises(ConfigError):
        from_dict({"type": "normal"})


dists = st.one_of(
    st.builds(lambda a, w: Uniform(a, a + w), st.floats(-5, 5), st.floats(0.1, 10)),
    st.builds(Exponential, st.floats(0.05, 20)),
    st.builds(Pareto, st.floats(0.1, 5), st.floats(1.1, 6)),
)


@settings(max_examples=200, deadline=None)
@given(dists, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_survival_monotone_and_round_trip(d, q1, q2):
    lo_q, hi_q = sorted((q1, q2))
    v_hi, v_lo = d.survival_inv(lo_q), d.survival_inv(hi_q)
    if hi_q - lo_q > 1e-9:
        assert v_lo < v_hi
        assert d.survival(v_lo) > d.survival(v_hi)
    v = v_lo
    assert abs(d.survival_inv(d.survival(v)) - v) < 1e-12 * max(1.0, abs(v)) * 100
    assert 0.0 <= d.survival(v) <= 1.0
    assert d.mean_above(v) >= v


@settings(max_examples=50, deadline=None)
@given(st.one_of(st.builds(lambda a, w: Uniform(a, a + w), st.floats(-5, 5), st.floats(0.1, 10)),
                 st.builds(Exponential, st.floats(0.05, 20))),
       st.integers(3, 300))
def test_uniform_and_exponential_always_convex(d, k):
    assert reciprocal_survival_convex(d, interior_grid(d, k))
