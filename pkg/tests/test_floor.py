from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import large_market, rider_wait_market, symmetric_market
from surgecycle.cycle import clearing_residual, demand_bound_residual
from surgecycle.distributions import Exponential, Uniform
from surgecycle.errors import CounterexampleError, NoValidFloorError, NotApplicableError
from surgecycle.floor import (floor_interval, jensen_inequality_check, price_range_bound,
                              verify_floor_breaks_cycles)
from surgecycle.market import compute_soss, en_route_time
from surgecycle.numerics import find_root
from surgecycle.policy import PriceLimits


def test_intervals(sym, sym_limits, asym, asym_limits):
    r = floor_interval(sym, None, sym_limits)
    assert (r.floor_lo, r.floor_hi) == pytest.approx((0.6, 0.8), abs=1e-9)
    assert r.condition_lhs == 1.0 and r.condition_rhs == pytest.approx(0.0, abs=1e-12)
    assert r.condition_holds and r.min_price_bound == r.floor_lo
    r = floor_interval(asym, None, asym_limits)
    assert (r.floor_lo, r.floor_hi) == pytest.approx((0.7, 0.8), abs=1e-9)
    r = floor_interval(large_market(), None, PriceLimits(2.0, 2.0))
    assert r.floor_lo == pytest.approx(30 * math.log(2), abs=1e-9)


def test_no_valid_floor():
    m = symmetric_market(lambda_d=3.0)
    with pytest.raises(NoValidFloorError):
        floor_interval(m, None, PriceLimits(0.1, 0.1))


def test_sweep_above_floor_finds_no_cycle(sym, sym_limits):
    r = verify_floor_breaks_cycles(sym, sym_limits, 0.65, sweep_grid=50)
    assert len(r.sweep_result) == 2500
    assert max(res for *_, res in r.sweep_result) < 0


def test_low_floor_admits_cycle(sym, sym_limits):
    with pytest.raises(CounterexampleError) as exc:
        verify_floor_breaks_cycles(sym, sym_limits, 0.2, sweep_grid=50)
    assert exc.value.residual >= 0
    assert exc.value.pair[0] >= 0.2
    # the example cycle lies above this floor and clears
    assert clearing_residual(sym, sym_limits, 0.3, 0.9, 14.0) == pytest.approx(0.0, abs=1e-9)


def test_floor_at_optimum_is_vacuous(sym, sym_limits):
    assert verify_floor_breaks_cycles(sym, sym_limits, 0.8).sweep_result == []


def test_sweep_with_rider_wait():
    m = rider_wait_market()
    l = PriceLimits(0.1, 0.2)
    r = floor_interval(m, None, l)
    assert r.condition_holds
    rep = verify_floor_breaks_cycles(m, l, 0.5 * (r.floor_lo + r.floor_hi), sweep_grid=6)
    assert max(res for *_, res in rep.sweep_result) < 0


def test_doubling_rule():
    for m in (symmetric_market(), rider_wait_market(), large_market()):
        s = compute_soss(m)
        r = floor_interval(m, s, PriceLimits(1.0, 1.0))
        eta = en_route_time(m, s.n_star)
        assert m.dist.survival(r.floor_lo) == pytest.approx(2 * m.dist.survival(s.p_star + m.c_r * eta), rel=1e-12)


def test_price_range_bound(sym, sym_limits, sym_cycle, asym, asym_limits, asym_cycle):
    b, ok = price_range_bound(sym, sym_limits, sym_cycle)
    assert b == pytest.approx(math.sqrt(8 * 14.25 * 0.1 / 5), abs=1e-9) and ok
    assert b == pytest.approx(1.510, abs=1e-3)
    b, ok = price_range_bound(asym, asym_limits, asym_cycle)
    assert b == pytest.approx(0.872, abs=1e-3) and ok
    with pytest.raises(NotApplicableError):
        price_range_bound(rider_wait_market(), sym_limits, sym_cycle)


def test_jensen_examples():
    lhs, rhs, ok = jensen_inequality_check(Uniform(), lambda t: 0.6, 0.0, 1.0)
    assert lhs == pytest.approx(rhs, abs=1e-12) and ok
    lhs, rhs, ok = jensen_inequality_check(Uniform(), lambda t: 0.9 - 0.1 * t, 0.0, 6.0)
    assert ok
    # closed forms for a linear path: mean survival 0.4, weighted price 0.525
    assert lhs == pytest.approx(0.4, abs=1e-12)
    assert rhs == pytest.approx(0.475, abs=1e-12)


def test_jensen_exponential_random_paths():
    rng = np.random.default_rng(7)
    d = Exponential(2.5)
    for _ in range(100):
        knots = rng.uniform(0.0, 3.0, size=rng.integers(2, 8))
        vals = np.interp(np.linspace(0, 1, 1001), np.linspace(0, 1, knots.size), knots)
        assert jensen_inequality_check(d, vals, 0.0, 5.0)[2]


from hypothesis import assume, given, settings, strategies as st


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 1.0), st.floats(0.02, 1.0), st.floats(1.0, 3.0), st.floats(0.0, 0.6))
def test_condition_iff_nonempty_interval(ell_plus, ell_minus, lambda_d, c_r):
    m = symmetric_market(lambda_d=lambda_d, c_r=c_r, dist=Exponential(2.5))
    l = PriceLimits(ell_plus, ell_minus)
    assume((ell_plus + ell_minus) * lambda_d / (ell_plus * m.lambda_r) <= 1.0)
    r = floor_interval(m, None, l)
    assume(abs(r.condition_lhs - r.condition_rhs) > 1e-9)
    assert r.condition_holds == (r.floor_lo < r.floor_hi)


def test_jensen_uniform_random_paths():
    rng = np.random.default_rng(11)
    for _ in range(100):
        knots = rng.uniform(0.0, 0.99, size=rng.integers(2, 8))
        vals = np.interp(np.linspace(0, 1, 1001), np.linspace(0, 1, knots.size), knots)
        assert jensen_inequality_check(Uniform(), vals, 0.0, 3.0)[2]


def test_jensen_rejects_path_outside_support():
    from surgecycle.errors import DomainError
    with pytest.raises(DomainError):
        jensen_inequality_check(Uniform(), lambda t: 1.2, 0.0, 1.0)


def test_clearing_cycles_respect_price_bound(sym, sym_limits):
    lo = floor_interval(sym, None, sym_limits).floor_lo
    rng = np.random.default_rng(3)
    found = 0
    for p_low in rng.uniform(0.0, 0.8, 20):
        f = lambda ph: demand_bound_residual(sym, sym_limits, p_low, ph, samples=2001)
        if p_low > lo:
            # above the bound the residual only falls as p_high grows
            grid = np.linspace(p_low + 1e-3, 0.9999, 200)
            assert max(f(ph) for ph in grid) < 0
            continue
        # below it the residual rises in p_high up to floor_lo and falls after
        if f(0.9999) > 0 or f(lo) < 0:
            continue
        p_high = find_root(f, lo, 0.9999, tol=1e-13)
        found += 1
        assert p_low <= lo + 1e-9 and p_high > p_low
    assert found >= 5
