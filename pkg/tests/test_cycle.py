from __future__ import annotations

import numpy as np
import pytest

from conftest import asymmetric_market
from surgecycle.cycle import (build_cycle, clearing_residual, demand_bound_residual,
                              integrate_decrease_phase, solve_cycle, validate_cycle)
from surgecycle.errors import (DomainError, InfeasibleCycleError, NoClearingCycleError,
                               ThresholdsDontClearError, UnderdeterminedCycleError)
from surgecycle.policy import PriceLimits


def _closed_form_residual(m, l, p_low, p_high):
    # c_r = 0 and uniform values on [0, 1]
    up, down = (p_high - p_low) / l.ell_plus, (p_high - p_low) / l.ell_minus
    return m.lambda_r * down * (1 - (p_low + p_high) / 2) - m.lambda_d * (up + down)


def test_clearing_residual_examples(sym, sym_limits, asym, asym_limits):
    assert clearing_residual(sym, sym_limits, 0.3, 0.9, 14.0) == pytest.approx(0.0, abs=1e-9)
    assert clearing_residual(asym, asym_limits, 0.5, 0.9, 4.5) == pytest.approx(0.0, abs=1e-9)
    # D = 8.75 over a period of 10
    r = clearing_residual(sym, sym_limits, 0.4, 0.9, 14.0)
    assert r == pytest.approx(-1.25, abs=1e-9)
    assert r == pytest.approx(clearing_residual(sym, sym_limits, 0.4, 0.9, 10.0), abs=1e-12)


def test_clearing_residual_closed_form(sym, sym_limits):
    for p_low, p_high in [(0.1, 0.5), (0.3, 0.9), (0.45, 0.95), (0.2, 0.7)]:
        exact = _closed_form_residual(sym, sym_limits, p_low, p_high)
        assert clearing_residual(sym, sym_limits, p_low, p_high, 30.0) == pytest.approx(exact, abs=1e-9)
        assert demand_bound_residual(sym, sym_limits, p_low, p_high) == pytest.approx(exact, abs=1e-9)


def test_symmetric_cycle(sym_cycle):
    c = sym_cycle
    assert (c.t0, c.t1, c.t2) == pytest.approx((0.0, 6.0, 12.0), abs=1e-12)
    assert c.period == pytest.approx(12.0)
    assert c.N0 == pytest.approx(8.0, abs=1e-12)
    assert c.n_hat == pytest.approx(14.25, abs=1e-9)
    t = c.online.t
    assert np.max(np.abs(c.online.n - (8 + 14 * t - t ** 2) / 4)) < 1e-9


def test_asymmetric_cycle(asym_cycle):
    c = asym_cycle
    assert c.period == pytest.approx(6.0)
    assert c.n_hat == pytest.approx(4.75, abs=1e-9)
    assert c.N0 == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("name", ["sym_cycle", "asym_cycle"])
def test_cycle_invariants(name, request):
    c = request.getfixturevalue(name)
    m, l = c.market, c.limits
    assert c.t1 - c.t0 == pytest.approx((c.p_high - c.p_low) / l.ell_plus)
    assert c.t2 - c.t1 == pytest.approx((c.p_high - c.p_low) / l.ell_minus)
    assert c.n1 == pytest.approx(c.N0 + m.lambda_d * (c.t1 - c.t0))
    assert abs(c.online.N[-1] - c.N0) <= 1e-6 * m.lambda_d * c.period
    assert c.n_hat >= c.n1 and c.n_hat >= c.N0
    assert c.n_hat == pytest.approx(c.online.n.max(), abs=1e-6)
    # peak where the path crosses the steady-state line
    k = int(np.argmax(c.online.n))
    assert c.online.p[k] == pytest.approx(m.dist.survival_inv(m.lambda_d / m.lambda_r), abs=2e-3)
    tr = c.traj
    assert np.all(np.diff(tr.t) > 0)
    assert tr.t[0] == 0.0 and tr.t[-1] == pytest.approx(c.t2)


def test_solve_cycle_errors(sym, sym_limits):
    with pytest.raises(ThresholdsDontClearError):
        solve_cycle(sym, sym_limits, 0.4, 0.9, 14.0)
    with pytest.raises(UnderdeterminedCycleError):
        solve_cycle(sym, sym_limits, 0.3, 0.9)
    with pytest.raises(DomainError):
        solve_cycle(sym, sym_limits, 0.9, 0.3, 14.0)
    with pytest.raises(DomainError):
        clearing_residual(sym, sym_limits, 0.3, 0.9, 0.0)


def test_rider_wait_root_found():
    m = asymmetric_market(c_r=0.1)
    l = PriceLimits(0.2, 0.1)
    # coarse scan shows the sign change before bisection is trusted
    n_grid = [0.5, 5.0, 50.0, 100.0]
    vals = []
    for n1 in n_grid:
        try:
            vals.append(clearing_residual(m, l, 0.45, 0.9, n1))
        except InfeasibleCycleError:
            vals.append(-np.inf)
    assert min(vals) < 0 < max(vals)
    c = solve_cycle(m, l, 0.45, 0.9)
    assert abs(c.residual) <= 1e-6 * m.lambda_d * c.period
    assert clearing_residual(m, l, 0.45, 0.9, c.n1) == pytest.approx(0.0, abs=1e-5)


def test_rider_wait_no_root():
    m = asymmetric_market(c_r=0.1)
    with pytest.raises(NoClearingCycleError):
        solve_cycle(m, PriceLimits(0.2, 0.1), 0.5, 0.9)


def test_exhausted_drivers_are_infeasible(sym, sym_limits):
    # price well below the steady line drains the online pool
    with pytest.raises(InfeasibleCycleError):
        integrate_decrease_phase(sym, sym_limits, 0.5, 4.0, 0.5)
    *_, ns, _, _ = integrate_decrease_phase(sym, sym_limits, 0.5, 4.0, 0.5, strict=False)
    assert ns.min() == 0.0


def test_validate_cycle(sym_cycle, sym_curves, sym, sym_limits):
    v = validate_cycle(sym_cycle, sym_curves)
    assert v.ok and v.failures == []
    low = build_cycle(sym, sym_limits, 0.3, 0.9, 0.1, strict=False)
    assert not validate_cycle(low, sym_curves).flags["policy_decreasing"]
    zero = build_cycle(sym, sym_limits, 0.0, 0.9, 14.0, strict=False)
    assert not validate_cycle(zero, sym_curves).flags["p_low_positive"]


def test_appendix_e_cycle_clears():
    from conftest import large_market
    import math
    m = large_market()
    l = PriceLimits(2.0, 2.0)
    p_high = 30 * math.log(3 * (math.exp(2 / 3) - 1))
    c = solve_cycle(m, l, p_high - 20.0, p_high, 75.0)
    assert (c.t1, c.t2) == pytest.approx((10.0, 20.0))
    assert abs(c.residual) < 1e-9


def test_validate_outside_policy_table(sym, sym_limits):
    from surgecycle.policy import build_boundary_curves
    b = build_boundary_curves(sym, sym_limits, p_max=0.85)
    v = validate_cycle(build_cycle(sym, sym_limits, 0.3, 0.9, 14.0), b)
    assert not v.flags["policy_decreasing"]
    assert "policy_decreasing" in v.failures
