from __future__ import annotations

import math

import numpy as np
import pytest

from surgecycle.errors import BracketError, DomainError, IntegrationError
from surgecycle.numerics import OdeProblem, find_root, golden_max, grid_max, integrate, simpson


def test_exponential_decay_to_1e10():
    res = integrate(OdeProblem(lambda t, y: -y, 0.0, [1.0], 1e-3), 1.0)
    assert res.t[-1] == pytest.approx(1.0)
    assert abs(res.y[-1, 0] - math.exp(-1)) < 1e-10


def test_event_located_to_1e10():
    ev = lambda t, y: y[0] - 0.5
    res = integrate(OdeProblem(lambda t, y: np.ones(1), 0.0, [0.0], 1e-3), 1.0, [ev])
    assert len(res.events) == 1
    assert abs(res.events[0].t - 0.5) < 1e-10


def test_terminal_event_stops():
    def ev(t, y):
        return y[0] - 0.25
    ev.terminal = True
    res = integrate(OdeProblem(lambda t, y: np.ones(1), 0.0, [0.0], 0.01), 1.0, [ev])
    assert res.t[-1] == pytest.approx(0.25, abs=1e-9)


def test_decrease_phase_matches_closed_form():
    # p(t) = 0.9 - 0.1 (t - 6), n' = 1 - 5 (1 - p)
    rhs = lambda t, y: np.array([1.0 - 5.0 * (1.0 - (0.9 - 0.1 * (t - 6.0)))])
    res = integrate(OdeProblem(rhs, 6.0, [14.0], 1e-3), 12.0)
    exact = (8 + 14 * res.t - res.t ** 2) / 4
    assert np.max(np.abs(res.y[:, 0] - exact)) < 1e-8


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_state_raises():
    with pytest.raises(IntegrationError):
        integrate(OdeProblem(lambda t, y: y ** 2, 0.0, [1.0], 0.01), 2.0)


def test_rk4_order_on_decay():
    errs = []
    for dt in (0.1, 0.05):
        res = integrate(OdeProblem(lambda t, y: -y, 0.0, [1.0], dt), 1.0)
        errs.append(abs(res.y[-1, 0] - math.exp(-1)))
    assert errs[0] / errs[1] >= 12


def test_find_root_sqrt2():
    assert abs(find_root(lambda x: x * x - 2, 0.0, 2.0, tol=1e-12) - math.sqrt(2)) <= 1e-12


def test_find_root_no_bracket():
    with pytest.raises(BracketError):
        find_root(lambda x: 1.0, 0.0, 1.0)


def test_simpson_cubic_exact():
    x = np.linspace(0, 1, 11)
    assert simpson(x ** 2, x[1] - x[0]) == pytest.approx(1 / 3, abs=1e-15)


def test_simpson_served_demand_is_12():
    t = np.linspace(6, 12, 6001)
    assert simpson(5 * (0.1 * t - 0.5), t[1] - t[0]) == pytest.approx(12.0, abs=1e-10)


def test_simpson_even_count_tail():
    x = np.linspace(0, 1, 10)
    assert simpson(2 * x, x[1] - x[0]) == pytest.approx(1.0, abs=1e-14)


def test_simpson_two_samples_rejected():
    with pytest.raises(DomainError):
        simpson([1.0, 2.0], 0.1)


def test_golden_and_grid_max():
    x, fx = golden_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-8) and fx == pytest.approx(0.0, abs=1e-15)
    x, fx = grid_max(lambda t: math.sin(t), 0.0, 3.0, grid_n=64)
    assert x == pytest.approx(math.pi / 2, abs=1e-7)
    # maximum at an endpoint
    x, fx = grid_max(lambda t: t, 0.0, 1.0, grid_n=16)
    assert fx == pytest.approx(1.0, abs=1e-9)
