"""Surplus accounting for price cycles and for the optimal steady state.

Rates are per unit time. Riders who request a trip gain their value minus
their effective cost; drivers gain the trip price minus the en route cost
and pay the opportunity cost ``c_d`` for every unit of time in the system.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .cycle import Cycle
from .distributions import interior_grid, reciprocal_survival_convex
from .market import MarketParams, Soss, en_route_time
from .numerics import simpson
from .policy import PriceLimits
from .simulator import Trajectory


@dataclass(frozen=True)
class WelfareReport:
    cycle_rider_rate: float | None = None
    cycle_driver_rate: float | None = None
    cycle_welfare_rate: float | None = None
    soss_rider_rate: float | None = None
    soss_driver_rate: float | None = None
    soss_welfare_rate: float | None = None
    thm43_condition_lhs: float | None = None
    thm43_condition_rhs: float | None = None
    convexity_ok: bool | None = None
    hypothesis_holds: bool | None = None
    waiting_cost_cycle: float | None = None
    waiting_cost_soss: float | None = None
    trip_payoff_cycle: float | None = None
    trip_payoff_soss: float | None = None
    driver_payoff_gap: float | None = None
    conclusion_holds: bool | None = None

    def table(self) -> dict:
        """Rows rider/driver/welfare, columns soss/cycle."""
        return {
            "rider": {"soss": self.soss_rider_rate, "cycle": self.cycle_rider_rate},
            "driver": {"soss": self.soss_driver_rate, "cycle": self.cycle_driver_rate},
            "welfare": {"soss": self.soss_welfare_rate, "cycle": self.cycle_welfare_rate},
        }


@dataclass(frozen=True)
class _PathTotals:
    rider: float
    trip: float
    waiting: float
    duration: float


def _path_totals(m: MarketParams, traj: Trajectory) -> _PathTotals:
    rider, trip = [], []
    for p, n in zip(traj.p, traj.n):
        p, n = float(p), float(n)
        if n <= 0.0:
            rider.append(0.0)
            trip.append(0.0)
            continue
        eta = en_route_time(m, n)
        pr = p + m.c_r * eta
        served = m.lambda_r * m.dist.survival(pr)
        rider.append(m.lambda_r * m.dist.tail_integral(pr))
        trip.append(served * (p - m.c_d * eta))
    h = traj.dt
    return _PathTotals(
        rider=simpson(rider, h),
        trip=simpson(trip, h),
        waiting=m.c_d * simpson(traj.N, h),
        duration=float(traj.t[-1] - traj.t[0]),
    )


def path_surplus_rates(m: MarketParams, traj: Trajectory) -> WelfareReport:
    """Average surplus rates along a uniformly sampled trajectory."""
    tot = _path_totals(m, traj)
    return _rates_report(tot.rider, tot.trip - tot.waiting, tot.duration)


def _rates_report(rider_total, driver_total, duration):
    r = rider_total / duration
    d = driver_total / duration
    return WelfareReport(cycle_rider_rate=r, cycle_driver_rate=d, cycle_welfare_rate=r + d)


def _cycle_totals(m: MarketParams, c: Cycle) -> _PathTotals:
    a = _path_totals(m, c.offline)
    b = _path_totals(m, c.online)
    return _PathTotals(a.rider + b.rider, a.trip + b.trip, a.waiting + b.waiting, c.period)


def cycle_surplus_rates(m: MarketParams, c: Cycle) -> WelfareReport:
    """Rider, driver and total surplus per unit time over one cycle period."""
    tot = _cycle_totals(m, c)
    return _rates_report(tot.rider, tot.trip - tot.waiting, tot.duration)


def soss_surplus_rates(m: MarketParams, s: Soss) -> WelfareReport:
    eta = en_route_time(m, s.n_star)
    pr = s.p_star + m.c_r * eta
    rider = m.lambda_d * (m.dist.mean_above(pr) - pr)
    driver = m.lambda_d * (s.p_star - m.c_d * eta) - m.c_d * s.n_star
    return WelfareReport(soss_rider_rate=rider, soss_driver_rate=driver,
                         soss_welfare_rate=rider + driver)


def welfare_report(m: MarketParams, s: Soss, c: Cycle) -> WelfareReport:
    """Both columns of the cycle-versus-optimum comparison."""
    cyc = cycle_surplus_rates(m, c)
    st = soss_surplus_rates(m, s)
    return replace(cyc, soss_rider_rate=st.soss_rider_rate, soss_driver_rate=st.soss_driver_rate,
                   soss_welfare_rate=st.soss_welfare_rate)


def check_thm43(m: MarketParams, s: Soss, l: PriceLimits, c: Cycle | None = None,
                grid_n: int = 201) -> WelfareReport:
    """Sufficient condition for cycles to hurt drivers, and its conclusion.

    The condition compares ``ell_minus/ell_plus + 1`` with the demand ratio
    ``F(p* - c_d eta*) / F(p* + c_r eta*)`` (survival functions), and also
    needs ``1/F`` convex. Given a cycle, the per-period waiting cost and trip
    payoff are compared with the optimum; ``conclusion_holds`` is only set
    when the hypotheses hold.
    """
    eta = en_route_time(m, s.n_star)
    lhs = l.ell_minus / l.ell_plus + 1.0
    rhs = m.dist.survival(s.p_star - m.c_d * eta) / m.dist.survival(s.p_star + m.c_r * eta)
    convex = reciprocal_survival_convex(m.dist, interior_grid(m.dist, grid_n))
    hyp = bool(lhs > rhs and convex)
    rep = WelfareReport(thm43_condition_lhs=lhs, thm43_condition_rhs=rhs, convexity_ok=convex,
                        hypothesis_holds=hyp)
    if c is None:
        return rep
    tot = _cycle_totals(m, c)
    T = c.period
    wait_soss = T * m.c_d * s.n_star
    trip_soss = m.lambda_d * (s.p_star - m.c_d * eta) * T
    gap = (tot.trip - tot.waiting) - (trip_soss - wait_soss)
    return replace(rep, waiting_cost_cycle=tot.waiting, waiting_cost_soss=wait_soss,
                   trip_payoff_cycle=tot.trip, trip_payoff_soss=trip_soss,
                   driver_payoff_gap=gap, conclusion_holds=(gap < 0.0) if hyp else None)
