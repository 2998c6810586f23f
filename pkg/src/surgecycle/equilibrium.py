"""Driver best response along a price cycle.

A deviating driver's optimal continuation payoff ``u(t)`` grows at the
opportunity cost ``c_d`` while everyone is offline, and on the online phase
solves

    u' = c_d - rho(t) * max(0, p(t) - c_d*eta(N(t)) - u),

where ``rho`` is the per-driver dispatch rate. Periodicity ``u(t0) = u(t2)``
pins down ``u(t1)``; it is found by shooting. Two checkable conditions on
the cycle then certify that the threshold strategy is an equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cycle import Cycle, build_cycle
from .errors import DomainError, NoPeriodicSolutionError
from .market import MarketParams, MarketState, demand_at, en_route_time
from .numerics import grid_max

STABILITY_HEADER = ("t", "u", "h", "rho", "g", "net_payoff")


def dispatch_rate(m: MarketParams, s: MarketState) -> float:
    """Rate at which one online driver receives a trip."""
    if s.n <= 0.0:
        raise DomainError("dispatch rate undefined with no online drivers")
    return demand_at(m, s.p, s.n) / s.n


def stationary_payoff(m: MarketParams, s: MarketState) -> float:
    """Continuation payoff if price and driver count stayed frozen at ``s``."""
    rho = dispatch_rate(m, s)
    if rho <= 0.0:
        return -math.inf
    return s.p - m.c_d * en_route_time(m, s.n) - m.c_d / rho


@dataclass(frozen=True, eq=False)
class StabilityReport:
    t_series: np.ndarray
    u_series: np.ndarray
    t_online: np.ndarray
    h_series: np.ndarray
    rho_series: np.ndarray
    g_series: np.ndarray
    net_series: np.ndarray
    u1: float
    periodicity_residual: float
    c21_max_derivative: float | None = None
    c21_argmax: float | None = None
    c21_at_t1: float | None = None
    c21_holds: bool | None = None
    c22_net_payoff_t0: float | None = None
    c22_wait_credit: float | None = None
    c22_lhs: float | None = None
    c22_rhs: float | None = None
    c22_argmax: float | None = None
    c22_holds: bool | None = None
    clearing_ok: bool | None = None
    stable: bool | None = None

    def summary(self) -> dict:
        keys = ("u1", "periodicity_residual", "c21_max_derivative", "c21_argmax", "c21_at_t1",
                "c21_holds", "c22_net_payoff_t0", "c22_wait_credit", "c22_lhs", "c22_rhs",
                "c22_argmax", "c22_holds", "clearing_ok", "stable")
        return {k: _plain(getattr(self, k)) for k in keys}

    def rows(self):
        """Online-phase rows ``(t, u, h, rho, g, net_payoff)``."""
        off = self.t_series.size - self.t_online.size
        for i, t in enumerate(self.t_online):
            yield (t, self.u_series[off + i], self.h_series[i], self.rho_series[i],
                   self.g_series[i], self.net_series[i])


def _plain(v):
    if isinstance(v, (np.floating, np.bool_)):
        return v.item()
    return v


def _rates(m, p, n):
    """(dispatch rate, net trip payoff) at a state with ``n > 0``."""
    if n <= 0.0:
        return 0.0, -math.inf
    return demand_at(m, p, n) / n, p - m.c_d * m.tau * n ** (-m.alpha)


def _shoot(u1, h, rho_nodes, net_nodes, rho_mid, net_mid, c_d):
    """Integrate ``u`` over the online grid from ``u(t1) = u1``."""
    out = np.empty(len(rho_nodes))
    u = u1
    out[0] = u
    for i in range(len(rho_mid)):
        r0, g0 = rho_nodes[i], net_nodes[i]
        rm, gm = rho_mid[i], net_mid[i]
        r1, g1 = rho_nodes[i + 1], net_nodes[i + 1]
        k1 = c_d - r0 * max(0.0, g0 - u)
        k2 = c_d - rm * max(0.0, gm - (u + 0.5 * h * k1))
        k3 = c_d - rm * max(0.0, gm - (u + 0.5 * h * k2))
        k4 = c_d - r1 * max(0.0, g1 - (u + h * k3))
        u = u + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out[i + 1] = u
    return out


def solve_continuation_payoff(m: MarketParams, c: Cycle, dt: float | None = None,
                              tol: float = 1e-6) -> StabilityReport:
    """Solve for the periodic optimal continuation payoff along the cycle.

    Bisection on ``u(t1)`` for the residual ``u(t2) - u(t0)``, which is
    non-decreasing in ``u(t1)``. ``dt`` defaults to the cycle's own grid.
    """
    if dt is not None and abs(dt - c.online.dt) > 1e-12 * dt:
        c = build_cycle(m, c.limits, c.p_low, c.p_high, c.n1, dt)
    on = c.online
    h = on.dt
    rho_nodes, net_nodes = zip(*(_rates(m, float(p), float(n)) for p, n in zip(on.p, on.n)))
    rho_mid, net_mid = [], []
    for i in range(on.t.size - 1):
        tm = float(on.t[i]) + 0.5 * h
        r, g = _rates(m, c.p_at(tm), c.n_at(tm))
        rho_mid.append(r)
        net_mid.append(g)
    rho_nodes, net_nodes = list(rho_nodes), list(net_nodes)
    wait = m.c_d * (c.t1 - c.t0)

    def residual(u1):
        return _shoot(u1, h, rho_nodes, net_nodes, rho_mid, net_mid, m.c_d)[-1] - (u1 - wait)

    lo = c.p_low - m.c_d * (c.t2 - c.t0) - 1.0
    hi = c.p_high + 1.0
    r_lo, r_hi = residual(lo), residual(hi)
    widen = 0
    while not (r_lo <= 0.0 <= r_hi) and widen < 3:
        span = hi - lo
        lo, hi = lo - span, hi + span
        r_lo, r_hi = residual(lo), residual(hi)
        widen += 1
    if not (r_lo <= 0.0 <= r_hi):
        raise NoPeriodicSolutionError(
            f"periodicity residual has no sign change on [{lo:.4g}, {hi:.4g}] "
            f"(r = {r_lo:.3g}, {r_hi:.3g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if r <= 0.0:
            lo, r_lo = mid, r
        else:
            hi, r_hi = mid, r
        if hi - lo <= 1e-14 * max(1.0, abs(mid)):
            break
    u1 = lo if abs(r_lo) <= abs(r_hi) else hi
    u_on = _shoot(u1, h, rho_nodes, net_nodes, rho_mid, net_mid, m.c_d)
    per = float(u_on[-1] - (u1 - wait))
    if abs(per) > tol:
        raise NoPeriodicSolutionError(f"periodicity residual {per:.3g} above tolerance {tol:.3g}")

    t_off = c.offline.t[:-1]
    u_off = u1 - m.c_d * (c.t1 - t_off)
    rho = np.array(rho_nodes)
    net = np.array(net_nodes)
    with np.errstate(divide="ignore"):
        h_series = np.where(rho > 0, net - m.c_d / np.where(rho > 0, rho, 1.0), -np.inf)
    return StabilityReport(
        t_series=np.concatenate([t_off, on.t]),
        u_series=np.concatenate([u_off, u_on]),
        t_online=on.t.copy(),
        h_series=h_series,
        rho_series=rho,
        g_series=net - u_on,
        net_series=net,
        u1=float(u1),
        periodicity_residual=per,
    )


def _pd_derivative(m, c: Cycle, t: float) -> float:
    # d/dt [p - c_d eta(n)] on the online phase
    n = c.n_at(t)
    ndot = m.lambda_d - demand_at(m, c.p_at(t), n)
    return -c.limits.ell_minus + m.c_d * m.alpha * m.tau * n ** (-m.alpha - 1.0) * ndot


def _stationary_at(m, c: Cycle, t: float) -> float:
    return stationary_payoff(m, MarketState(c.p_at(t), c.n_at(t)))


def check_stability(m: MarketParams, c: Cycle, report: StabilityReport,
                    grid_n: int = 4096, tol_clear: float | None = None) -> StabilityReport:
    """Evaluate the two sufficient conditions for the strategy to be an equilibrium.

    C2.1: the net trip payoff ``p - c_d*eta(n)`` never rises faster than
    ``c_d`` during the online phase. C2.2: the net payoff at ``t0`` plus the
    waiting credit ``c_d (t1 - t0)`` exceeds the best stationary payoff
    during the online phase.
    """
    if tol_clear is None:
        tol_clear = 1e-6 * m.lambda_d * c.period
    t_c21, c21 = grid_max(lambda t: _pd_derivative(m, c, t), c.t1, c.t2, grid_n)
    at_t1 = _pd_derivative(m, c, c.t1)
    t_c22, rhs = grid_max(lambda t: _stationary_at(m, c, t), c.t1, c.t2, grid_n)
    net0 = c.p_low - m.c_d * en_route_time(m, c.N0)
    credit = m.c_d * (c.t1 - c.t0)
    lhs = net0 + credit
    c21_ok = c21 < m.c_d
    c22_ok = lhs > rhs
    clearing_ok = abs(c.residual) <= tol_clear
    return replace(report, c21_max_derivative=c21, c21_argmax=t_c21, c21_at_t1=at_t1,
                   c21_holds=c21_ok, c22_net_payoff_t0=net0, c22_wait_credit=credit,
                   c22_lhs=lhs, c22_rhs=rhs, c22_argmax=t_c22, c22_holds=c22_ok,
                   clearing_ok=clearing_ok, stable=bool(c21_ok and c22_ok and clearing_ok))


def best_response_gap(report: StabilityReport) -> tuple[float, bool]:
    """Minimum over ``[t1, t2)`` of net trip payoff minus continuation payoff."""
    g_min = float(np.min(report.g_series[:-1]))
    return g_min, g_min > 0.0


def stability_report(m: MarketParams, c: Cycle, grid_n: int = 4096,
                     tol: float = 1e-6) -> StabilityReport:
    return check_stability(m, c, solve_continuation_payoff(m, c, tol=tol), grid_n)
