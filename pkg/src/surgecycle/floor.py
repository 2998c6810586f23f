"""Price floors that rule out stable price cycles.

Any clearing threshold cycle has ``p_low`` at most
``F^-1((ell_minus + ell_plus) lambda_d / (ell_plus lambda_r))`` (``F`` the
survival function), so a floor between that price and ``p*`` removes every
such cycle while leaving the optimum reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .cycle import Cycle, clearing_residual, demand_bound_residual
from .distributions import Uniform, ValueDistribution, interior_grid, reciprocal_survival_convex
from .errors import CounterexampleError, DomainError, HypothesisError, NoValidFloorError, NotApplicableError
from .market import MarketParams, Soss, compute_soss
from .numerics import simpson
from .policy import PriceLimits

SCOPE_NOTE = ("scope: excludes stable cycles generated by online/offline threshold "
              "strategies; other driver strategies are not covered")


@dataclass(frozen=True)
class FloorReport:
    condition_lhs: float | None = None
    condition_rhs: float | None = None
    condition_holds: bool | None = None
    floor_lo: float | None = None
    floor_hi: float | None = None
    min_price_bound: float | None = None
    p_floor: float | None = None
    sweep_result: list = field(default_factory=list)
    scope_note: str = SCOPE_NOTE

    def summary(self) -> dict:
        res = [r for _, _, r in self.sweep_result]
        return {
            "condition_lhs": self.condition_lhs,
            "condition_rhs": self.condition_rhs,
            "condition_holds": self.condition_holds,
            "floor_lo": self.floor_lo,
            "floor_hi": self.floor_hi,
            "min_price_bound": self.min_price_bound,
            "p_floor": self.p_floor,
            "sweep_count": len(res),
            "sweep_max_residual": max(res) if res else None,
            "scope_note": self.scope_note,
        }


def _doubling_ratio(m: MarketParams, l: PriceLimits) -> float:
    return (l.ell_minus + l.ell_plus) * m.lambda_d / (l.ell_plus * m.lambda_r)


def min_price_bound(m: MarketParams, l: PriceLimits) -> float:
    """Largest ``p_low`` any clearing threshold cycle can have."""
    q = _doubling_ratio(m, l)
    if q > 1.0:
        raise NoValidFloorError(f"demand ratio {q:.6g} exceeds 1; no price reaches it")
    return m.dist.survival_inv(q)


def floor_interval(m: MarketParams, s: Soss | None = None, l: PriceLimits | None = None) -> FloorReport:
    """Admissible floors ``(floor_lo, p*)`` and the market condition that makes them exist."""
    if l is None:
        raise DomainError("price limits are required")
    s = s or compute_soss(m)
    lo = min_price_bound(m, l)
    lhs = l.ell_minus / l.ell_plus
    rhs = m.lambda_r / m.lambda_d * m.dist.survival(s.p_star) - 1.0
    return FloorReport(condition_lhs=lhs, condition_rhs=rhs, condition_holds=bool(lhs > rhs),
                       floor_lo=lo, floor_hi=s.p_star, min_price_bound=lo)


def default_price_cap(d: ValueDistribution) -> float:
    hi = d.support[1]
    return hi if math.isfinite(hi) else d.survival_inv(1e-4)


def verify_floor_breaks_cycles(m: MarketParams, l: PriceLimits, p_floor: float,
                               sweep_grid: int = 50, p_cap: float | None = None,
                               dt: float = 1e-3) -> FloorReport:
    """Sweep thresholds above the floor and confirm that none clears the market.

    ``p_low`` ranges over ``[p_floor, p*)`` and ``p_high`` over
    ``(p_low, p_cap]``, ``sweep_grid`` values each. The residual recorded
    is the largest over ``n1``: with ``c_r = 0`` it does not depend on
    ``n1``; otherwise it grows with ``n1`` and is taken at ``100 n*``, the
    top of the cycle solver's search range.
    """
    s = compute_soss(m)
    rep = floor_interval(m, s, l)
    if p_cap is None:
        p_cap = default_price_cap(m.dist)
    n1_top = 100.0 * s.n_star
    rows = []
    offender = None
    for p_low in np.linspace(p_floor, s.p_star, sweep_grid, endpoint=False):
        if p_low >= s.p_star:
            break
        p_low = float(p_low)
        for k in range(1, sweep_grid + 1):
            p_high = p_low + (p_cap - p_low) * k / sweep_grid
            if m.c_r == 0.0:
                r = demand_bound_residual(m, l, p_low, p_high)
            else:
                r = clearing_residual(m, l, p_low, p_high, n1_top, dt)
            rows.append((p_low, p_high, float(r)))
            if r >= 0.0 and offender is None:
                offender = (p_low, p_high, float(r))
    rep = replace(rep, p_floor=p_floor, sweep_result=rows)
    if offender is not None:
        p_low, p_high, r = offender
        raise CounterexampleError(
            f"thresholds ({p_low:.6g}, {p_high:.6g}) above floor {p_floor} have residual {r:.6g} >= 0",
            pair=(p_low, p_high), residual=r)
    return rep


def price_range_bound(m: MarketParams, l: PriceLimits, c: Cycle) -> tuple[float, bool]:
    """Upper bound ``sqrt(8 n_hat ell_minus / lambda_r)`` on the cycle's price range.

    Only valid with no rider wait cost and values uniform on ``[0, 1]``.
    """
    d = m.dist
    if m.c_r != 0.0 or not (isinstance(d, Uniform) and d.lo == 0.0 and d.hi == 1.0):
        raise NotApplicableError("price range bound needs c_r = 0 and values uniform on [0, 1]")
    bound = math.sqrt(8.0 * c.n_hat * l.ell_minus / m.lambda_r)
    return bound, (c.p_high - c.p_low) <= bound


def jensen_inequality_check(d: ValueDistribution, p_r: Sequence[float] | Callable[[float], float],
                            t1: float, t2: float, samples: int = 2001) -> tuple[float, float, bool]:
    """Average served fraction versus the fraction at the demand-weighted price.

    ``p_r`` is either a callable of time or values on a uniform grid over
    ``[t1, t2]``. With ``1/F`` convex the average never exceeds the
    fraction at the weighted price.
    """
    if not t2 > t1:
        raise DomainError("need t2 > t1")
    if not reciprocal_survival_convex(d, interior_grid(d)):
        raise HypothesisError("1/survival is not convex for this distribution")
    if callable(p_r):
        ts = np.linspace(t1, t2, samples | 1)
        vals = np.array([p_r(float(t)) for t in ts])
    else:
        vals = np.asarray(p_r, dtype=float)
    lo, hi = d.support
    if np.any(vals < lo) or np.any(vals >= hi):
        raise DomainError("price path leaves the value support")
    h = (t2 - t1) / (vals.size - 1)
    surv = np.array([d.survival(float(v)) for v in vals])
    mass = simpson(surv, h)
    lhs = mass / (t2 - t1)
    rhs = d.survival(simpson(surv * vals, h) / mass)
    return lhs, rhs, bool(lhs <= rhs + 1e-9)
