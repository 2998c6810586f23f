"""Price cycles induced by online/offline threshold strategies.

A cycle starts at ``t0 = 0`` when every driver goes offline at ``p_low``.
The platform raises the price at ``ell_plus`` until ``p_high`` (``t1``),
drivers return all at once, and the price falls at ``ell_minus`` back to
``p_low`` (``t2``). The cycle clears the market when the riders served
during ``[t1, t2]`` equal the drivers arriving over the period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DomainError, ExtrapolationError, InfeasibleCycleError,
                     NoClearingCycleError, ThresholdsDontClearError, UnderdeterminedCycleError)
from .market import MarketParams, compute_soss, demand_at
from .numerics import find_root, golden_max, simpson
from .policy import BoundaryCurves, PriceLimits, Region, classify_pn
from .simulator import Trajectory


@dataclass(frozen=True, eq=False)
class Cycle:
    market: MarketParams
    limits: PriceLimits
    p_low: float
    p_high: float
    t0: float
    t1: float
    t2: float
    n1: float
    N0: float
    n_hat: float
    residual: float
    offline: Trajectory
    online: Trajectory

    @property
    def period(self) -> float:
        return self.t2 - self.t0

    @property
    def traj(self) -> Trajectory:
        """Whole period as one trajectory; the pre-switch sample at ``t1`` is dropped."""
        a, b = self.offline, self.online
        cat = [np.concatenate([getattr(a, k)[:-1], getattr(b, k)])
               for k in ("t", "p", "n", "n_off", "dpdt", "demand")]
        return Trajectory.from_columns(*cat, dt=b.dt)

    def n_at(self, t: float) -> float:
        """Online driver count at ``t`` in ``[t1, t2]`` (RK4 sub-step from the previous sample)."""
        on = self.online
        t = min(max(t, self.t1), self.t2)
        i = min(int((t - self.t1) / on.dt), on.t.size - 2)
        return _advance(self.market, self.limits.ell_minus, on.p[i], on.n[i], t - on.t[i])

    def p_at(self, t: float) -> float:
        if t <= self.t1:
            return self.p_low + self.limits.ell_plus * (t - self.t0)
        return self.p_high - self.limits.ell_minus * (t - self.t1)

    def summary(self) -> dict:
        return {
            "p_low": self.p_low, "p_high": self.p_high,
            "ell_plus": self.limits.ell_plus, "ell_minus": self.limits.ell_minus,
            "t0": self.t0, "t1": self.t1, "t2": self.t2, "period": self.period,
            "n1": self.n1, "n_hat": self.n_hat, "N0": self.N0, "residual": self.residual,
        }


def _rhs(m, p, n):
    return m.lambda_d - demand_at(m, p, n)


def _advance(m, ell_minus, p, n, h):
    """Single RK4 step of the decrease-phase ODE."""
    if h == 0.0:
        return n
    a = -ell_minus
    k1 = _rhs(m, p, n)
    k2 = _rhs(m, p + 0.5 * h * a, n + 0.5 * h * k1)
    k3 = _rhs(m, p + 0.5 * h * a, n + 0.5 * h * k2)
    k4 = _rhs(m, p + h * a, n + h * k3)
    return n + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _uniform_grid(duration, dt):
    k = max(2, int(math.ceil(duration / dt - 1e-9)))
    return k, duration / k


def integrate_decrease_phase(m: MarketParams, l: PriceLimits, p_high: float, duration: float,
                             n1: float, dt: float = 1e-3, strict: bool = True):
    """RK4 for ``n`` with the price falling at ``ell_minus`` from ``p_high``.

    Integrates the served demand alongside. Returns ``(t, p, n, demand, D)``
    with ``t`` relative to the phase start. In strict mode reaching zero
    online drivers raises InfeasibleCycleError; otherwise ``n`` is clamped.
    """
    k, h = _uniform_grid(duration, dt)
    a = -l.ell_minus
    ts = h * np.arange(k + 1)
    ps = p_high + a * ts
    ns = np.empty(k + 1)
    dem = np.empty(k + 1)
    n = n1
    D = 0.0
    ns[0] = n
    dem[0] = demand_at(m, p_high, n)
    lam = m.lambda_d
    for i in range(k):
        p = ps[i]
        d1 = demand_at(m, p, n)
        n2 = n + 0.5 * h * (lam - d1)
        d2 = demand_at(m, p + 0.5 * h * a, n2)
        n3 = n + 0.5 * h * (lam - d2)
        d3 = demand_at(m, p + 0.5 * h * a, n3)
        n4 = n + h * (lam - d3)
        d4 = demand_at(m, p + h * a, n4)
        n = n + h * (lam - (d1 + 2 * d2 + 2 * d3 + d4) / 6.0)
        D += h * (d1 + 2 * d2 + 2 * d3 + d4) / 6.0
        if n <= 0.0 or min(n2, n3, n4) <= 0.0:
            if strict:
                raise InfeasibleCycleError(
                    f"online drivers exhausted at t={ts[i + 1]:.6g} (p={ps[i + 1]:.6g})")
            n = max(n, 0.0)
        ns[i + 1] = n
        dem[i + 1] = demand_at(m, ps[i + 1], n)
    return ts, ps, ns, dem, D


def _phase_durations(l, p_low, p_high):
    width = p_high - p_low
    return width / l.ell_plus, width / l.ell_minus


def clearing_residual(m: MarketParams, l: PriceLimits, p_low: float, p_high: float,
                      n1: float, dt: float = 1e-3) -> float:
    """Riders served during the online phase minus drivers arriving over the period."""
    if not p_low < p_high:
        raise DomainError("p_low must be below p_high")
    if not n1 > 0:
        raise DomainError("n1 must be positive")
    up, down = _phase_durations(l, p_low, p_high)
    *_, D = integrate_decrease_phase(m, l, p_high, down, n1, dt)
    return D - m.lambda_d * (up + down)


def demand_bound_residual(m: MarketParams, l: PriceLimits, p_low: float, p_high: float,
                          samples: int = 201) -> float:
    """Clearing residual with the rider wait cost dropped.

    Riders' effective cost is at least the price, so this upper-bounds
    `clearing_residual` for every ``n1``, and equals it when ``c_r = 0``.
    The integral is taken over price, since price is linear in time.
    """
    up, down = _phase_durations(l, p_low, p_high)
    ps = np.linspace(p_low, p_high, samples | 1)
    vals = [m.dist.survival(float(p)) for p in ps]
    served = m.lambda_r / l.ell_minus * simpson(vals, ps[1] - ps[0])
    return served - m.lambda_d * (up + down)


def build_cycle(m: MarketParams, l: PriceLimits, p_low: float, p_high: float, n1: float,
                dt: float = 1e-3, strict: bool = True) -> Cycle:
    """Assemble the trajectory of the threshold cycle through ``(p_high, n1)``.

    No clearing check is made; see `solve_cycle`. The online phase always
    follows the maximal price decrease, whatever the policy would do, so
    `validate_cycle` can tell whether the platform agrees.
    """
    if not p_low < p_high:
        raise DomainError("p_low must be below p_high")
    up, down = _phase_durations(l, p_low, p_high)
    N0 = n1 - m.lambda_d * up

    k, h = _uniform_grid(up, dt)
    t_off = h * np.arange(k + 1)
    t_off[-1] = up
    offline = Trajectory.from_columns(
        t_off, p_low + l.ell_plus * t_off, np.zeros(k + 1), N0 + m.lambda_d * t_off,
        np.full(k + 1, l.ell_plus), np.zeros(k + 1), h)

    ts, ps, ns, dem, D = integrate_decrease_phase(m, l, p_high, down, n1, dt, strict)
    ts = up + ts
    ts[-1] = up + down
    online = Trajectory.from_columns(ts, ps, ns, np.zeros_like(ns),
                                     np.full(ns.size, -l.ell_minus), dem, ts[1] - ts[0])
    residual = D - m.lambda_d * (up + down)

    cyc = Cycle(market=m, limits=l, p_low=p_low, p_high=p_high, t0=0.0, t1=up, t2=up + down,
                n1=float(n1), N0=float(N0), n_hat=float(ns.max()), residual=float(residual),
                offline=offline, online=online)
    return _with_refined_peak(cyc)


def _with_refined_peak(c: Cycle) -> Cycle:
    ns = c.online.n
    k = int(np.argmax(ns))
    if 0 < k < ns.size - 1:
        t = c.online.t
        _, peak = golden_max(c.n_at, float(t[k - 1]), float(t[k + 1]), 1e-12)
        peak = max(peak, float(ns[k]))
    else:
        peak = float(ns[k])
    return Cycle(**{**c.__dict__, "n_hat": float(peak)})


def solve_cycle(m: MarketParams, l: PriceLimits, p_low: float, p_high: float,
                n1_hint: float | None = None, dt: float = 1e-3,
                tol_clear: float | None = None) -> Cycle:
    """Find the market-clearing cycle for the given thresholds.

    With rider wait costs (``c_r > 0``) the served demand depends on the
    driver count, and ``n1`` is found by bisection on
    ``[1e-3, 100 n*]``. Without them the residual does not depend on
    ``n1``: the thresholds either clear for every ``n1`` or for none, and
    ``n1_hint`` selects the member of the family.
    """
    if not p_low < p_high:
        raise DomainError("p_low must be below p_high")
    up, down = _phase_durations(l, p_low, p_high)
    period = up + down
    if tol_clear is None:
        tol_clear = 1e-6 * m.lambda_d * period

    if m.c_r == 0.0:
        r = demand_bound_residual(m, l, p_low, p_high, samples=2001)
        if abs(r) > tol_clear:
            raise ThresholdsDontClearError(
                f"thresholds ({p_low}, {p_high}) do not clear: residual {r:.6g}")
        if n1_hint is None:
            raise UnderdeterminedCycleError(
                "c_r = 0: every n1 clears these thresholds; supply n1_hint")
        cyc = build_cycle(m, l, p_low, p_high, n1_hint, dt)
    else:
        n_star = compute_soss(m).n_star
        lo, hi = 1e-3, 100.0 * n_star

        def f(n1):
            try:
                return clearing_residual(m, l, p_low, p_high, n1, dt)
            except InfeasibleCycleError:
                return -math.inf

        try:
            n1 = find_root(f, lo, hi, tol=1e-10 * hi)
        except ArithmeticError as exc:
            raise NoClearingCycleError(
                f"no clearing n1 in [{lo}, {hi:.6g}] for thresholds ({p_low}, {p_high})") from exc
        cyc = build_cycle(m, l, p_low, p_high, n1, dt)
    if abs(cyc.residual) > tol_clear:
        raise NoClearingCycleError(f"residual {cyc.residual:.3g} exceeds tolerance {tol_clear:.3g}")
    return cyc


@dataclass
class CycleValidity:
    flags: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.flags.values())


def _all_in(b, region, ps, ns) -> bool:
    # prices outside the policy table count as a failure, not an error
    try:
        return all(classify_pn(b, float(p), float(n)) is region for p, n in zip(ps, ns))
    except ExtrapolationError:
        return False


def validate_cycle(c: Cycle, b: BoundaryCurves) -> CycleValidity:
    """Check that the cycle is consistent with the platform policy.

    Flags: ``drivers_positive`` (online count stays positive), ``policy_decreasing``
    (policy decreases the price throughout the open online phase),
    ``policy_increasing_offline`` (policy raises the price while nobody is
    online), ``p_low_positive`` and ``N0_nonnegative``.
    """
    on = c.online
    flags = {
        "drivers_positive": bool(np.all(on.n > 0.0)),
        "policy_decreasing": _all_in(b, Region.DECREASE, on.p[1:-1], on.n[1:-1]),
        "policy_increasing_offline": _all_in(b, Region.INCREASE, c.offline.p[:-1],
                                             np.zeros(c.offline.p.size - 1)),
        "p_low_positive": c.p_low > 0.0,
        "N0_nonnegative": c.N0 >= 0.0,
    }
    return CycleValidity(flags, [k for k, v in flags.items() if not v])
