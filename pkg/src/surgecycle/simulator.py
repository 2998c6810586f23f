"""Closed-loop simulation of platform pricing and driver online/offline behaviour."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError
from .market import MarketParams, MarketState, Soss, demand_at
from .numerics import locate_crossing
from .policy import BoundaryCurves, PriceLimits, action_for, classify_pn

MAX_EVENTS_PER_STEP = 64
TRAJECTORY_HEADER = ("t", "p", "n", "n_off", "N", "dpdt", "demand")


class Mode(enum.Enum):
    ONLINE = 1
    OFFLINE = 0


@dataclass(frozen=True)
class ThresholdStrategy:
    """Drivers go offline when the price falls to ``p_low`` and return at ``p_high``."""

    p_low: float
    p_high: float

    def __post_init__(self):
        if not 0 < self.p_low < self.p_high:
            raise DomainError(f"need 0 < p_low < p_high, got ({self.p_low}, {self.p_high})")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    p: np.ndarray
    n: np.ndarray
    n_off: np.ndarray
    dpdt: np.ndarray
    demand: np.ndarray
    dt: float

    @property
    def N(self) -> np.ndarray:
        return self.n + self.n_off

    def __len__(self):
        return self.t.size

    def rows(self):
        N = self.N
        for i in range(self.t.size):
            yield (self.t[i], self.p[i], self.n[i], self.n_off[i], N[i], self.dpdt[i], self.demand[i])

    @classmethod
    def from_columns(cls, t, p, n, n_off, dpdt, demand, dt) -> "Trajectory":
        return cls(*(np.asarray(c, dtype=float) for c in (t, p, n, n_off, dpdt, demand)), float(dt))


class _Loop:
    """Mutable integration state for one `simulate` call."""

    def __init__(self, m, l, b, strategy, floor):
        self.m, self.l, self.b = m, l, b
        self.strategy = strategy
        self.floor = floor

    def action(self, p, n):
        a = action_for(classify_pn(self.b, p, n), self.l)
        if self.floor is not None and a < 0.0 and p <= self.floor:
            return 0.0
        return a

    def wanted_mode(self, mode, p, n, N):
        st = self.strategy
        if st is None:
            return Mode.ONLINE
        if mode is Mode.ONLINE:
            if p <= st.p_low or (p < st.p_high and self.action(p, n) > 0.0):
                return Mode.OFFLINE
            return Mode.ONLINE
        if p >= st.p_high or (p > st.p_low and self.action(p, 0.0) <= 0.0):
            return Mode.ONLINE
        return Mode.OFFLINE

    def step(self, p, n, n_off, mode, a, h):
        """One RK4 step of length ``h`` with the price rate held at ``a``."""
        if mode is Mode.OFFLINE:
            return p + a * h, n, n_off + self.m.lambda_d * h
        m = self.m
        k1 = m.lambda_d - demand_at(m, p, n)
        k2 = m.lambda_d - demand_at(m, p + 0.5 * h * a, n + 0.5 * h * k1)
        k3 = m.lambda_d - demand_at(m, p + 0.5 * h * a, n + 0.5 * h * k2)
        k4 = m.lambda_d - demand_at(m, p + h * a, n + h * k3)
        n_new = n + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        return p + a * h, max(n_new, 0.0), n_off


def initial_mode(m: MarketParams, l: PriceLimits, b: BoundaryCurves,
                 strategy: ThresholdStrategy | None, s0: MarketState, floor=None) -> Mode:
    """Mode of the driver population at ``s0``, evaluating the threshold rule with everyone online."""
    if strategy is None:
        return Mode.ONLINE
    loop = _Loop(m, l, b, strategy, floor)
    N = s0.n + s0.n_off
    if s0.p <= strategy.p_low or (s0.p < strategy.p_high and loop.action(s0.p, N) > 0.0):
        return Mode.OFFLINE
    return Mode.ONLINE


def simulate(m: MarketParams, l: PriceLimits, b: BoundaryCurves,
             strategy: ThresholdStrategy | None, s0: MarketState, t_end: float,
             dt: float = 1e-3, floor: float | None = None) -> Trajectory:
    """Integrate the market forward under the platform policy.

    With a threshold strategy every driver is either online or offline;
    offline drivers accumulate in ``n_off`` and rejoin all at once. The
    initial split between ``n`` and ``n_off`` is reassigned according to
    the strategy's mode at ``s0``. Policy switches, threshold crossings and
    floor hits are located by bisection inside the step, and samples are
    reported on the uniform grid ``k*dt``. The lowest tabulated policy
    price (zero) acts as a floor even when ``floor`` is None.
    """
    if not dt > 0 or not t_end > 0:
        raise DomainError("dt and t_end must be positive")
    if s0.n < 0 or s0.n_off < 0:
        raise DomainError("driver counts must be non-negative")
    if floor is not None and s0.p < floor:
        raise DomainError(f"initial price {s0.p} below floor {floor}")
    floor = b.p_min if floor is None else max(floor, b.p_min)
    loop = _Loop(m, l, b, strategy, floor)
    mode = initial_mode(m, l, b, strategy, s0, floor)
    N0 = s0.n + s0.n_off
    if strategy is None:
        p, n, n_off = s0.p, s0.n, s0.n_off
    elif mode is Mode.ONLINE:
        p, n, n_off = s0.p, N0, 0.0
    else:
        p, n, n_off = s0.p, 0.0, N0

    k_end = int(math.ceil(t_end / dt - 1e-9))
    cols = np.empty((k_end + 1, 6))
    a = loop.action(p, n)
    cols[0] = (p, n, n_off, a, _online_demand(m, p, n, mode), 0.0)
    t = 0.0
    for k in range(1, k_end + 1):
        t_next = min(k * dt, t_end)
        events = 0
        while True:
            h = t_next - t
            if h <= 0.0:
                break
            p1, n1, off1 = loop.step(p, n, n_off, mode, a, h)

            def changed(tau, p=p, n=n, n_off=n_off, mode=mode, a=a):
                q, nn, oo = loop.step(p, n, n_off, mode, a, tau)
                if loop.floor is not None and q < loop.floor:
                    return True
                if loop.wanted_mode(mode, q, nn, nn + oo) is not mode:
                    return True
                return loop.action(q, nn) != a

            if events >= MAX_EVENTS_PER_STEP or not changed(h):
                p, n, n_off, t = p1, n1, off1, t_next
                break
            events += 1
            _, tau = locate_crossing(changed, 0.0, h)
            p, n, n_off = loop.step(p, n, n_off, mode, a, tau)
            t = t + tau
            if floor is not None and p < floor:
                p = floor
            new_mode = loop.wanted_mode(mode, p, n, n + n_off)
            if new_mode is not mode:
                if new_mode is Mode.ONLINE:
                    n, n_off = n + n_off, 0.0
                else:
                    n, n_off = 0.0, n + n_off
                mode = new_mode
            a = loop.action(p, n)
        if not (math.isfinite(p) and math.isfinite(n) and math.isfinite(n_off)):
            raise IntegrationError(f"non-finite state at t={t:.6g}")
        a = loop.action(p, n)
        cols[k] = (p, n, n_off, a, _online_demand(m, p, n, mode), 0.0)
    ts = dt * np.arange(k_end + 1)
    ts[-1] = min(ts[-1], t_end) if k_end > 0 else 0.0
    return Trajectory.from_columns(ts, cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], cols[:, 4], dt)


def _online_demand(m, p, n, mode):
    return demand_at(m, p, n) if mode is Mode.ONLINE else 0.0


def time_to_soss(traj: Trajectory, soss: Soss, tol_p: float = 1e-3,
                 tol_n: float = 1e-2) -> float | None:
    """First sample time within the tolerances of the optimum, or None if never reached."""
    hit = np.nonzero((np.abs(traj.p - soss.p_star) <= tol_p)
                     & (np.abs(traj.n - soss.n_star) <= tol_n))[0]
    if hit.size == 0:
        return None
    return float(traj.t[hit[0]])
