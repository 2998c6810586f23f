"""Deterministic numerical kernels.

Everything here is fixed-step and bisection based so that runs are
bit-reproducible: classic RK4 with event location, bracketed bisection,
composite Simpson quadrature and golden-section maximization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, DomainError, IntegrationError

EVENT_TIME_TOL = 1e-10
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OdeProblem:
    """Initial value problem ``y' = rhs(t, y)``, ``y(t0) = y0``."""

    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    y0: Sequence[float]
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")

    @property
    def dimension(self) -> int:
        return len(self.y0)


@dataclass
class EventHit:
    index: int
    t: float
    y: np.ndarray


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray
    events: list[EventHit] = field(default_factory=list)


def rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_finite(y, t):
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite state {y!r} at t={t:.12g}")


def locate_crossing(pred: Callable[[float], bool], lo: float, hi: float,
                    tol: float = EVENT_TIME_TOL) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` around the first point where ``pred`` flips to true.

    ``pred(lo)`` must be false and ``pred(hi)`` true. Returns the final
    bracket, whose right end satisfies the predicate.
    """
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def integrate(prob: OdeProblem, t_end: float,
              events: Sequence[Callable[[float, np.ndarray], float]] = ()) -> IntegrationResult:
    """Fixed-step RK4 from ``prob.t0`` to ``t_end``.

    Samples are returned on the uniform grid ``t0 + k*dt`` (the last step is
    shortened to land on ``t_end``). Each event function's sign change inside
    a step is located by bisection to within 1e-10 in time; the integrator
    then restarts from the event point. An event function with a truthy
    ``terminal`` attribute stops the integration at the event.
    """
    if not t_end > prob.t0:
        raise DomainError("t_end must exceed t0")
    rhs = prob.rhs
    y = np.asarray(prob.y0, dtype=float)
    _check_finite(y, prob.t0)
    n_steps = max(1, int(math.ceil((t_end - prob.t0) / prob.dt - 1e-9)))
    ts = [prob.t0]
    ys = [y.copy()]
    hits: list[EventHit] = []
    t = prob.t0
    for k in range(1, n_steps + 1):
        t_next = min(prob.t0 + k * prob.dt, t_end)
        while True:
            h = t_next - t
            y_new = rk4_step(rhs, t, y, h)
            _check_finite(y_new, t_next)
            g0 = [ev(t, y) for ev in events]
            g1 = [ev(t_next, y_new) for ev in events]
            crossed = [i for i in range(len(events))
                       if g0[i] != 0.0 and (g0[i] < 0.0) != (g1[i] < 0.0)]
            if not crossed:
                t, y = t_next, y_new
                break
            # earliest crossing among all flagged events
            best = None
            for i in crossed:
                s0 = g0[i] < 0.0

                def flipped(tau, i=i, s0=s0):
                    return (events[i](t + tau, rk4_step(rhs, t, y, tau)) < 0.0) != s0

                _, tau = locate_crossing(flipped, 0.0, h)
                if best is None or tau < best[1]:
                    best = (i, tau)
            i, tau = best
            y_ev = rk4_step(rhs, t, y, tau)
            hits.append(EventHit(i, t + tau, y_ev.copy()))
            t, y = t + tau, y_ev
            if getattr(events[i], "terminal", False):
                ts.append(t)
                ys.append(y.copy())
                return IntegrationResult(np.array(ts), np.array(ys), hits)
            if t_next - t <= 0.0:
                break
        ts.append(t)
        ys.append(y.copy())
    return IntegrationResult(np.array(ts), np.array(ys), hits)


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: float = 1e-12, max_iter: int = 400) -> float:
    """Bisection on a sign-changing bracket until ``hi - lo <= tol``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.6g}, {fhi:.6g}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simpson(values: Sequence[float], dx: float) -> float:
    """Composite Simpson rule on a uniform grid.

    With an even number of samples the final interval is added by the
    trapezoid rule.
    """
    v = np.asarray(values, dtype=float)
    m = v.size
    if m < 3:
        raise DomainError("simpson needs at least 3 samples")
    tail = 0.0
    if m % 2 == 0:
        tail = 0.5 * dx * (v[-2] + v[-1])
        v = v[:-1]
    s = v[0] + v[-1] + 4.0 * v[1:-1:2].sum() + 2.0 * v[2:-1:2].sum()
    return float(s * dx / 3.0 + tail)


def golden_max(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-10) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    # the endpoints of the original bracket are candidates too
    return max([(x, fx), (c, fc), (d, fd)], key=lambda p: p[1])


def grid_max(f: Callable[[float], float], a: float, b: float, grid_n: int = 4096,
             tol: float = 1e-10) -> tuple[float, float]:
    """Coarse grid scan followed by golden-section refinement around the best point."""
    ts = np.linspace(a, b, grid_n)
    vals = np.array([f(float(t)) for t in ts])
    k = int(np.argmax(vals))
    lo = float(ts[max(k - 1, 0)])
    hi = float(ts[min(k + 1, grid_n - 1)])
    x, fx = golden_max(f, lo, hi, tol)
    if vals[k] > fx:
        return float(ts[k]), float(vals[k])
    return x, fx
