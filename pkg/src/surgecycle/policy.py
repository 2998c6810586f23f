"""Platform pricing policy.

The policy is built from two boundary curves through the optimal steady
state: ``C+`` holds the states that reach the optimum under maximal price
increase, ``C-`` those that reach it under maximal price decrease. Both are
graphs over price, so they are stored as uniform-in-price tables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExtrapolationError, IntegrationError
from .market import MarketParams, MarketState, Soss, compute_soss, demand_at

N_FLOOR = 1e-9


class Region(enum.Enum):
    AT_SOSS = "at_soss"
    INCREASE = "increase"
    DECREASE = "decrease"


@dataclass(frozen=True)
class PriceLimits:
    ell_plus: float
    ell_minus: float

    def __post_init__(self):
        if not (self.ell_plus > 0 and self.ell_minus > 0):
            raise DomainError("price rate limits must be positive")


@dataclass(frozen=True, eq=False)
class BoundaryCurves:
    """Sampled ``C+`` on ``[0, p*]`` and ``C-`` on ``[p*, p_max]``.

    ``c_plus_n[i]`` is the driver count on ``C+`` at price
    ``c_plus_p[i]`` (ascending); likewise for ``C-``. Past the point where
    ``C-`` reaches zero drivers (``minus_zero_p``) its table holds zeros.
    ``C+`` is clamped at ``n_cap``.
    """

    p_star: float
    n_star: float
    c_plus_p: np.ndarray
    c_plus_n: np.ndarray
    c_minus_p: np.ndarray
    c_minus_n: np.ndarray
    n_cap: float
    minus_zero_p: float
    tol_n: float
    tol_p: float

    @property
    def p_min(self) -> float:
        return float(self.c_plus_p[0])

    @property
    def p_max(self) -> float:
        return float(self.c_minus_p[-1])

    def c_plus(self, p: float) -> float:
        return _interp(self.c_plus_p, self.c_plus_n, p)

    def c_minus(self, p: float) -> float:
        return _interp(self.c_minus_p, self.c_minus_n, p)

    def boundary(self, p: float) -> float:
        """Driver count on the active curve at price ``p``."""
        if p < self.p_min - 1e-12 or p > self.p_max + 1e-12:
            raise ExtrapolationError(
                f"price {p:.6g} outside tabulated range [{self.p_min:.6g}, {self.p_max:.6g}]")
        if p <= self.p_star:
            return self.c_plus(p)
        return self.c_minus(p)


def _interp(xs: np.ndarray, ys: np.ndarray, x: float) -> float:
    # uniform grid: direct index instead of a search
    x0 = xs[0]
    h = (xs[-1] - x0) / (xs.size - 1)
    u = (x - x0) / h
    i = int(u)
    if i < 0:
        return float(ys[0])
    if i >= xs.size - 1:
        return float(ys[-1])
    w = u - i
    return float(ys[i] * (1.0 - w) + ys[i + 1] * w)


def _curve_slope(m: MarketParams, p: float, n: float, rate: float) -> float:
    # dn/dp along a path with constant price rate `rate`
    dem = 0.0 if n < N_FLOOR else demand_at(m, p, n)
    return (m.lambda_d - dem) / rate


def _curve_slope_positive(m: MarketParams, p: float, n: float, rate: float) -> float:
    # same, continued smoothly past n = 0 so the zero crossing can be interpolated
    return (m.lambda_d - demand_at(m, p, max(n, N_FLOOR))) / rate


def _rk4(slope, m, p, n, h, rate):
    k1 = slope(m, p, n, rate)
    k2 = slope(m, p + 0.5 * h, n + 0.5 * h * k1, rate)
    k3 = slope(m, p + 0.5 * h, n + 0.5 * h * k2, rate)
    k4 = slope(m, p + h, n + h * k3, rate)
    return n + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _trace(m: MarketParams, p0: float, n0: float, p1: float, step: float,
           rate: float, n_cap: float):
    """RK4 in price from ``(p0, n0)`` to ``p1`` on a uniform grid.

    Returns the price grid, the driver counts, and the price where the
    curve first reaches zero drivers (``inf`` if it never does). Once the
    curve reaches zero or ``n_cap`` it is held there.
    """
    k = max(1, int(math.ceil(abs(p1 - p0) / step - 1e-9)))
    h = (p1 - p0) / k
    ps = p0 + h * np.arange(k + 1)
    ps[-1] = p1
    ns = np.empty(k + 1)
    ns[0] = n0
    n = n0
    zero_p = math.inf
    held = None
    for i in range(k):
        if held is not None:
            ns[i + 1] = held
            continue
        p = ps[i]
        n_new = _rk4(_curve_slope, m, p, n, h, rate)
        if not math.isfinite(n_new):
            raise IntegrationError(f"boundary curve diverged at p={p:.6g}")
        if n_new <= 0.0:
            n_ext = min(_rk4(_curve_slope_positive, m, p, n, h, rate), 0.0)
            frac = n / (n - n_ext) if n > n_ext else 1.0
            zero_p = p + frac * h
            held = 0.0
            n_new = 0.0
        elif n_new >= n_cap:
            held = n_cap
            n_new = n_cap
        ns[i + 1] = n_new
        n = n_new
    return ps, ns, zero_p


def build_boundary_curves(m: MarketParams, l: PriceLimits, p_max: float | None = None,
                          step: float | None = None, n_cap: float | None = None,
                          soss: Soss | None = None) -> BoundaryCurves:
    """Tabulate both boundary curves.

    ``C+`` is traced backward in time (price decreasing) from the optimum
    down to zero; ``C-`` backward in time (price increasing) up to ``p_max``.
    Defaults: ``p_max`` = top of the value support + rider wait cost at the
    optimum + 1; ``step = min(1e-3, (p_max - p*)/1e4)``; ``n_cap = 100 n*``.
    """
    s = soss or compute_soss(m)
    eta_star = m.tau * s.n_star ** (-m.alpha)
    if p_max is None:
        p_max = m.dist.practical_top() + m.c_r * eta_star + 1.0
    if not p_max > s.p_star:
        raise DomainError(f"p_max={p_max} must exceed p*={s.p_star}")
    if step is None:
        step = min(1e-3, (p_max - s.p_star) / 1e4)
    if not step > 0:
        raise DomainError("step must be positive")
    if n_cap is None:
        n_cap = 100.0 * s.n_star

    if s.p_star > 0:
        pp, np_, _ = _trace(m, s.p_star, s.n_star, 0.0, step, l.ell_plus, n_cap)
        c_plus_p, c_plus_n = pp[::-1].copy(), np_[::-1].copy()
    else:
        c_plus_p = np.array([s.p_star - step, s.p_star])
        c_plus_n = np.array([s.n_star, s.n_star])
    mp, mn, zero_p = _trace(m, s.p_star, s.n_star, p_max, step, -l.ell_minus, n_cap)
    return BoundaryCurves(
        p_star=s.p_star, n_star=s.n_star,
        c_plus_p=c_plus_p, c_plus_n=c_plus_n,
        c_minus_p=mp, c_minus_n=mn,
        n_cap=n_cap, minus_zero_p=zero_p,
        tol_n=1e-6 * max(1.0, s.n_star),
        tol_p=1e-8 * max(1.0, abs(s.p_star)),
    )


def classify_region(b: BoundaryCurves, s: MarketState) -> Region:
    """Which side of the boundary curves the state lies on.

    Points on ``C+`` count as INCREASE and points on ``C-`` as DECREASE;
    "on" means within ``b.tol_n``. A state with no online drivers is always
    in the INCREASE region.
    """
    return classify_pn(b, s.p, s.n)


def classify_pn(b: BoundaryCurves, p: float, n: float) -> Region:
    if abs(p - b.p_star) <= b.tol_p and abs(n - b.n_star) <= b.tol_n:
        return Region.AT_SOSS
    c = b.boundary(p)
    if n <= 0.0:
        return Region.INCREASE
    if p <= b.p_star:
        return Region.INCREASE if n <= c + b.tol_n else Region.DECREASE
    return Region.DECREASE if n >= c - b.tol_n else Region.INCREASE


def action_for(region: Region, l: PriceLimits) -> float:
    if region is Region.INCREASE:
        return l.ell_plus
    if region is Region.DECREASE:
        return -l.ell_minus
    return 0.0


def price_derivative(b: BoundaryCurves, l: PriceLimits, s: MarketState) -> float:
    """Price rate chosen by the platform: ``+ell_plus``, ``-ell_minus`` or 0."""
    return action_for(classify_region(b, s), l)
