"""Single-region market model: en route time, demand, driver drift and
the socially optimal steady state."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import ValueDistribution
from .errors import ConfigError, InfeasibleMarketError, NotSteadyStateError

STEADY_TOL = 1e-8


@dataclass(frozen=True)
class MarketParams:
    """Arrival rates, time costs and en route time ``tau * n**-alpha``.

    Parameters
    ----------
    lambda_d, lambda_r : float
        Driver and rider arrival rates.
    c_d, c_r : float
        Driver opportunity cost and rider waiting cost per unit time.
    tau, alpha : float
        En route time with a single online driver, and its decay exponent.
    dist : ValueDistribution
        Distribution of rider values.
    """

    lambda_d: float
    lambda_r: float
    c_d: float
    c_r: float
    tau: float
    alpha: float
    dist: ValueDistribution

    def __post_init__(self):
        if not (self.lambda_d > 0 and self.lambda_r > 0):
            raise ConfigError("arrival rates must be positive")
        if not self.c_d > 0:
            raise InfeasibleMarketError("infeasible market: c_d must be positive for an interior optimum")
        if not self.c_r >= 0:
            raise ConfigError("c_r must be non-negative")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.lambda_d > self.lambda_r:
            raise InfeasibleMarketError(
                f"infeasible market: lambda_d={self.lambda_d} exceeds lambda_r={self.lambda_r}")


@dataclass(frozen=True)
class MarketState:
    p: float
    n: float
    n_off: float = 0.0

    @property
    def total(self) -> float:
        return self.n + self.n_off


@dataclass(frozen=True)
class Soss:
    p_star: float
    n_star: float
    u_star: float
    welfare_rate: float


def en_route_time(m: MarketParams, n: float) -> float:
    if n <= 0.0:
        return math.inf
    return m.tau * n ** (-m.alpha)


def effective_rider_cost(m: MarketParams, s: MarketState) -> float:
    if m.c_r == 0.0:
        return s.p
    return s.p + m.c_r * en_route_time(m, s.n)


def demand_at(m: MarketParams, p: float, n: float) -> float:
    """Rider request rate at price ``p`` with ``n`` online drivers (zero if ``n == 0``)."""
    if n <= 0.0:
        return 0.0
    pr = p if m.c_r == 0.0 else p + m.c_r * m.tau * n ** (-m.alpha)
    return m.lambda_r * m.dist.survival(pr)


def drift_at(m: MarketParams, p: float, n: float) -> float:
    return m.lambda_d - demand_at(m, p, n)


def demand_rate(m: MarketParams, s: MarketState) -> float:
    return demand_at(m, s.p, s.n)


def drift(m: MarketParams, s: MarketState) -> float:
    return drift_at(m, s.p, s.n)


def steady_price(m: MarketParams, n: float) -> float:
    """Price on the steady-state line for ``n`` online drivers."""
    return m.dist.survival_inv(m.lambda_d / m.lambda_r) - m.c_r * en_route_time(m, n)


def optimal_driver_count(m: MarketParams) -> float:
    return (m.alpha * m.tau * m.lambda_d * (m.c_r + m.c_d) / m.c_d) ** (1.0 / (m.alpha + 1.0))


def compute_soss(m: MarketParams) -> Soss:
    ratio = m.lambda_d / m.lambda_r
    if not 0.0 < ratio <= 1.0:
        raise InfeasibleMarketError(f"infeasible market: lambda_d/lambda_r = {ratio}")
    n_star = optimal_driver_count(m)
    eta = en_route_time(m, n_star)
    p_star = m.dist.survival_inv(ratio) - m.c_r * eta
    u_star = p_star - m.c_d * eta - m.c_d * n_star / m.lambda_d
    w = _welfare(m, p_star, n_star)
    return Soss(p_star, n_star, u_star, w)


def _welfare(m: MarketParams, p: float, n: float) -> float:
    eta = en_route_time(m, n)
    pr = p + m.c_r * eta
    s = m.dist.survival(pr)
    rider_value = m.lambda_r * s * (m.dist.mean_above(pr) if s > 0 else 0.0)
    return rider_value - m.lambda_r * s * (m.c_r + m.c_d) * eta - m.c_d * n


def steady_welfare_rate(m: MarketParams, p: float, n: float, tol: float = STEADY_TOL) -> float:
    """Welfare per unit time at a steady state ``(p, n)``.

    Raises NotSteadyStateError if ``|drift| > tol * lambda_d``.
    """
    if n <= 0:
        raise NotSteadyStateError("steady welfare needs n > 0")
    d = drift_at(m, p, n)
    if abs(d) > tol * m.lambda_d:
        raise NotSteadyStateError(f"({p}, {n}) is not a steady state: drift {d:.3g}")
    return _welfare(m, p, n)


def waiting_ratio_residual(m: MarketParams, s: Soss) -> float:
    """Deviation of (driver wait)/(rider wait) at the optimum from ``alpha (c_r+c_d)/c_d``."""
    return (s.n_star / m.lambda_d) / en_route_time(m, s.n_star) - m.alpha * (m.c_r + m.c_d) / m.c_d
