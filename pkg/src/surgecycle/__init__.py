"""Fluid model of a ride-hailing market with rate-limited surge pricing.

Computes the optimal steady state, the platform pricing policy, driver
online/offline price cycles, their equilibrium and welfare properties, and
price floors that rule such cycles out.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .cycle import Cycle, build_cycle, clearing_residual, solve_cycle, validate_cycle
from .distributions import Exponential, Pareto, Uniform, ValueDistribution
from .equilibrium import StabilityReport, check_stability, solve_continuation_payoff, stability_report
from .floor import FloorReport, floor_interval, verify_floor_breaks_cycles
from .market import MarketParams, MarketState, Soss, compute_soss
from .policy import BoundaryCurves, PriceLimits, Region, build_boundary_curves
from .simulator import ThresholdStrategy, Trajectory, simulate
from .welfare import WelfareReport, check_thm43, welfare_report

__all__ = [
    "BoundaryCurves", "Cycle", "Exponential", "FloorReport", "MarketParams", "MarketState",
    "Pareto", "PriceLimits", "Region", "Soss", "StabilityReport", "ThresholdStrategy",
    "Trajectory", "Uniform", "ValueDistribution", "WelfareReport", "build_boundary_curves",
    "build_cycle", "check_stability", "check_thm43", "clearing_residual", "compute_soss",
    "floor_interval", "simulate", "solve_continuation_payoff", "solve_cycle",
    "stability_report", "validate_cycle", "verify_floor_breaks_cycles", "welfare_report",
]
