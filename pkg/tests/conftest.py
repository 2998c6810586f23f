from __future__ import annotations

import math

import pytest

from surgecycle.cycle import solve_cycle
from surgecycle.distributions import Exponential, Uniform
from surgecycle.equilibrium import stability_report
from surgecycle.market import MarketParams, compute_soss
from surgecycle.policy import PriceLimits, build_boundary_curves

TAU_SYM = 3 * math.sqrt(3) / 4


def symmetric_market(**kw) -> MarketParams:
    base = dict(lambda_d=1.0, lambda_r=5.0, c_d=0.03, c_r=0.0, tau=TAU_SYM, alpha=0.5, dist=Uniform())
    base.update(kw)
    return MarketParams(**base)


def asymmetric_market(**kw) -> MarketParams:
    base = dict(lambda_d=1.0, lambda_r=5.0, c_d=0.08, c_r=0.0, tau=2.0, alpha=0.5, dist=Uniform())
    base.update(kw)
    return MarketParams(**base)


def large_market() -> MarketParams:
    return MarketParams(3.0, 12.0, 1 / 3, 0.0, 15.0, 1 / 3, Exponential(1 / 30))


def rider_wait_market() -> MarketParams:
    return symmetric_market(c_r=0.5, dist=Exponential(2.5))


@pytest.fixture(scope="session")
def sym():
    return symmetric_market()


@pytest.fixture(scope="session")
def asym():
    return asymmetric_market()


@pytest.fixture(scope="session")
def sym_limits():
    return PriceLimits(0.1, 0.1)


@pytest.fixture(scope="session")
def asym_limits():
    return PriceLimits(0.2, 0.1)


@pytest.fixture(scope="session")
def sym_curves(sym, sym_limits):
    return build_boundary_curves(sym, sym_limits)


@pytest.fixture(scope="session")
def asym_curves(asym, asym_limits):
    return build_boundary_curves(asym, asym_limits)


@pytest.fixture(scope="session")
def sym_soss(sym):
    return compute_soss(sym)


@pytest.fixture(scope="session")
def sym_cycle(sym, sym_limits):
    return solve_cycle(sym, sym_limits, 0.3, 0.9, 14.0)


@pytest.fixture(scope="session")
def asym_cycle(asym, asym_limits):
    return solve_cycle(asym, asym_limits, 0.5, 0.9, 4.5)


@pytest.fixture(scope="session")
def sym_report(sym, sym_cycle):
    return stability_report(sym, sym_cycle)


@pytest.fixture(scope="session")
def asym_report(asym, asym_cycle):
    return stability_report(asym, asym_cycle)
