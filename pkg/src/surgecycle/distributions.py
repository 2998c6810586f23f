"""Rider value distributions.

Each distribution exposes the survival function ``survival(v) = P[V >= v]``,
its inverse, the conditional mean above a threshold and the integrated
tail ``E[(V - v)^+]`` used for rider surplus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError


class ValueDistribution:
    """Base class; subclasses are immutable dataclasses."""

    kind = "abstract"

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def survival(self, v: float) -> float:
        raise NotImplementedError

    def survival_inv(self, q: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def mean_above(self, v: float) -> float:
        """E[V | V >= v]; the unconditional mean below the support."""
        if self.survival(v) <= 0.0:
            raise DomainError(f"survival({v}) is zero; conditional mean undefined")
        lo = self.support[0]
        if v <= lo:
            return self.mean()
        return self._mean_above(v)

    def _mean_above(self, v: float) -> float:
        raise NotImplementedError

    def tail_integral(self, v: float) -> float:
        """E[(V - v)^+] = survival(v) * (E[V | V >= v] - v), zero past the support."""
        s = self.survival(v)
        if s <= 0.0:
            return 0.0
        return s * (self.mean_above(v) - v)

    def practical_top(self, q: float = 1e-6) -> float:
        """Upper end of the support, or the ``1 - q`` quantile if unbounded."""
        hi = self.support[1]
        return hi if math.isfinite(hi) else self.survival_inv(q)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_q(self, q):
        if not (0.0 < q <= 1.0):
            raise DomainError(f"survival level must lie in (0, 1], got {q}")


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def support(self):
        return (self.lo, self.hi)

    def survival(self, v):
        if v <= self.lo:
            return 1.0
        if v >= self.hi:
            return 0.0
        return (self.hi - v) / (self.hi - self.lo)

    def survival_inv(self, q):
        self._check_q(q)
        return self.hi - q * (self.hi - self.lo)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def _mean_above(self, v):
        return 0.5 * (v + self.hi)

    def to_dict(self):
        return {"type": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Exponential(ValueDistribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError(f"exponential rate must be positive, got {self.rate}")

    @property
    def support(self):
        return (0.0, math.inf)

    def survival(self, v):
        if v <= 0.0:
            return 1.0
        return math.exp(-self.rate * v)

    def survival_inv(self, q):
        self._check_q(q)
        return -math.log(q) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def _mean_above(self, v):
        return v + 1.0 / self.rate

    def to_dict(self):
        return {"type": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Pareto(ValueDistribution):
    scale: float
    shape: float
    kind = "pareto"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("pareto scale must be positive")
        if not self.shape > 1:
            raise ConfigError("pareto shape must exceed 1 for a finite mean")

    @property
    def support(self):
        return (self.scale, math.inf)

    def survival(self, v):
        if v <= self.scale:
            return 1.0
        return (self.scale / v) ** self.shape

    def survival_inv(self, q):
        self._check_q(q)
        return self.scale * q ** (-1.0 / self.shape)

    def mean(self):
        return self.shape * self.scale / (self.shape - 1.0)

    def _mean_above(self, v):
        return self.shape * v / (self.shape - 1.0)

    def to_dict(self):
        return {"type": "pareto", "scale": self.scale, "shape": self.shape}


def from_dict(spec: dict) -> ValueDistribution:
    """Build a distribution from its config form, e.g. ``{"type": "exponential", "mean": 30}``."""
    kind = str(spec.get("type", "")).lower()
    try:
        if kind == "uniform":
            return Uniform(float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)))
        if kind == "exponential":
            if "rate" in spec:
                return Exponential(float(spec["rate"]))
            return Exponential(1.0 / float(spec["mean"]))
        if kind == "pareto":
            return Pareto(float(spec["scale"]), float(spec["shape"]))
    except KeyError as exc:
        raise ConfigError(f"distribution {kind!r} missing parameter {exc}") from None
    raise ConfigError(f"unknown distribution type {spec.get('type')!r}")


def reciprocal_survival_convex(d: ValueDistribution, grid: Sequence[float],
                               tol: float = 1e-9) -> bool:
    """Check that ``1/survival`` has non-negative second differences on ``grid``.

    Uses the three-point second difference, which handles non-uniform
    spacing; ``tol`` is relative to the local magnitude of ``1/survival``.
    """
    x = np.asarray(grid, dtype=float)
    if x.size < 3:
        raise DomainError("convexity check needs at least 3 grid points")
    if np.any(np.diff(x) <= 0):
        raise DomainError("grid must be strictly increasing")
    lo, hi = d.support
    if x[0] <= lo or x[-1] >= hi:
        raise DomainError(f"grid must lie strictly inside the support ({lo}, {hi})")
    f = np.array([1.0 / d.survival(float(v)) for v in x])
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    slope_change = (f[2:] - f[1:-1]) / h2 - (f[1:-1] - f[:-2]) / h1
    scale = np.maximum(1.0, np.abs(f[1:-1])) / np.minimum(h1, h2)
    return bool(np.all(slope_change >= -tol * scale))


def interior_grid(d: ValueDistribution, n: int = 201, margin: float = 1e-3) -> np.ndarray:
    """Uniform grid strictly inside the (practical) support, for shape checks."""
    lo = d.support[0]
    top = d.practical_top()
    pad = margin * (top - lo)
    return np.linspace(lo + pad, top - pad, n)
