"""Multiplier-weight distributions and the exploration tuning condition.

All supported weight laws have mean 1. Samplers are stateless: they draw
from an explicit numpy generator, so any number of workers can share one
distribution object as long as each owns its generator.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)

__all__ = [
    "WeightDistribution",
    "TuningParams",
    "TheoryStatus",
    "sample_weights",
    "sample_weight",
    "sample_triplet",
    "tuning_threshold",
    "validate_tuning",
    "parse_dist_spec",
]


class WeightKind(enum.Enum):
    GAUSSIAN_UNIT_MEAN = "gauss"
    EXPONENTIAL_UNIT = "exp"
    POISSON_UNIT = "poisson"
    DOUBLE_OR_NOTHING = "don"


@dataclass(frozen=True)
class WeightDistribution:
    """A mean-one multiplier law. ``sigma_omega`` applies to the Gaussian kind only."""

    kind: WeightKind
    sigma_omega: float | None = None

    def __post_init__(self):
        if self.kind is WeightKind.GAUSSIAN_UNIT_MEAN:
            if self.sigma_omega is None or not self.sigma_omega > 0:
                raise ConfigError("gaussian weights need sigma_omega > 0")
        elif self.sigma_omega is not None:
            raise ConfigError(f"{self.kind.value} weights take no sigma parameter")

    @staticmethod
    def gaussian(sigma_omega: float) -> "WeightDistribution":
        return WeightDistribution(WeightKind.GAUSSIAN_UNIT_MEAN, float(sigma_omega))

    @staticmethod
    def exponential() -> "WeightDistribution":
        return WeightDistribution(WeightKind.EXPONENTIAL_UNIT)

    @staticmethod
    def poisson() -> "WeightDistribution":
        return WeightDistribution(WeightKind.POISSON_UNIT)

    @staticmethod
    def double_or_nothing() -> "WeightDistribution":
        return WeightDistribution(WeightKind.DOUBLE_OR_NOTHING)

    def spec(self) -> str:
        if self.kind is WeightKind.GAUSSIAN_UNIT_MEAN:
            return f"gauss:{self.sigma_omega:g}"
        return self.kind.value


@dataclass(frozen=True)
class TuningParams:
    """Pseudo-reward weight multiplier plus the multiplier law.

    ``lam = 0`` disables pseudo-rewards (the naive variant).
    """

    lam: float
    dist: WeightDistribution

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")


class TheoryStatus(enum.Enum):
    SATISFIED = "satisfied"
    PRACTICAL_ONLY = "practical_only"


def sample_weights(dist: WeightDistribution, gen: np.random.Generator, size=None) -> np.ndarray | float:
    """Draw multiplier weights; scalar when ``size`` is None."""
    if dist.kind is WeightKind.GAUSSIAN_UNIT_MEAN:
        return gen.normal(1.0, dist.sigma_omega, size)
    if dist.kind is WeightKind.EXPONENTIAL_UNIT:
        return gen.exponential(1.0, size)
    if dist.kind is WeightKind.POISSON_UNIT:
        out = gen.poisson(1.0, size)
        return float(out) if size is None else out.astype(float)
    # double-or-nothing: 2 x Bernoulli(0.5)
    out = 2.0 * gen.integers(0, 2, size=size)
    return float(out) if size is None else out.astype(float)


def sample_weight(dist: WeightDistribution, gen: np.random.Generator) -> float:
    return float(sample_weights(dist, gen))


def sample_triplet(dist: WeightDistribution, gen: np.random.Generator) -> tuple[float, float, float]:
    """Three independent draws from the same law (data, pseudo-1, pseudo-0)."""
    w = sample_weights(dist, gen, 3)
    return float(w[0]), float(w[1]), float(w[2])


def tuning_threshold(sigma_omega: float) -> float:
    """Smallest pseudo-reward multiplier covered by the regret analysis."""
    if not sigma_omega > 0:
        raise ConfigError("sigma_omega must be > 0")
    base = 1.0 + 4.0 / sigma_omega
    return base + math.sqrt(4.0 * base / sigma_omega)


def validate_tuning(lam: float, sigma_omega: float) -> TheoryStatus:
    """Classify (lambda, sigma_omega) against the theoretical condition.

    A ``practical_only`` verdict is a notice, never an error: runs proceed,
    mirroring the common practice of using smaller lambda than the theory asks.
    """
    threshold = tuning_threshold(sigma_omega)
    if lam >= threshold:
        return TheoryStatus.SATISFIED
    logger.warning(
        "lambda=%g is below the theoretical threshold %.6g for sigma_omega=%g; "
        "running in practical mode", lam, threshold, sigma_omega,
    )
    return TheoryStatus.PRACTICAL_ONLY


def parse_dist_spec(spec: str) -> WeightDistribution:
    """Parse ``gauss:<sigma>``, ``exp``, ``poisson`` or ``don``."""
    parts = spec.split(":")
    name = parts[0].strip().lower()
    if name == "gauss":
        if len(parts) != 2:
            raise ConfigError(f"expected gauss:<sigma>, got {spec!r}")
        try:
            sigma = float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"bad sigma in weight spec {spec!r}") from exc
        return WeightDistribution.gaussian(sigma)
    if len(parts) != 1:
        raise ConfigError(f"unexpected parameters in weight spec {spec!r}")
    if name == "exp":
        return WeightDistribution.exponential()
    if name == "poisson":
        return WeightDistribution.poisson()
    if name == "don":
        return WeightDistribution.double_or_nothing()
    raise ConfigError(f"unknown weight distribution {spec!r}")
