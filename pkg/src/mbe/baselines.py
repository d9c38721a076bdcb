"""Reference policies: Thompson sampling, perturbed-history exploration,
and epsilon-greedy with a decaying schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envs import RewardFamily
from .errors import ContractViolation

__all__ = [
    "BetaPosterior",
    "GaussianPosterior",
    "EGSchedule",
    "PheState",
    "ts_select",
    "ts_update",
    "phe_perturbed_mean",
    "phe_noise",
    "phe_select",
    "eg_select",
]


class BetaPosterior:
    """Independent Beta(alpha, beta) posteriors for Bernoulli arms."""

    def __init__(self, n_arms: int, alpha0: float = 1.0, beta0: float = 1.0):
        if alpha0 <= 0 or beta0 <= 0:
            raise ContractViolation("prior parameters must be > 0")
        self.alpha = np.full(n_arms, float(alpha0))
        self.beta = np.full(n_arms, float(beta0))

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        return gen.beta(self.alpha, self.beta)

    def update(self, arm: int, reward: float) -> None:
        if reward not in (0.0, 1.0):
            raise ContractViolation("Bernoulli posterior needs rewards in {0, 1}")
        if reward == 1.0:
            self.alpha[arm] += 1.0
        else:
            self.beta[arm] += 1.0

    def means(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


class GaussianPosterior:
    """Independent normal posteriors with known observation noise."""

    def __init__(self, n_arms: int, prior_mean: float = 0.5, prior_sd: float = 0.5, noise_sd: float = 1.0):
        if prior_sd <= 0 or noise_sd <= 0:
            raise ContractViolation("prior and noise sds must be > 0")
        self.prior_mean = float(prior_mean)
        self.prior_precision = 1.0 / float(prior_sd) ** 2
        self.noise_sd = float(noise_sd)
        self.counts = np.zeros(n_arms)
        self.sums = np.zeros(n_arms)

    def posterior_params(self) -> tuple[np.ndarray, np.ndarray]:
        noise_prec = 1.0 / self.noise_sd**2
        precision = self.prior_precision + self.counts * noise_prec
        mean = (self.prior_mean * self.prior_precision + self.sums * noise_prec) / precision
        return mean, precision

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        mean, precision = self.posterior_params()
        return mean + gen.standard_normal(mean.size) / np.sqrt(precision)

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm] += 1.0
        self.sums[arm] += float(reward)


def ts_select(posterior, gen: np.random.Generator) -> int:
    """Greedy action on one posterior sample per arm."""
    return int(np.argmax(posterior.sample(gen)))


def ts_update(posterior, arm: int, reward: float) -> None:
    posterior.update(arm, reward)


@dataclass(frozen=True)
class EGSchedule:
    """Exploration-rate schedule eps_t = min(1, a / (2 sqrt(t)))."""

    a: float

    def __post_init__(self):
        if self.a <= 0:
            raise ContractViolation("schedule parameter a must be > 0")

    def epsilon(self, t: int) -> float:
        if t < 1:
            raise ContractViolation("rounds are 1-based")
        return min(1.0, self.a / (2.0 * math.sqrt(t)))


def eg_select(schedule: EGSchedule, greedy_ranks: np.ndarray, t: int, gen: np.random.Generator) -> int:
    """Uniform arm with probability eps_t, otherwise empirical greedy."""
    from .bootstrap import select_argmax

    if gen.random() < schedule.epsilon(t):
        return int(gen.integers(len(greedy_ranks)))
    return select_argmax(np.asarray(greedy_ranks, dtype=float), gen)


class PheState:
    """Per-item reward sums and counts for perturbed-history exploration.

    Selection adds ceil(a * s) fresh pseudo-observations per item, drawn
    from the environment's reward family at the item's plug-in mean.
    """

    def __init__(self, n_items: int, a: float, family: RewardFamily | str, scale: float = 1.0):
        if a <= 0:
            raise ContractViolation("perturbation scale a must be > 0")
        self.a = float(a)
        self.family = family
        self.scale = float(scale)
        self.counts = np.zeros(n_items, dtype=int)
        self.sums = np.zeros(n_items)

    @property
    def n_items(self) -> int:
        return self.counts.size

    def update(self, item: int, reward: float) -> None:
        self.counts[item] += 1
        self.sums[item] += float(reward)

    def pseudo_count(self, item: int) -> int:
        return math.ceil(self.a * self.counts[item])

    def plugin_mean(self, item: int) -> float:
        return self.sums[item] / self.counts[item]


def phe_perturbed_mean(total: float, s: int, pseudo_draws: np.ndarray) -> float:
    """(sum of rewards + sum of pseudo draws) / (s + number of pseudo draws)."""
    pseudo_draws = np.asarray(pseudo_draws, dtype=float)
    return (total + float(pseudo_draws.sum())) / (s + pseudo_draws.size)


def phe_noise(family: RewardFamily | str, mean: float, scale: float, m: int, gen: np.random.Generator) -> np.ndarray:
    """m pseudo-observations from the declared family at a plug-in mean.

    ``counts`` is the geometric-count family used for assortment-choice
    observations (support 0, 1, 2, ... with the given mean).
    """
    if m == 0:
        return np.zeros(0)
    if family is RewardFamily.BERNOULLI:
        p = min(max(mean, 0.0), 1.0)
        return (gen.random(m) < p).astype(float)
    if family is RewardFamily.GAUSSIAN:
        return gen.normal(mean, scale, m)
    if family is RewardFamily.EXPONENTIAL:
        if mean <= 0:
            return np.zeros(m)
        return gen.exponential(mean, m)
    if family == "counts":
        v = max(mean, 0.0)
        if v == 0.0:
            return np.zeros(m)
        return gen.geometric(1.0 / (1.0 + v), m) - 1.0
    raise ContractViolation(f"unknown reward family {family!r}")


def phe_ranks(state: PheState, gen: np.random.Generator) -> np.ndarray:
    """Perturbed means per item; never-pulled items force exploration."""
    ranks = np.full(state.n_items, np.inf)
    for item in range(state.n_items):
        s = int(state.counts[item])
        if s == 0:
            continue
        m = state.pseudo_count(item)
        draws = phe_noise(state.family, state.plugin_mean(item), state.scale, m, gen)
        ranks[item] = phe_perturbed_mean(state.sums[item], s, draws)
    return ranks


def phe_select(state: PheState, gen: np.random.Generator) -> int:
    from .bootstrap import select_argmax

    return select_argmax(phe_ranks(state, gen), gen)
