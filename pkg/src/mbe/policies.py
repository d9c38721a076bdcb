"""Policy objects: one mutable state per simulated episode.

The factory dispatches each algorithm spec to the specialization matching
the environment family. Policies only read public environment structure
(arm counts, features, revenues, declared noise family); hidden parameters
stay hidden unless an option is explicitly oracle-informed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines, bootstrap
from .envs import (
    CascadeEnv,
    CascadeFeedback,
    EnvSpec,
    LinEnv,
    MabEnv,
    MnlEnv,
    RewardFamily,
    SemiBanditEnv,
    best_subset,
)
from .errors import ConfigError
from .rng import RngStream
from .weights import TuningParams, WeightDistribution, parse_dist_spec

__all__ = ["AlgSpec", "parse_alg_spec", "make_policy", "realized_reward"]


# ---------------------------------------------------------------------------
# algorithm spec grammar


@dataclass(frozen=True)
class AlgSpec:
    name: str
    params: tuple[tuple[str, str], ...]
    label: str

    def get(self, key: str, default: str | None = None) -> str | None:
        return dict(self.params).get(key, default)

    def tunable(self) -> str | None:
        """Which parameter a hyper-parameter sweep varies, if any."""
        if self.name == "mbe":
            return "lambda"
        if self.name in ("phe", "eg"):
            return "a"
        if self.name == "naive-mb":
            dist = self.get("dist", "gauss:1")
            return "sigma" if dist.startswith("gauss") else None
        return None

    def with_param(self, key: str, value: float) -> "AlgSpec":
        params = dict(self.params)
        if key == "sigma" and self.name == "naive-mb":
            params["dist"] = f"gauss:{value:g}"
        else:
            params[key] = f"{value:g}"
        items = tuple(sorted(params.items()))
        label = ":".join([self.name] + [f"{k}={v}" for k, v in items])
        return AlgSpec(self.name, items, label)


def parse_alg_spec(spec: str) -> AlgSpec:
    """Parse the algorithm grammar, e.g. ``mbe:lambda=0.5:sigma=1:B=50``.

    A token without '=' extends the previous value (so ``dist=gauss:1``
    survives the colon split) or, first, names a flavor (``ts:bernoulli``).
    """
    parts = [p for p in spec.strip().split(":") if p]
    if not parts:
        raise ConfigError("empty algorithm spec")
    name = parts[0].lower()
    if name not in ("mbe", "naive-mb", "ts", "phe", "eg"):
        raise ConfigError(f"unknown algorithm {name!r}")
    params: dict[str, str] = {}
    last_key: str | None = None
    positional: list[str] = []
    for tok in parts[1:]:
        if "=" in tok:
            key, value = tok.split("=", 1)
            key = key.strip().lower()
            params[key] = value.strip()
            last_key = key
        elif last_key is not None:
            params[last_key] += ":" + tok.strip()
        else:
            positional.append(tok.strip().lower())
    if name == "ts":
        if positional:
            if len(positional) != 1 or "flavor" in params:
                raise ConfigError(f"ts spec takes one flavor: {spec!r}")
            params["flavor"] = positional[0]
        if params.get("flavor") not in ("bernoulli", "gauss"):
            raise ConfigError(f"ts spec needs a flavor (bernoulli|gauss): {spec!r}")
    elif positional:
        raise ConfigError(f"unexpected tokens {positional} in {spec!r}")
    allowed = {
        "mbe": {"lambda", "sigma", "dist", "b", "exact", "ridge", "pseudo"},
        "naive-mb": {"dist", "b", "exact"},
        "ts": {"flavor", "prior"},
        "phe": {"a"},
        "eg": {"a"},
    }[name]
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {spec!r}")
    items = tuple(sorted(params.items()))
    label = ":".join([name] + [f"{k}={v}" for k, v in items])
    return AlgSpec(name, items, label)


def _float(spec: AlgSpec, key: str, default: float) -> float:
    raw = spec.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r} in {spec.label!r}") from exc


def _bool(spec: AlgSpec, key: str, default: bool) -> bool:
    raw = spec.get(key)
    if raw is None:
        return default
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"bad boolean for {key!r} in {spec.label!r}")


def _tuning(spec: AlgSpec, lam: float) -> TuningParams:
    raw_dist = spec.get("dist")
    if raw_dist is not None:
        dist = parse_dist_spec(raw_dist)
    else:
        dist = WeightDistribution.gaussian(_float(spec, "sigma", 1.0))
    return TuningParams(lam, dist)


# ---------------------------------------------------------------------------
# assembly helpers shared by every structured policy


def topk_ordered(ranks: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    """Indices of the k largest ranks, best first, ties broken randomly."""
    jitter = gen.permutation(ranks.size)
    order = np.lexsort((jitter, -ranks))
    return order[:k]


def per_group_topk(ranks: np.ndarray, groups, per_group: int, gen: np.random.Generator) -> np.ndarray:
    picks = []
    for g in groups:
        g = np.asarray(g, dtype=int)
        picks.append(g[topk_ordered(ranks[g], per_group, gen)])
    return np.concatenate(picks)


def assortment_from_ranks(
    ranks: np.ndarray, revenues: np.ndarray, k: int, gen: np.random.Generator
) -> np.ndarray:
    """Best assortment under estimated attractiveness values.

    Items never observed (rank +inf) are offered first, up to k at a time;
    undefined estimates (-inf) enter the search as 0.
    """
    unseen = np.isposinf(ranks)
    if unseen.any():
        pool = np.flatnonzero(unseen)
        take = min(k, pool.size)
        return gen.choice(pool, size=take, replace=False)
    values = np.where(np.isfinite(ranks), ranks, 0.0)
    items, _ = best_subset(values, revenues, k)
    return items


# ---------------------------------------------------------------------------
# multi-armed bandit policies


class MbeMabExact:
    """Full-resample variant: every round redraws weights for the whole
    history of every arm."""

    oracle_informed = False

    def __init__(self, n_arms: int, params: TuningParams, stream: RngStream):
        self.params = params
        self.histories = [bootstrap.ArmHistory() for _ in range(n_arms)]
        self.gen = stream.generator()

    def select(self, t: int) -> int:
        scores = bootstrap.mbe_mab_scores(self.histories, self.params, self.gen)
        return bootstrap.select_argmax(scores, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        self.histories[arm].append(float(reward))


class MbeMabEnsemble:
    """Replicated-accumulator approximation of the full resample."""

    oracle_informed = False

    def __init__(self, n_arms: int, params: TuningParams, B: int, stream: RngStream):
        self.state = bootstrap.EnsembleState(n_arms, params, B)
        self.gen = stream.generator()

    def select(self, t: int) -> int:
        return bootstrap.ensemble_select(self.state, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        self.state.update(arm, float(reward), self.gen)


class MbeLinear:
    """Incremental weighted-ridge replicas over fixed arm features.

    The first p rounds force arms 1..p so every direction is observed once.
    """

    oracle_informed = False

    def __init__(
        self,
        features: np.ndarray,
        params: TuningParams,
        B: int,
        stream: RngStream,
        ridge: float = 0.0,
        pseudo: str = "identity",
    ):
        self.features = np.asarray(features, dtype=float)
        p = self.features.shape[1]
        self.state = bootstrap.LinearEnsembleState(p, params, B=B, ridge=ridge, pseudo=pseudo)
        self.gen = stream.generator()

    def select(self, t: int) -> int:
        p = self.state.p
        if t <= p:
            return t - 1
        b = int(self.gen.integers(self.state.B))
        values = self.state.replicate_values(b, self.features)
        return bootstrap.select_argmax(values, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        self.state.update(self.features[arm], float(reward), self.gen)


class TsBernoulli:
    def __init__(self, n_arms: int, stream: RngStream, alpha0=1.0, beta0=1.0, oracle_informed=False):
        self.posterior = baselines.BetaPosterior(n_arms, alpha0, beta0)
        self.gen = stream.generator()
        self.oracle_informed = oracle_informed

    def select(self, t: int) -> int:
        return baselines.ts_select(self.posterior, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        baselines.ts_update(self.posterior, arm, float(reward))


class TsGaussian:
    def __init__(self, n_arms: int, noise_sd: float, stream: RngStream,
                 prior_mean=0.5, prior_sd=0.5, oracle_informed=False):
        self.posterior = baselines.GaussianPosterior(n_arms, prior_mean, prior_sd, noise_sd)
        self.gen = stream.generator()
        self.oracle_informed = oracle_informed

    def select(self, t: int) -> int:
        return baselines.ts_select(self.posterior, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        baselines.ts_update(self.posterior, arm, float(reward))


class PheMab:
    oracle_informed = False

    def __init__(self, n_arms: int, a: float, family: RewardFamily, scale: float, stream: RngStream):
        self.state = baselines.PheState(n_arms, a, family, scale)
        self.gen = stream.generator()

    def select(self, t: int) -> int:
        return baselines.phe_select(self.state, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        self.state.update(arm, float(reward))


class EgMab:
    oracle_informed = False

    def __init__(self, n_arms: int, a: float, stream: RngStream):
        self.schedule = baselines.EGSchedule(a)
        self.counts = np.zeros(n_arms, dtype=int)
        self.sums = np.zeros(n_arms)
        self.gen = stream.generator()

    def greedy_ranks(self) -> np.ndarray:
        ranks = np.full(self.counts.size, np.inf)
        seen = self.counts > 0
        ranks[seen] = self.sums[seen] / self.counts[seen]
        return ranks

    def select(self, t: int) -> int:
        return baselines.eg_select(self.schedule, self.greedy_ranks(), t, self.gen)

    def update(self, t: int, arm: int, reward: float) -> None:
        self.counts[arm] += 1
        self.sums[arm] += float(reward)


# ---------------------------------------------------------------------------
# structured policies: a per-item scorer plus family-specific assembly


class _ItemStats:
    """Plain per-item empirical means (epsilon-greedy's scorer)."""

    def __init__(self, n_items: int):
        self.counts = np.zeros(n_items, dtype=int)
        self.sums = np.zeros(n_items)

    def update(self, item: int, value: float, gen=None) -> None:
        self.counts[item] += 1
        self.sums[item] += float(value)

    def ranks(self, gen) -> np.ndarray:
        out = np.full(self.counts.size, np.inf)
        seen = self.counts > 0
        out[seen] = self.sums[seen] / self.counts[seen]
        return out

    def value_scale_ranks(self, gen) -> np.ndarray:
        return self.ranks(gen)  # empirical means already live on the observation scale


class _EnsembleScorer:
    def __init__(self, n_items: int, params: TuningParams, B: int):
        self.state = bootstrap.EnsembleState(n_items, params, B)

    def update(self, item: int, value: float, gen) -> None:
        self.state.update(item, value, gen)

    def ranks(self, gen) -> np.ndarray:
        b = int(gen.integers(self.state.B))
        return self.state.replicate_ranks(b)

    def value_scale_ranks(self, gen) -> np.ndarray:
        """Ranks mapped back to the observation scale.

        The pseudo-rewards shift a score toward (value + lam)/(1 + 2 lam);
        inverting that affine map keeps the bootstrap randomness but restores
        the scale, which matters wherever assembly is not order-based (the
        assortment search). Infinite sentinels pass through untouched.
        """
        ranks = self.ranks(gen)
        lam = self.state.params.lam
        finite = np.isfinite(ranks)
        ranks[finite] = (1.0 + 2.0 * lam) * ranks[finite] - lam
        return ranks


class _PheScorer:
    def __init__(self, n_items: int, a: float, family, scale: float):
        self.state = baselines.PheState(n_items, a, family, scale)

    def update(self, item: int, value: float, gen) -> None:
        self.state.update(item, value)

    def ranks(self, gen) -> np.ndarray:
        return baselines.phe_ranks(self.state, gen)

    def value_scale_ranks(self, gen) -> np.ndarray:
        return self.ranks(gen)  # perturbed means stay on the observation scale


class _ExploreMixin:
    """Optional uniform exploration for epsilon-greedy slates."""

    schedule: baselines.EGSchedule | None = None

    def _explores(self, t: int, gen) -> bool:
        return self.schedule is not None and gen.random() < self.schedule.epsilon(t)


class CascadePolicy(_ExploreMixin):
    oracle_informed = False

    def __init__(self, env: CascadeEnv, scorer, stream: RngStream, schedule=None):
        self.n_items = env.n_items
        self.k = env.slate_size
        self.scorer = scorer
        self.schedule = schedule
        self.gen = stream.generator()

    def select(self, t: int) -> np.ndarray:
        if self._explores(t, self.gen):
            return self.gen.choice(self.n_items, size=self.k, replace=False)
        return topk_ordered(self.scorer.ranks(self.gen), self.k, self.gen)

    def update(self, t: int, slate, feedback: CascadeFeedback) -> None:
        for item, outcome in zip(feedback.examined, feedback.outcomes):
            self.scorer.update(int(item), float(outcome), self.gen)


class SemiBanditPolicy(_ExploreMixin):
    oracle_informed = False

    def __init__(self, env: SemiBanditEnv, scorer, stream: RngStream, schedule=None):
        self.groups = env.groups
        self.per_group = env.slate_size // 2
        self.scorer = scorer
        self.schedule = schedule
        self.gen = stream.generator()

    def _uniform_slate(self) -> np.ndarray:
        picks = [self.gen.choice(g, size=self.per_group, replace=False) for g in self.groups]
        return np.concatenate(picks)

    def select(self, t: int) -> np.ndarray:
        if self._explores(t, self.gen):
            return self._uniform_slate()
        ranks = self.scorer.ranks(self.gen)
        return per_group_topk(ranks, self.groups, self.per_group, self.gen)

    def update(self, t: int, items, feedback: np.ndarray) -> None:
        for item, value in zip(items, feedback):
            self.scorer.update(int(item), float(value), self.gen)


class MnlPolicy(_ExploreMixin):
    """Epoch protocol: the offered set stays frozen until a no-purchase;
    the per-epoch choice count of every offered item is one observation."""

    oracle_informed = False

    def __init__(self, env: MnlEnv, scorer, stream: RngStream, schedule=None):
        self.n_items = env.n_items
        self.k = env.slate_size
        self.revenues = env.revenues.copy()
        self.scorer = scorer
        self.schedule = schedule
        self.gen = stream.generator()
        self.current: np.ndarray | None = None
        self.epoch_counts = np.zeros(env.n_items, dtype=int)

    def select(self, t: int) -> np.ndarray:
        if self.current is None:
            if self._explores(t, self.gen):
                take = min(self.k, self.n_items)
                self.current = self.gen.choice(self.n_items, size=take, replace=False)
            else:
                estimates = self.scorer.value_scale_ranks(self.gen)
                self.current = assortment_from_ranks(estimates, self.revenues, self.k, self.gen)
            self.epoch_counts[:] = 0
        return self.current

    def update(self, t: int, items, choice: int | None) -> None:
        if choice is not None:
            self.epoch_counts[choice] += 1
            return
        for item in self.current:
            self.scorer.update(int(item), float(self.epoch_counts[item]), self.gen)
        self.current = None


# ---------------------------------------------------------------------------
# factory


def _beta_moments(alpha: float, beta: float) -> tuple[float, float]:
    mean = alpha / (alpha + beta)
    var = alpha * beta / ((alpha + beta) ** 2 * (alpha + beta + 1.0))
    return mean, var


def make_policy(alg: AlgSpec, env, stream: RngStream, env_spec: EnvSpec | None = None):
    """Build the policy matching (algorithm spec, environment family)."""
    if alg.name in ("mbe", "naive-mb"):
        lam = _float(alg, "lambda", 0.5) if alg.name == "mbe" else 0.0
        params = _tuning(alg, lam)
        B = int(_float(alg, "b", 50))
        exact = _bool(alg, "exact", alg.name == "naive-mb")
        if isinstance(env, MabEnv):
            if exact:
                return MbeMabExact(env.n_arms, params, stream)
            return MbeMabEnsemble(env.n_arms, params, B, stream)
        if exact:
            raise ConfigError(f"exact resampling is only defined for mab environments: {alg.label!r}")
        if isinstance(env, LinEnv):
            ridge = _float(alg, "ridge", 0.0)
            pseudo = alg.get("pseudo", "identity")
            return MbeLinear(env.features, params, B, stream, ridge=ridge, pseudo=pseudo)
        scorer = _EnsembleScorer(_n_items(env), params, B)
        return _structured(env, scorer, stream)

    if alg.name == "ts":
        if not isinstance(env, MabEnv):
            raise ConfigError("ts baselines are defined for mab environments only")
        flavor = alg.get("flavor")
        prior = alg.get("prior")
        calibrated = prior == "cal"
        if calibrated and (env_spec is None or env_spec.kind != "mab"):
            raise ConfigError("calibrated priors need a generated mab instance")
        if flavor == "bernoulli":
            if env.family is not RewardFamily.BERNOULLI:
                raise ConfigError("ts:bernoulli needs bernoulli rewards")
            if calibrated:
                alpha = float(env_spec.param("alpha"))
                return TsBernoulli(env.n_arms, stream, alpha, 8.0, oracle_informed=True)
            a0, b0 = (1.0, 1.0) if prior is None else _pair(prior, alg)
            return TsBernoulli(env.n_arms, stream, a0, b0)
        if env.family is not RewardFamily.GAUSSIAN:
            raise ConfigError("ts:gauss needs gaussian rewards")
        if calibrated:
            alpha = float(env_spec.param("alpha"))
            mean, var = _beta_moments(alpha, 8.0)
            return TsGaussian(env.n_arms, env.noise_sd, stream, mean, math.sqrt(var), oracle_informed=True)
        m0, s0 = (0.5, 0.5) if prior is None else _pair(prior, alg)
        return TsGaussian(env.n_arms, env.noise_sd, stream, m0, s0)

    if alg.name == "phe":
        a = _float(alg, "a", 1.0)
        if isinstance(env, MabEnv):
            scale = env.noise_sd if env.family is RewardFamily.GAUSSIAN else 1.0
            return PheMab(env.n_arms, a, env.family, scale, stream)
        if isinstance(env, LinEnv):
            raise ConfigError("phe is not defined for linear environments here")
        scorer = _PheScorer(_n_items(env), a, *_item_family(env))
        return _structured(env, scorer, stream)

    if alg.name == "eg":
        a = _float(alg, "a", 0.5)
        schedule = baselines.EGSchedule(a)
        if isinstance(env, MabEnv):
            return EgMab(env.n_arms, a, stream)
        if isinstance(env, LinEnv):
            raise ConfigError("eg is not defined for linear environments here")
        scorer = _ItemStats(_n_items(env))
        return _structured(env, scorer, stream, schedule)

    raise ConfigError(f"unknown algorithm {alg.name!r}")


def _pair(raw: str, alg: AlgSpec) -> tuple[float, float]:
    try:
        a, b = raw.split(",")
        return float(a), float(b)
    except ValueError as exc:
        raise ConfigError(f"bad prior {raw!r} in {alg.label!r}") from exc


def _n_items(env) -> int:
    return env.n_items


def _item_family(env) -> tuple[RewardFamily | str, float]:
    if isinstance(env, CascadeEnv):
        return RewardFamily.BERNOULLI, 1.0
    if isinstance(env, SemiBanditEnv):
        return RewardFamily.GAUSSIAN, env.noise_sd
    if isinstance(env, MnlEnv):
        return "counts", 1.0
    raise ConfigError(f"no per-item reward family for {type(env).__name__}")


def _structured(env, scorer, stream: RngStream, schedule=None):
    if isinstance(env, CascadeEnv):
        return CascadePolicy(env, scorer, stream, schedule)
    if isinstance(env, SemiBanditEnv):
        return SemiBanditPolicy(env, scorer, stream, schedule)
    if isinstance(env, MnlEnv):
        return MnlPolicy(env, scorer, stream, schedule)
    raise ConfigError(f"unsupported environment {type(env).__name__}")


def realized_reward(env, action, feedback) -> float:
    """Scalar reward realized by one interaction (realized-regret accounting)."""
    if isinstance(env, (MabEnv, LinEnv)):
        return float(feedback)
    if isinstance(env, CascadeEnv):
        return feedback.reward
    if isinstance(env, SemiBanditEnv):
        return float(np.sum(feedback))
    if isinstance(env, MnlEnv):
        return 0.0 if feedback is None else float(env.revenues[feedback])
    raise ConfigError(f"unsupported environment {type(env).__name__}")
