"""Synthetic stochastic-bandit environments.

Each environment owns hidden parameters (mean rewards, attractions, ...)
plus reward sampling and an optimal-value oracle for regret accounting.
Instances are immutable after construction; pulls take an explicit
generator, so concurrent episodes on one instance are safe.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractViolation

__all__ = [
    "RewardFamily",
    "MabEnv",
    "LinEnv",
    "CascadeEnv",
    "CascadeFeedback",
    "SemiBanditEnv",
    "MnlEnv",
    "sample_mab_instance",
    "sample_linear_instance",
    "best_subset",
    "EnvSpec",
    "parse_env_spec",
]

LOW_RANK = 5  # rank of the structured block in linear instances


class RewardFamily(enum.Enum):
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gauss"
    EXPONENTIAL = "exp"


# ---------------------------------------------------------------------------
# environments


@dataclass
class MabEnv:
    """K-armed bandit with means in [0, 1] and a declared reward family."""

    means: np.ndarray
    family: RewardFamily = RewardFamily.BERNOULLI
    noise_sd: float = 1.0  # gaussian family only

    kind = "mab"

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        if self.means.ndim != 1 or self.means.size < 1:
            raise ConfigError("means must be a non-empty vector")
        if np.any(self.means < 0) or np.any(self.means > 1):
            raise ConfigError("mean rewards must lie in [0, 1]")
        if self.family is RewardFamily.EXPONENTIAL and np.any(self.means <= 0):
            raise ConfigError("exponential arms need strictly positive means")
        if self.family is RewardFamily.GAUSSIAN and not self.noise_sd > 0:
            raise ConfigError("gaussian noise sd must be > 0")

    @property
    def n_arms(self) -> int:
        return self.means.size

    def _check_arm(self, arm: int) -> int:
        arm = int(arm)
        if not 0 <= arm < self.n_arms:
            raise ContractViolation(f"arm {arm} out of range [0, {self.n_arms})")
        return arm

    def pull(self, arm: int, gen: np.random.Generator) -> float:
        arm = self._check_arm(arm)
        mu = self.means[arm]
        if self.family is RewardFamily.BERNOULLI:
            return float(gen.random() < mu)
        if self.family is RewardFamily.GAUSSIAN:
            return float(mu + self.noise_sd * gen.standard_normal())
        return float(gen.exponential(mu))

    def expected_value(self, arm: int) -> float:
        return float(self.means[self._check_arm(arm)])

    def optimal_value(self) -> float:
        return float(self.means.max())


@dataclass
class LinEnv:
    """Fixed-arm linear bandit: Bernoulli rewards with success rate x_k . theta."""

    theta: np.ndarray
    features: np.ndarray  # (K, p)

    kind = "lin"

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[1] != self.theta.size:
            raise ConfigError("features must be (K, p) matching theta")
        mu = self.features @ self.theta
        if np.any(mu < -1e-9) or np.any(mu > 1 + 1e-9):
            raise ConfigError("all feature/parameter products must lie in [0, 1]")
        self._means = np.clip(mu, 0.0, 1.0)

    @property
    def n_arms(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.theta.size

    def _check_arm(self, arm: int) -> int:
        arm = int(arm)
        if not 0 <= arm < self.n_arms:
            raise ContractViolation(f"arm {arm} out of range [0, {self.n_arms})")
        return arm

    def pull(self, arm: int, gen: np.random.Generator) -> float:
        arm = self._check_arm(arm)
        return float(gen.random() < self._means[arm])

    def expected_value(self, arm: int) -> float:
        return float(self._means[self._check_arm(arm)])

    def optimal_value(self) -> float:
        return float(self._means.max())


@dataclass
class CascadeFeedback:
    """Outcome of one ranked-slate presentation.

    ``examined`` holds the positions the user looked at (a prefix of the
    slate, cut at the first click); ``outcomes`` the matching binaries.
    """

    click_pos: int | None
    examined: np.ndarray  # item indices, in display order
    outcomes: np.ndarray  # 0/1 per examined item

    @property
    def reward(self) -> float:
        return float(self.click_pos is not None)


@dataclass
class CascadeEnv:
    """Click model where the user scans a ranked list top-down and clicks
    the first attractive item; items after the click stay unobserved."""

    attractions: np.ndarray
    slate_size: int

    kind = "cascade"

    def __post_init__(self):
        self.attractions = np.asarray(self.attractions, dtype=float)
        if np.any(self.attractions < 0) or np.any(self.attractions > 1):
            raise ConfigError("attraction probabilities must lie in [0, 1]")
        if not 1 <= self.slate_size <= self.attractions.size:
            raise ConfigError("slate size must satisfy 1 <= K <= L")

    @property
    def n_items(self) -> int:
        return self.attractions.size

    def _check_slate(self, slate) -> np.ndarray:
        slate = np.asarray(slate, dtype=int)
        if slate.ndim != 1 or slate.size != self.slate_size:
            raise ContractViolation(f"slate must list exactly {self.slate_size} items")
        if np.unique(slate).size != slate.size:
            raise ContractViolation("slate items must be distinct")
        if slate.min() < 0 or slate.max() >= self.n_items:
            raise ContractViolation("slate item index out of range")
        return slate

    def pull(self, slate, gen: np.random.Generator) -> CascadeFeedback:
        slate = self._check_slate(slate)
        clicks = gen.random(self.slate_size) < self.attractions[slate]
        if clicks.any():
            pos = int(np.argmax(clicks))
            examined = slate[: pos + 1]
            outcomes = clicks[: pos + 1].astype(float)
            return CascadeFeedback(pos, examined, outcomes)
        return CascadeFeedback(None, slate.copy(), clicks.astype(float))

    def expected_value(self, slate) -> float:
        slate = self._check_slate(slate)
        return float(1.0 - np.prod(1.0 - self.attractions[slate]))

    def optimal_value(self) -> float:
        top = np.sort(self.attractions)[-self.slate_size:]
        return float(1.0 - np.prod(1.0 - top))


@dataclass
class SemiBanditEnv:
    """Combinatorial semi-bandit: pick K/2 items from each of two groups and
    observe a noisy reward for every chosen item."""

    item_means: np.ndarray
    slate_size: int
    noise_sd: float = 0.1
    groups: tuple[np.ndarray, np.ndarray] = field(default=None)

    kind = "semi"

    def __post_init__(self):
        self.item_means = np.asarray(self.item_means, dtype=float)
        L = self.item_means.size
        if self.slate_size % 2 != 0 or self.slate_size < 2:
            raise ConfigError("slate size must be a positive even number")
        if self.groups is None:
            half = L // 2
            self.groups = (np.arange(half), np.arange(half, L))
        g0, g1 = (np.asarray(g, dtype=int) for g in self.groups)
        merged = np.sort(np.concatenate([g0, g1]))
        if merged.size != L or np.any(merged != np.arange(L)):
            raise ConfigError("groups must partition the items")
        per_group = self.slate_size // 2
        if per_group > min(g0.size, g1.size):
            raise ConfigError("not enough items per group for the slate size")
        self.groups = (g0, g1)
        if not self.noise_sd > 0:
            raise ConfigError("noise sd must be > 0")

    @property
    def n_items(self) -> int:
        return self.item_means.size

    def _check_action(self, items) -> np.ndarray:
        items = np.asarray(items, dtype=int)
        if items.ndim != 1 or items.size != self.slate_size:
            raise ContractViolation(f"action must list exactly {self.slate_size} items")
        if np.unique(items).size != items.size:
            raise ContractViolation("chosen items must be distinct")
        if items.min() < 0 or items.max() >= self.n_items:
            raise ContractViolation("item index out of range")
        per_group = self.slate_size // 2
        for g in self.groups:
            if np.isin(items, g).sum() != per_group:
                raise ContractViolation(f"action must take {per_group} items per group")
        return items

    def pull(self, items, gen: np.random.Generator) -> np.ndarray:
        items = self._check_action(items)
        noise = self.noise_sd * gen.standard_normal(items.size)
        return self.item_means[items] + noise

    def expected_value(self, items) -> float:
        items = self._check_action(items)
        return float(self.item_means[items].sum())

    def optimal_value(self) -> float:
        per_group = self.slate_size // 2
        total = 0.0
        for g in self.groups:
            total += float(np.sort(self.item_means[g])[-per_group:].sum())
        return total


@dataclass
class MnlEnv:
    """Assortment environment with multinomial-logit choice.

    Offering set S, item i is chosen with probability v_i / (1 + sum_S v),
    and no purchase happens with probability 1 / (1 + sum_S v).
    """

    attractiveness: np.ndarray
    revenues: np.ndarray
    slate_size: int

    kind = "mnl"

    def __post_init__(self):
        self.attractiveness = np.asarray(self.attractiveness, dtype=float)
        self.revenues = np.asarray(self.revenues, dtype=float)
        if self.attractiveness.shape != self.revenues.shape:
            raise ConfigError("attractiveness and revenues must align")
        if np.any(self.attractiveness <= 0):
            raise ConfigError("attractiveness values must be > 0")
        if np.any(self.revenues < 0) or np.any(self.revenues > 1):
            raise ConfigError("revenues must lie in [0, 1]")
        if self.slate_size < 1:
            raise ConfigError("slate size must be >= 1")

    @property
    def n_items(self) -> int:
        return self.attractiveness.size

    def _check_offer(self, items) -> np.ndarray:
        items = np.asarray(items, dtype=int)
        if items.ndim != 1 or not 1 <= items.size <= self.slate_size:
            raise ContractViolation(f"offer must contain 1..{self.slate_size} items")
        if np.unique(items).size != items.size:
            raise ContractViolation("offered items must be distinct")
        if items.min() < 0 or items.max() >= self.n_items:
            raise ContractViolation("item index out of range")
        return items

    def choice_probabilities(self, items) -> np.ndarray:
        """Probabilities over the offered items plus trailing no-purchase."""
        items = self._check_offer(items)
        v = self.attractiveness[items]
        denom = 1.0 + v.sum()
        return np.concatenate([v / denom, [1.0 / denom]])

    def pull(self, items, gen: np.random.Generator) -> int | None:
        items = self._check_offer(items)
        v = self.attractiveness[items]
        # inverse-cdf draw over the offered items plus trailing no-purchase
        cuts = np.cumsum(v)
        idx = int(np.searchsorted(cuts, gen.random() * (1.0 + cuts[-1]), side="right"))
        return None if idx == items.size else int(items[idx])

    def expected_value(self, items) -> float:
        items = self._check_offer(items)
        v = self.attractiveness[items]
        return float((v * self.revenues[items]).sum() / (1.0 + v.sum()))

    def optimal_value(self) -> float:
        _, value = best_subset(self.attractiveness, self.revenues, self.slate_size, precise=True)
        return value


# ---------------------------------------------------------------------------
# instance samplers


def sample_mab_instance(K: int, alpha: float, gen: np.random.Generator) -> np.ndarray:
    """Draw K arm means i.i.d. from Beta(alpha, 8)."""
    if K < 2:
        raise ConfigError("need at least 2 arms")
    if not alpha > 0:
        raise ConfigError("alpha must be > 0")
    return gen.beta(alpha, 8.0, size=K)


def sample_linear_instance(p: int, K: int, gen: np.random.Generator) -> LinEnv:
    """Draw a linear instance: ~90% of arms share a rank-5 loading matrix,
    the rest are dense, and features are rescaled so that max_k x_k.theta = 1."""
    if p < LOW_RANK:
        raise ConfigError(f"dimension must be >= {LOW_RANK} for the low-rank block")
    if K < p:
        raise ConfigError("need at least as many arms as dimensions")
    n_dense = max(1, int(round(0.1 * K)))
    n_low = K - n_dense
    loading = gen.uniform(0.0, 1.0, size=(p, LOW_RANK))
    features = np.empty((K, p))
    for k in range(n_low):
        features[k] = loading @ gen.uniform(0.0, 1.0, size=LOW_RANK)
    features[n_low:] = gen.uniform(0.0, 1.0, size=(n_dense, p))
    theta = gen.uniform(0.0, 1.0, size=p)
    features /= (features @ theta).max()
    return LinEnv(theta=theta, features=features)


# ---------------------------------------------------------------------------
# assortment search


_MAX_SUBSETS = 500_000  # exhaustive search stays a desk-scale oracle


@lru_cache(maxsize=8)
def _subset_tables(L: int, K: int):
    """Membership matrix and padded index table of all subsets of size <= K."""
    width = min(K, L)
    total = sum(math.comb(L, size) for size in range(1, width + 1))
    if total > _MAX_SUBSETS:
        raise RuntimeError(
            f"assortment search over {total} subsets (L={L}, K={K}) exceeds the exhaustive-search budget"
        )
    idx = np.full((total, width), L, dtype=np.intp)
    mat = np.zeros((total, L), dtype=np.float32)
    row = 0
    for size in range(1, width + 1):
        for combo in itertools.combinations(range(L), size):
            idx[row, :size] = combo
            mat[row, list(combo)] = 1.0
            row += 1
    idx.setflags(write=False)
    mat.setflags(write=False)
    workspace = (np.empty(total, dtype=np.float32), np.empty(total, dtype=np.float32))
    return idx, mat, workspace


def best_subset(
    values: np.ndarray, revenues: np.ndarray, K: int, precise: bool = False
) -> tuple[np.ndarray, float]:
    """Exhaustively maximise expected revenue sum(v r)/(1 + sum v) over
    non-empty subsets of size <= K. Subsets whose denominator is not
    strictly positive (possible for estimated, negative values) rank lowest.

    The default single-precision scan is ample for estimated inputs;
    ``precise`` switches to float64, which the optimal-value oracle needs so
    near-tied subsets cannot shave the regret accounting below zero.
    """
    values = np.asarray(values, dtype=float)
    L = values.size
    idx, mat, (denom32, scores32) = _subset_tables(L, K)
    if precise:
        denom = mat.astype(np.float64) @ values + 1.0
        scores = mat.astype(np.float64) @ (values * revenues)
    else:
        denom, scores = denom32, scores32
        np.matmul(mat, values.astype(np.float32), out=denom)
        denom += 1.0
        np.matmul(mat, (values * revenues).astype(np.float32), out=scores)
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(scores, denom, out=scores)
    scores[denom <= 1e-9] = -np.inf
    best = int(np.argmax(scores))
    items = idx[best][idx[best] < L]
    v = values[items]
    value = float((v * revenues[items]).sum() / (1.0 + v.sum()))
    return items.copy(), value


# ---------------------------------------------------------------------------
# environment spec grammar


@dataclass(frozen=True)
class EnvSpec:
    """A parsed environment generator; ``sample`` draws a fresh instance."""

    kind: str
    params: tuple[tuple[str, object], ...]

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def spec(self) -> str:
        d = dict(self.params)
        if self.kind == "mab":
            parts = ["mab", d["family"].value, f"K={d['K']}"]
            if d["family"] is RewardFamily.GAUSSIAN:
                parts.append(f"sd={d['sd']:g}")
            parts.append(f"alpha={d['alpha']:g}")
            return ":".join(parts)
        if self.kind == "lin":
            return f"lin:p={d['p']}:K={d['K']}"
        extra = f":sd={d['sd']:g}" if self.kind == "semi" else ""
        return f"{self.kind}:L={d['L']}:K={d['K']}{extra}"

    def sample(self, gen: np.random.Generator):
        d = dict(self.params)
        if self.kind == "mab":
            means = sample_mab_instance(d["K"], d["alpha"], gen)
            return MabEnv(means, family=d["family"], noise_sd=d.get("sd", 1.0))
        if self.kind == "lin":
            return sample_linear_instance(d["p"], d["K"], gen)
        if self.kind == "cascade":
            w = gen.uniform(0.0, 0.3, size=d["L"])
            return CascadeEnv(w, slate_size=d["K"])
        if self.kind == "semi":
            means = gen.uniform(0.0, 0.3, size=d["L"])
            return SemiBanditEnv(means, slate_size=d["K"], noise_sd=d["sd"])
        if self.kind == "mnl":
            v = gen.uniform(0.0, 0.3, size=d["L"])
            v = np.maximum(v, 1e-9)
            revenues = gen.uniform(0.0, 1.0, size=d["L"])
            return MnlEnv(v, revenues, slate_size=d["K"])
        raise ConfigError(f"unknown environment kind {self.kind!r}")


def _parse_kv(tokens: list[str], spec: str) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"expected key=value, got {tok!r} in {spec!r}")
        key, value = tok.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_env_spec(spec: str) -> EnvSpec:
    """Parse the environment grammar, e.g. ``mab:bernoulli:K=10:alpha=1``."""
    parts = [p for p in spec.strip().split(":") if p]
    if not parts:
        raise ConfigError("empty environment spec")
    kind = parts[0].lower()
    try:
        if kind == "mab":
            if len(parts) < 2:
                raise ConfigError(f"mab spec needs a reward family: {spec!r}")
            family = RewardFamily(parts[1].lower())
            kv = _parse_kv(parts[2:], spec)
            params = {
                "family": family,
                "K": int(kv.pop("K", 10)),
                "alpha": float(kv.pop("alpha", 1.0)),
            }
            if family is RewardFamily.GAUSSIAN:
                params["sd"] = float(kv.pop("sd", 1.0))
            if kv:
                raise ConfigError(f"unknown keys {sorted(kv)} in {spec!r}")
            if params["K"] < 2:
                raise ConfigError("K must be >= 2")
            return EnvSpec("mab", tuple(sorted(params.items())))
        if kind == "lin":
            kv = _parse_kv(parts[1:], spec)
            params = {"p": int(kv.pop("p", 10)), "K": int(kv.pop("K", 100))}
            if kv:
                raise ConfigError(f"unknown keys {sorted(kv)} in {spec!r}")
            if params["p"] < LOW_RANK:
                raise ConfigError(f"p must be >= {LOW_RANK} for the structured block")
            if params["K"] < params["p"]:
                raise ConfigError("need at least as many arms as dimensions")
            return EnvSpec("lin", tuple(sorted(params.items())))
        if kind in ("cascade", "semi", "mnl"):
            kv = _parse_kv(parts[1:], spec)
            params = {"L": int(kv.pop("L", 30)), "K": int(kv.pop("K", 4))}
            if kind == "semi":
                params["sd"] = float(kv.pop("sd", 0.1))
            if kv:
                raise ConfigError(f"unknown keys {sorted(kv)} in {spec!r}")
            if kind == "cascade" and not 1 <= params["K"] <= params["L"]:
                raise ConfigError("cascade slates need 1 <= K <= L")
            if kind == "semi" and (params["K"] % 2 != 0 or params["K"] > params["L"]):
                raise ConfigError("semi-bandit slates need an even K <= L")
            if kind == "mnl" and params["K"] < 1:
                raise ConfigError("assortments need K >= 1")
            return EnvSpec(kind, tuple(sorted(params.items())))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed environment spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown environment kind {kind!r}")
