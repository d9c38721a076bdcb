"""Randomly-reweighted reward estimators: the exploration core.

Two pseudo-rewards (0 and 1) are appended per observation, each carrying a
fresh multiplier weight scaled by ``lam``; scores are the resulting weighted
averages. The module provides the full-resample scorer, the ensemble
(replicated incremental accumulator) approximation, the incremental linear
regression form, and the pseudo-reward-free naive scorer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .weights import TuningParams, WeightDistribution, sample_weights

logger = logging.getLogger(__name__)

__all__ = [
    "Score",
    "ArmHistory",
    "score_from_weights",
    "mbe_mab_scores",
    "naive_mb_scores",
    "rank_values",
    "select_argmax",
    "EnsembleState",
    "ensemble_update",
    "ensemble_select",
    "LinearEnsembleState",
    "lb_update",
    "lb_batch_solve",
]

# Denominators this close to singular trigger a full re-inversion instead of
# a rank-one inverse update.
_SM_GUARD = 1e-12
_REFRESH_EVERY = 512  # periodic re-inversion keeps long incremental runs tight


@dataclass(frozen=True)
class Score:
    """A randomized arm score; ``defined`` is False on a zero denominator.

    Undefined scores rank below every defined score (including -inf ones,
    which cannot arise from finite weights anyway).
    """

    value: float
    defined: bool = True

    def rank(self) -> float:
        return self.value if self.defined else -np.inf


class ArmHistory:
    """Append-only reward record for one arm."""

    __slots__ = ("_buf", "count")

    def __init__(self):
        self._buf = np.empty(8)
        self.count = 0

    def append(self, reward: float) -> None:
        if self.count == self._buf.size:
            grown = np.empty(self._buf.size * 2)
            grown[: self.count] = self._buf
            self._buf = grown
        self._buf[self.count] = reward
        self.count += 1

    @property
    def rewards(self) -> np.ndarray:
        return self._buf[: self.count]


def score_from_weights(rewards: np.ndarray, W: np.ndarray, lam: float) -> Score:
    """Weighted average of rewards plus pseudo-rewards, for explicit weights.

    ``W`` has shape (3, s): data weights, pseudo-1 weights, pseudo-0 weights.
    A negative denominator is used as-is; only an exactly zero one is
    undefined.
    """
    rewards = np.asarray(rewards, dtype=float)
    num = float(W[0] @ rewards) + lam * float(W[1].sum())
    den = float(W[0].sum()) + lam * (float(W[1].sum()) + float(W[2].sum()))
    if den == 0.0:
        return Score(np.nan, defined=False)
    return Score(num / den, defined=True)


def mbe_mab_scores(
    histories: list[ArmHistory], params: TuningParams, gen: np.random.Generator
) -> list[Score]:
    """Full-resample scores: every call draws a fresh weight triplet for each
    historical observation. Unpulled arms score +inf (forced exploration)."""
    scores = []
    for hist in histories:
        if hist.count == 0:
            scores.append(Score(np.inf))
            continue
        W = sample_weights(params.dist, gen, (3, hist.count))
        scores.append(score_from_weights(hist.rewards, W, params.lam))
    return scores


def naive_mb_scores(
    histories: list[ArmHistory], dist: WeightDistribution, gen: np.random.Generator
) -> list[Score]:
    """Pseudo-reward-free variant: plain reweighted averages (lam = 0)."""
    return mbe_mab_scores(histories, TuningParams(0.0, dist), gen)


def rank_values(scores: list[Score]) -> np.ndarray:
    return np.array([s.rank() for s in scores])


def select_argmax(scores, gen: np.random.Generator) -> int:
    """Uniform choice among the maximizers; all-undefined falls back to a
    uniform random action (logged)."""
    ranks = rank_values(scores) if not isinstance(scores, np.ndarray) else scores
    if np.all(np.isneginf(ranks)):
        logger.warning("all scores undefined; choosing uniformly at random")
        return int(gen.integers(ranks.size))
    candidates = np.flatnonzero(ranks == ranks.max())
    if candidates.size == 1:
        return int(candidates[0])
    return int(gen.choice(candidates))


# ---------------------------------------------------------------------------
# ensemble approximation (tabular: one accumulator pair per item)


class EnsembleState:
    """B replicated accumulators over K items.

    Each observation receives one fresh weight triplet per replicate; the
    (numerator, denominator) pairs grow append-only, so the per-round cost is
    O(B) regardless of history length.
    """

    def __init__(self, n_items: int, params: TuningParams, B: int):
        if B < 1:
            raise ContractViolation("need at least one replicate")
        self.B = B
        self.n_items = n_items
        self.params = params
        self.num = np.zeros((B, n_items))
        self.den = np.zeros((B, n_items))
        self.count = np.zeros(n_items, dtype=int)

    def apply(self, item: int, value: float, W: np.ndarray) -> None:
        """Fold one observation in with explicit weights of shape (3, B):
        data weight, pseudo-1 weight, pseudo-0 weight."""
        lam = self.params.lam
        self.num[:, item] += W[0] * value + lam * W[1]
        self.den[:, item] += W[0] + lam * (W[1] + W[2])
        self.count[item] += 1

    def update(self, item: int, value: float, gen: np.random.Generator) -> None:
        W = sample_weights(self.params.dist, gen, (3, self.B))
        self.apply(item, value, W)

    def replicate_ranks(self, b: int) -> np.ndarray:
        """Per-item rank values for replicate b: unseen items +inf, zero
        denominators -inf (below every defined score)."""
        ranks = np.full(self.n_items, np.inf)
        seen = self.count > 0
        den = self.den[b]
        defined = seen & (den != 0.0)
        ranks[defined] = self.num[b, defined] / den[defined]
        ranks[seen & (den == 0.0)] = -np.inf
        return ranks


def ensemble_update(
    state: EnsembleState, observation: tuple[int, float], params: TuningParams, gen: np.random.Generator
) -> EnsembleState:
    item, value = observation
    assert state.params == params
    state.update(int(item), float(value), gen)
    return state


def ensemble_select(state: EnsembleState, gen: np.random.Generator) -> int:
    """Pick a uniform replicate, then act greedily on its scores."""
    b = int(gen.integers(state.B))
    return select_argmax(state.replicate_ranks(b), gen)


# ---------------------------------------------------------------------------
# incremental weighted ridge regression (linear bandits)


class LinearEnsembleState:
    """B replicated weighted-ridge models with maintained inverses.

    Per update, the reward term enters as a rank-one correction
    (Sherman-Morrison); the isotropic pseudo term enters either as p
    sequential rank-one corrections (p <= 20) or a full re-inversion.
    ``pseudo`` selects how the pseudo-rewards hit the Gram matrix:
    ``identity`` adds lam * w'' * I, ``feature`` adds their weights to the
    feature outer product instead.
    """

    def __init__(
        self,
        p: int,
        params: TuningParams,
        B: int = 1,
        ridge: float = 0.0,
        pseudo: str = "identity",
    ):
        if B < 1:
            raise ContractViolation("need at least one replicate")
        if ridge < 0:
            raise ContractViolation("ridge penalty must be >= 0")
        if pseudo not in ("identity", "feature"):
            raise ContractViolation("pseudo mode must be 'identity' or 'feature'")
        self.p = p
        self.B = B
        self.params = params
        self.pseudo = pseudo
        scale = 1.0 + ridge
        eye = np.eye(p)
        self.V = np.repeat(scale * eye[None], B, axis=0)
        self.Vinv = np.repeat(eye[None] / scale, B, axis=0)
        self.b = np.zeros((B, p))
        self.theta = np.zeros((B, p))
        self.updates = 0

    def _reinvert(self, mask: np.ndarray) -> None:
        if mask.any():
            self.Vinv[mask] = np.linalg.inv(self.V[mask])

    def _rank_one(self, gamma: np.ndarray, A: np.ndarray) -> None:
        """V += gamma A A^T per replicate, with inverse maintenance."""
        active = np.abs(gamma) > _SM_GUARD
        if not active.any():
            return
        self.V[active] += gamma[active, None, None] * np.outer(A, A)[None]
        u = self.Vinv[active] @ A  # (n_active, p)
        d = 1.0 / gamma[active] + u @ A
        ok = np.abs(d) >= _SM_GUARD
        upd = np.where(active)[0][ok]
        if upd.size:
            uu = u[ok]
            self.Vinv[upd] -= uu[:, :, None] * uu[:, None, :] / d[ok, None, None]
        bad = np.where(active)[0][~ok]
        if bad.size:
            mask = np.zeros(self.B, dtype=bool)
            mask[bad] = True
            self._reinvert(mask)

    def _isotropic(self, c: np.ndarray) -> None:
        """V += c I per replicate, with inverse maintenance."""
        active = np.abs(c) > _SM_GUARD
        if not active.any():
            return
        idx = np.where(active)[0]
        ca = c[active]
        self.V[idx] += ca[:, None, None] * np.eye(self.p)[None]
        if self.p > 20:
            self._reinvert(active)
            return
        bad = np.zeros(self.B, dtype=bool)
        for i in range(self.p):
            col = self.Vinv[idx, :, i]
            denom = 1.0 + ca * self.Vinv[idx, i, i]
            ok = np.abs(denom) >= _SM_GUARD
            good = idx[ok]
            if good.size:
                factor = (ca[ok] / denom[ok])[:, None, None]
                cg = col[ok]
                self.Vinv[good] -= factor * (cg[:, :, None] * cg[:, None, :])
            bad[idx[~ok]] = True
        self._reinvert(bad)

    def apply(self, feature: np.ndarray, reward: float, W: np.ndarray) -> None:
        """Fold one observation in with explicit weights of shape (3, B):
        data weight, pseudo-0 weight, pseudo-1 weight."""
        A = np.asarray(feature, dtype=float)
        if A.shape != (self.p,):
            raise ContractViolation(f"feature must have shape ({self.p},)")
        lam = self.params.lam
        w, w_p, w_pp = W[0], W[1], W[2]
        if self.pseudo == "identity":
            self._rank_one(np.asarray(w, dtype=float), A)
            self._isotropic(lam * np.asarray(w_pp, dtype=float))
        else:
            gamma = w + lam * (w_p + w_pp)
            self._rank_one(np.asarray(gamma, dtype=float), A)
        self.b += A[None, :] * (w * reward + lam * w_pp * 1.0)[:, None]
        self.updates += 1
        if self.updates % _REFRESH_EVERY == 0:
            self._reinvert(np.ones(self.B, dtype=bool))
        self.theta = np.einsum("bij,bj->bi", self.Vinv, self.b)

    def update(self, feature: np.ndarray, reward: float, gen: np.random.Generator) -> None:
        W = sample_weights(self.params.dist, gen, (3, self.B))
        self.apply(feature, reward, np.atleast_2d(W))

    def replicate_values(self, b: int, features: np.ndarray) -> np.ndarray:
        return features @ self.theta[b]

    def inverse_drift(self) -> float:
        """max |Vinv V - I| across replicates (consistency diagnostic)."""
        prod = np.einsum("bij,bjk->bik", self.Vinv, self.V)
        return float(np.abs(prod - np.eye(self.p)[None]).max())


def lb_update(
    state: LinearEnsembleState,
    feature: np.ndarray,
    reward: float,
    params: TuningParams,
    gen: np.random.Generator,
) -> LinearEnsembleState:
    assert state.params == params
    state.update(feature, reward, gen)
    return state


def lb_batch_solve(V: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct solve of V theta = b; the test oracle and recovery path."""
    V = np.asarray(V, dtype=float)
    if not np.allclose(V, V.T, atol=1e-10):
        raise np.linalg.LinAlgError("matrix is not symmetric")
    return np.linalg.solve(V, np.asarray(b, dtype=float))
