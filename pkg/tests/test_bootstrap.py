import math

import numpy as np
import pytest

from mbe.bootstrap import (
    ArmHistory,
    EnsembleState,
    LinearEnsembleState,
    Score,
    lb_batch_solve,
    mbe_mab_scores,
    naive_mb_scores,
    rank_values,
    score_from_weights,
    select_argmax,
)
from mbe.rng import RngStream
from mbe.weights import TuningParams, WeightDistribution

GAUSS1 = WeightDistribution.gaussian(1.0)
NEAR_DET = WeightDistribution.gaussian(1e-12)  # weights collapse to 1


def gen(seed=0, *path):
    return RngStream(seed, tuple(path)).generator()


def history(*rewards):
    h = ArmHistory()
    for r in rewards:
        h.append(r)
    return h


class TestScoreFormula:
    def test_unit_weights_give_the_shifted_scaled_mean(self):
        # with all weights 1 the score is (mean + lam) / (1 + 2 lam)
        rewards = np.array([0.4, 0.4, 0.4])
        W = np.ones((3, 3))
        s = score_from_weights(rewards, W, lam=0.5)
        assert s.defined and s.value == pytest.approx(0.45, abs=1e-12)

    def test_single_observation_hand_value(self):
        # (2*1 + 0.5*1) / (2 + 0.5 + 0.5) = 2.5 / 3
        s = score_from_weights(np.array([1.0]), np.array([[2.0], [1.0], [1.0]]), lam=0.5)
        assert s.value == pytest.approx(2.5 / 3.0, abs=1e-12)

    def test_lambda_zero_with_zero_reward_sticks_at_zero(self):
        s = score_from_weights(np.array([0.0]), np.array([[1.7], [0.3], [0.9]]), lam=0.0)
        assert s.defined and s.value == 0.0

    def test_zero_denominator_is_undefined(self):
        W = np.array([[2.0], [-2.0], [-2.0]])  # 2 + 0.5*(-2) + 0.5*(-2) = 0
        s = score_from_weights(np.array([1.0]), W, lam=0.5)
        assert not s.defined

    def test_negative_denominator_used_as_written(self):
        W = np.array([[-1.0], [0.0], [0.0]])
        s = score_from_weights(np.array([1.0]), W, lam=0.5)
        assert s.defined and s.value == pytest.approx(1.0)


class TestMabScores:
    def test_unpulled_arm_gets_infinite_score(self):
        scores = mbe_mab_scores([history(), history(0.3)], TuningParams(0.5, GAUSS1), gen(1))
        assert scores[0].defined and math.isinf(scores[0].value)
        assert scores[1].defined and math.isfinite(scores[1].value)

    def test_deterministic_weight_collapse(self):
        scores = mbe_mab_scores([history(*([0.4] * 10))], TuningParams(0.5, NEAR_DET), gen(2))
        assert scores[0].value == pytest.approx(0.45, abs=1e-6)

    def test_full_resample_varies_between_calls_on_one_generator(self):
        hists = [history(*np.linspace(0, 1, 20))]
        g = gen(3)
        params = TuningParams(0.5, GAUSS1)
        a = mbe_mab_scores(hists, params, g)[0].value
        b = mbe_mab_scores(hists, params, g)[0].value
        assert a != b

    def test_concentrates_at_the_shifted_mean(self):
        # one draw at s = 1e5 lies within 5 predicted sds of (mu+lam)/(1+2lam)
        mu, lam, s = 0.3, 0.5, 100_000
        rewards = gen(4).normal(mu, 1.0, s)
        h = ArmHistory()
        for r in rewards:
            h.append(r)
        score = mbe_mab_scores([h], TuningParams(lam, GAUSS1), gen(5))[0]
        predicted_sd = math.sqrt((1.0 + 2.0) * 1.0 / (1 + 2 * lam) ** 2 / s)
        target = (mu + lam) / (1 + 2 * lam)
        assert abs(score.value - target) <= 5 * predicted_sd + abs(rewards.mean() - mu)

    def test_order_preservation_under_deterministic_weights(self):
        # shared argmax with the plain means, for 1000 random (means, lam) pairs
        rng = np.random.default_rng(6)
        g = gen(7)
        for _ in range(1000):
            k = int(rng.integers(2, 8))
            means = rng.uniform(0, 1, k)
            lam = float(rng.uniform(1e-3, 5.0))
            hists = [history(m) for m in means]
            scores = mbe_mab_scores(hists, TuningParams(lam, NEAR_DET), g)
            expected = (means + lam) / (1 + 2 * lam)
            got = np.array([s.value for s in scores])
            assert np.allclose(got, expected, atol=1e-6)
            assert set(np.flatnonzero(got == got.max())) == set(
                np.flatnonzero(means == means.max())
            )


class TestNaiveScores:
    def test_zero_history_sticks(self):
        for seed in range(5):
            s = naive_mb_scores([history(0.0)], WeightDistribution.exponential(), gen(8, seed))[0]
            assert s.defined and s.value == 0.0

    def test_unit_weights_recover_the_sample_mean(self):
        s = score_from_weights(np.array([0.2, 0.8, 0.5]), np.ones((3, 3)), lam=0.0)
        assert s.value == pytest.approx(0.5, abs=1e-12)

    def test_matches_mbe_with_lambda_zero(self):
        hists = [history(0.1, 0.9), history(0.7)]
        a = naive_mb_scores(hists, GAUSS1, gen(9))
        b = mbe_mab_scores(hists, TuningParams(0.0, GAUSS1), gen(9))
        assert [s.value for s in a] == [s.value for s in b]


class TestSelectArgmax:
    def test_ties_split_evenly(self):
        scores = [Score(0.1), Score(0.9), Score(0.9)]
        g = gen(10)
        picks = np.array([select_argmax(scores, g) for _ in range(10_000)])
        assert not (picks == 0).any()
        freq = (picks == 1).mean()
        assert abs(freq - 0.5) <= 0.015

    def test_infinite_score_always_wins(self):
        scores = [Score(np.inf), Score(0.99)]
        assert all(select_argmax(scores, gen(11)) == 0 for _ in range(20))

    def test_affine_map_preserves_the_maximizer_set(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            vals = rng.uniform(0, 1, 5)
            a, b = float(rng.uniform(0.1, 3)), float(rng.normal())
            base = rank_values([Score(v) for v in vals])
            mapped = rank_values([Score(a * v + b) for v in vals])
            assert set(np.flatnonzero(base == base.max())) == set(
                np.flatnonzero(mapped == mapped.max())
            )

    def test_all_undefined_falls_back_to_uniform(self):
        scores = [Score(np.nan, defined=False)] * 3
        g = gen(13)
        picks = {select_argmax(scores, g) for _ in range(50)}
        assert picks == {0, 1, 2}

    def test_undefined_ranks_below_every_defined_score(self):
        scores = [Score(np.nan, defined=False), Score(-50.0)]
        assert select_argmax(scores, gen(14)) == 1


class TestEnsembleState:
    def test_accumulators_match_hand_sums(self):
        state = EnsembleState(2, TuningParams(0.5, GAUSS1), B=1)
        triples = [(1.2, 0.8, 1.1), (0.9, 1.3, 0.7), (1.0, 1.0, 1.0)]
        rewards = [1.0, 0.0, 0.5]
        for (w, wp, wpp), r in zip(triples, rewards):
            state.apply(0, r, np.array([[w], [wp], [wpp]]))
        num = sum(w * r + 0.5 * wp for (w, wp, _), r in zip(triples, rewards))
        den = sum(w + 0.5 * (wp + wpp) for (w, wp, wpp) in triples)
        assert state.num[0, 0] == pytest.approx(num, abs=1e-12)
        assert state.den[0, 0] == pytest.approx(den, abs=1e-12)
        assert state.count[0] == 3 and state.count[1] == 0

    def test_single_replicate_unit_weights_reach_the_shifted_mean(self):
        state = EnsembleState(1, TuningParams(0.5, NEAR_DET), B=1)
        g = gen(15)
        for _ in range(40):
            state.update(0, 0.4, g)
        assert state.replicate_ranks(0)[0] == pytest.approx(0.45, abs=1e-6)

    def test_replay_is_bit_identical(self):
        def run():
            state = EnsembleState(3, TuningParams(0.5, GAUSS1), B=8)
            g = gen(16)
            for i in range(30):
                state.update(i % 3, float(i % 2), g)
            return state.num.copy(), state.den.copy()

        (n1, d1), (n2, d2) = run(), run()
        assert np.array_equal(n1, n2) and np.array_equal(d1, d2)

    def test_replicate_choice_is_uniform(self):
        state = EnsembleState(2, TuningParams(0.5, GAUSS1), B=5)
        g = gen(17)
        n = 10_000
        picks = np.array([int(g.integers(state.B)) for _ in range(n)])
        for b in range(5):
            freq = (picks == b).mean()
            assert abs(freq - 0.2) <= 3 * math.sqrt(0.2 * 0.8 / n)

    def test_dominant_arm_always_selected(self):
        from mbe.bootstrap import ensemble_select

        state = EnsembleState(3, TuningParams(0.5, GAUSS1), B=4)
        state.count[:] = 1
        state.num[:, :] = 0.1
        state.den[:, :] = 1.0
        state.num[:, 1] = 5.0
        g = gen(18)
        assert all(ensemble_select(state, g) == 1 for _ in range(30))

    def test_unseen_items_force_exploration(self):
        state = EnsembleState(2, TuningParams(0.5, GAUSS1), B=2)
        state.update(0, 1.0, gen(19))
        ranks = state.replicate_ranks(0)
        assert math.isinf(ranks[1]) and math.isfinite(ranks[0])


class TestLinearState:
    def test_all_zero_weights_change_nothing(self):
        state = LinearEnsembleState(3, TuningParams(0.5, GAUSS1), B=1)
        V0, b0 = state.V.copy(), state.b.copy()
        state.apply(np.array([1.0, 2.0, 3.0]), 1.0, np.zeros((3, 1)))
        assert np.array_equal(state.V, V0) and np.array_equal(state.b, b0)

    def test_two_dimensional_hand_solve(self):
        # V = I, observe e1 with weight 1, lam = 0, reward 1:
        # V -> diag(2, 1), b -> (1, 0), theta -> (0.5, 0)
        state = LinearEnsembleState(2, TuningParams(0.0, GAUSS1), B=1)
        state.apply(np.array([1.0, 0.0]), 1.0, np.array([[1.0], [0.0], [0.0]]))
        assert np.allclose(state.V[0], np.diag([2.0, 1.0]))
        assert np.allclose(state.theta[0], [0.5, 0.0], atol=1e-12)

    def test_incremental_matches_batch_solve(self):
        rng = np.random.default_rng(20)
        state = LinearEnsembleState(6, TuningParams(0.5, GAUSS1), B=2)
        g = gen(21)
        for step in range(100):
            x = rng.normal(size=6)
            state.update(x, float(rng.normal()), g)
            for b in range(2):
                ref = lb_batch_solve(state.V[b], state.b[b])
                err = np.linalg.norm(state.theta[b] - ref) / max(np.linalg.norm(ref), 1e-12)
                assert err <= 1e-8
        assert state.inverse_drift() <= 1e-8

    def test_near_singular_rank_one_triggers_reinversion(self):
        state = LinearEnsembleState(2, TuningParams(0.0, GAUSS1), B=1)
        x = np.array([1.0, 0.0])
        # gamma = -1 / (x^T Vinv x) makes the Sherman-Morrison denominator 0+
        gamma = -1.0 / float(x @ state.Vinv[0] @ x) + 1e-15
        state.apply(x, 1.0, np.array([[gamma], [0.0], [0.0]]))
        ref = lb_batch_solve(state.V[0], state.b[0])
        assert np.allclose(state.theta[0], ref, atol=1e-8)

    def test_feature_mode_pseudo_updates_the_gram_matrix(self):
        state = LinearEnsembleState(2, TuningParams(0.5, GAUSS1), B=1, pseudo="feature")
        x = np.array([1.0, 1.0])
        state.apply(x, 1.0, np.array([[1.0], [1.0], [1.0]]))
        # gamma = 1 + 0.5*(1+1) = 2 multiplies the outer product
        assert np.allclose(state.V[0], np.eye(2) + 2.0 * np.outer(x, x))
        ref = lb_batch_solve(state.V[0], state.b[0])
        assert np.allclose(state.theta[0], ref, atol=1e-10)

    def test_ridge_initialization(self):
        state = LinearEnsembleState(3, TuningParams(0.5, GAUSS1), B=1, ridge=0.5)
        assert np.allclose(state.V[0], 1.5 * np.eye(3))


class TestBatchSolve:
    def test_identity(self):
        assert np.allclose(lb_batch_solve(np.eye(2), np.array([1.0, 0.0])), [1.0, 0.0])

    def test_diagonal(self):
        assert np.allclose(lb_batch_solve(2 * np.eye(2), np.array([2.0, 4.0])), [1.0, 2.0])

    def test_random_spd_residual(self):
        rng = np.random.default_rng(22)
        A = rng.normal(size=(10, 10))
        V = A @ A.T + 10 * np.eye(10)
        b = rng.normal(size=10)
        theta = lb_batch_solve(V, b)
        assert np.linalg.norm(V @ theta - b) <= 1e-10

    def test_asymmetric_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            lb_batch_solve(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([1.0, 1.0]))


class TestStructuredScores:
    def test_cascade_deterministic_weights_are_order_preserving(self):
        from mbe.policies import topk_ordered

        clicks = {0: [1, 1, 0], 1: [1, 0, 0], 2: [0, 0, 0]}
        state = EnsembleState(3, TuningParams(0.5, NEAR_DET), B=1)
        g = gen(23)
        for item, outcomes in clicks.items():
            for value in outcomes:
                state.update(item, float(value), g)
        ranks = state.replicate_ranks(0)
        rates = np.array([np.mean(v) for v in clicks.values()])
        assert np.allclose(ranks, (rates + 0.5) / 2.0, atol=1e-6)
        assert topk_ordered(ranks, 2, g).tolist() == [0, 1]

    def test_semi_assembly_picks_per_group_winners(self):
        from mbe.policies import per_group_topk

        ranks = np.array([0.9, 0.1, 0.8, 0.2])
        groups = (np.array([0, 1]), np.array([2, 3]))
        picked = per_group_topk(ranks, groups, 1, gen(24))
        assert picked.tolist() == [0, 2]

    def test_mnl_epoch_counts_are_appended_at_no_purchase(self):
        from mbe.envs import MnlEnv
        from mbe.policies import MnlPolicy, _EnsembleScorer

        env = MnlEnv(np.full(4, 0.2), np.full(4, 0.5), slate_size=2)
        scorer = _EnsembleScorer(4, TuningParams(0.5, NEAR_DET), B=1)
        policy = MnlPolicy(env, scorer, RngStream(25, ()))
        slate = policy.select(1)
        assert slate.size == 2  # forced exploration over unseen items
        item = int(slate[0])
        policy.update(1, slate, item)
        policy.update(2, policy.select(2), item)  # same epoch, same offer
        assert policy.select(3).tolist() == slate.tolist()
        policy.update(3, slate, None)  # no purchase ends the epoch
        counts = scorer.state.count
        assert counts[item] == 1 and counts[int(slate[1])] == 1
        # observation value 2 for the chosen item, 0 for the other offered one
        assert scorer.state.num[0, item] == pytest.approx((2.0 + 0.5) , abs=1e-6)
        assert scorer.state.num[0, int(slate[1])] == pytest.approx(0.5, abs=1e-6)
        assert policy.current is None
