"""Shared test oracles."""
from __future__ import annotations

import numpy as np


def naive_two_armed_lockstep(
    n_runs: int, T: int, p1: float, p2: float, gen: np.random.Generator
) -> np.ndarray:
    """Exact distributional simulation of the full-resample naive policy on a
    two-armed Bernoulli instance with unit-mean exponential weights.

    Given an arm history with ``m`` ones out of ``n`` pulls, the freshly
    reweighted mean is G1 / (G1 + G0) with G1 ~ Gamma(m), G0 ~ Gamma(n - m)
    (sums of the exponential weights attached to the one- and zero-reward
    observations), i.e. a Beta(m, n - m) draw with point masses at the
    endpoints; full resampling makes the draws independent across rounds.
    This runs all replications in lockstep and returns per-run pull counts
    of arm 1 (shape (n_runs,)).
    """
    n = np.zeros((2, n_runs), dtype=np.int64)
    m = np.zeros((2, n_runs), dtype=np.int64)
    p = np.array([p1, p2])
    runs = np.arange(n_runs)
    for t in range(1, T + 1):
        if t == 1:
            arm = (gen.random(n_runs) < 0.5).astype(np.int64)
        elif t == 2:
            arm = np.where(n[0] == 0, 0, 1)  # the unpulled arm is forced
        else:
            g_one = gen.gamma(m.astype(float))
            g_zero = gen.gamma((n - m).astype(float))
            y = g_one / (g_one + g_zero)
            tie = y[0] == y[1]
            arm = (y[1] > y[0]).astype(np.int64)
            if tie.any():
                arm[tie] = (gen.random(int(tie.sum())) < 0.5).astype(np.int64)
        reward = (gen.random(n_runs) < p[arm]).astype(np.int64)
        np.add.at(n, (arm, runs), 1)
        np.add.at(m, (arm, runs), reward)
    return n[0]
