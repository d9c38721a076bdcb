"""Numerical verification of the checkable probability bounds.

Every check is deterministic given its seed and reports observed values
next to the claimed bounds; Monte-Carlo checks state an explicit
3-standard-error tolerance band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import integrate

__all__ = [
    "CheckRow",
    "CheckReport",
    "check_gaussian_tail",
    "check_subgaussian_mgf",
    "check_gaussian_ratio",
    "check_erfc_bound",
    "check_shifted_mean_clt",
    "check_subexponential_decay",
    "clt_target_variance",
    "enumerate_example1",
    "enumerate_example1_detail",
    "check_example1",
    "run_all_checks",
]


@dataclass
class CheckRow:
    point: str
    observed: float
    bound_lo: float
    bound_hi: float
    passed: bool
    margin: float


@dataclass
class CheckReport:
    name: str
    seed: int | None = None
    rows: list[CheckRow] = field(default_factory=list)
    notes: str = ""

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def margin(self) -> float:
        return min((row.margin for row in self.rows), default=math.inf)

    def add(self, point: str, observed: float, lo: float, hi: float, passed: bool, margin: float) -> None:
        self.rows.append(CheckRow(point, observed, lo, hi, passed, margin))


def _gaussian_upper_tail(x: float) -> float:
    """P(Z > x) for standard normal Z, by quadrature of the density."""
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    value, _ = integrate.quad(pdf, x, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return value


def check_gaussian_tail(x_grid=tuple(0.5 * k for k in range(11))) -> CheckReport:
    """(1/4) e^{-x^2} < P(Z > x) <= (1/2) e^{-x^2/2} on x in [0, 6]."""
    report = CheckReport("gaussian_tail")
    for x in x_grid:
        if not 0.0 <= x <= 6.0:
            raise ValueError("grid points must lie in [0, 6]")
        p = _gaussian_upper_tail(x)
        lo = 0.25 * math.exp(-x * x)
        hi = 0.5 * math.exp(-0.5 * x * x)
        passed = (p > lo) and (p <= hi + 1e-12)
        margin = min(p - lo, hi - p + 1e-12)
        report.add(f"x={x:g}", p, lo, hi, passed, margin)
    return report


def check_subgaussian_mgf(n: int = 100, sigma: float = 1.0, n_samples: int = 10**6, seed: int = 20) -> CheckReport:
    """E exp(lam Xbar^2) <= e^{9/8} at the extreme lam = n / (8 sigma^2).

    Closed form for Gaussian terms (chi-square mgf) plus Monte-Carlo for the
    bounded Rademacher case, whose sample mean is an exact binomial
    transform, so no per-sample array is needed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    report = CheckReport("subgaussian_mgf", seed=seed)
    bound = math.exp(9.0 / 8.0)
    lam = n / (8.0 * sigma**2)
    report.add("lam=0", 1.0, -math.inf, bound, 1.0 <= bound, bound - 1.0)
    closed = (1.0 - 2.0 * lam * sigma**2 / n) ** -0.5
    report.add("gaussian-closed-form", closed, -math.inf, bound, closed <= bound, bound - closed)
    gen = np.random.default_rng(seed)
    counts = gen.binomial(n, 0.5, size=n_samples)
    xbar = sigma * (2.0 * counts - n) / n
    vals = np.exp(lam * xbar**2)
    observed = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples))
    hi = bound + 3.0 * stderr
    report.add("rademacher-mc", observed, -math.inf, hi, observed <= hi, hi - observed)
    report.notes = f"mc stderr={stderr:.3g}"
    return report


def check_gaussian_ratio(
    c_grid=(0.5, 1.0, 2.0, 1000.0),
    mean_y: float = 3.0,
    n_samples: int = 10**6,
    sigma_x: float = 1.0,
    seed: int = 21,
) -> CheckReport:
    """P(|X|/|Y| > c) <= 2 P(X > cY) + P(Y < 0) for EX = 0, EY > 0."""
    if mean_y <= 0:
        raise ValueError("mean of Y must be > 0")
    report = CheckReport("gaussian_ratio", seed=seed)
    gen = np.random.default_rng(seed)
    X = sigma_x * gen.standard_normal(n_samples)
    Y = mean_y + gen.standard_normal(n_samples)
    p_neg = float((Y < 0).mean())
    for c in c_grid:
        if not c > 0:
            raise ValueError("c must be > 0")
        left = float((np.abs(X) > c * np.abs(Y)).mean())
        p_gt = float((X > c * Y).mean())
        right = 2.0 * p_gt + p_neg
        se = math.sqrt(
            (left * (1 - left) + 4 * p_gt * (1 - p_gt) + p_neg * (1 - p_neg)) / n_samples
        )
        hi = right + 3.0 * se
        report.add(f"c={c:g}", left, -math.inf, hi, left <= hi, hi - left)
    return report


def check_erfc_bound(x_grid=(0.0, 0.5, 1.0, 2.0, 3.0, 5.0)) -> CheckReport:
    """(2 e^{x^2} / sqrt(pi)) * integral_x^inf e^{-t^2} dt <= 1.

    Evaluated as (2/sqrt(pi)) * integral_0^inf e^{-u^2 - 2xu} du so the
    integrand stays order one for every x.
    """
    report = CheckReport("erfc_bound")
    for x in x_grid:
        if x < 0:
            raise ValueError("x must be >= 0")
        integrand = lambda u: math.exp(-u * u - 2.0 * x * u)
        val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
        observed = 2.0 / math.sqrt(math.pi) * val
        hi = 1.0 + 1e-10
        report.add(f"x={x:g}", observed, -math.inf, hi, observed <= hi, hi - observed)
    return report


def clt_target_variance(lam: float, sigma_omega: float, reward_sd: float) -> float:
    """The claimed limiting variance (sd^2 + 2) sigma^2 / (1 + 2 lam)^2."""
    return (reward_sd**2 + 2.0) * sigma_omega**2 / (1.0 + 2.0 * lam) ** 2


def _clt_linearization_variance(lam: float, sigma_omega: float, reward_sd: float, mu: float) -> float:
    # Delta-method variance of the actual scaled score deviation; reported in
    # the notes so a failed comparison is self-explaining.
    c = (mu + lam) / (1.0 + 2.0 * lam)
    sw2 = sigma_omega**2
    var_z = (
        (1.0 + sw2) * (reward_sd**2 + (mu - c) ** 2)
        - (mu - c) ** 2
        + lam**2 * sw2 * ((1.0 - c) ** 2 + c**2)
    )
    return var_z / (1.0 + 2.0 * lam) ** 2


def check_shifted_mean_clt(
    lam: float = 0.5,
    sigma_omega: float = 1.0,
    reward_sd: float = 1.0,
    s: int = 2000,
    n_reps: int = 8000,
    mu: float = 0.5,
    seed: int = 22,
) -> CheckReport:
    """Monte-Carlo variance of sqrt(s) (Ybar - (mu+lam)/(1+2 lam)) against the
    claimed limit, at 10% relative tolerance.

    Rewards are Gaussian(mu, reward_sd^2); weights Gaussian(1, sigma^2).
    """
    if s < 10**3:
        raise ValueError("s must be >= 1000 for the asymptotic comparison")
    report = CheckReport("shifted_mean_clt", seed=seed)
    target = clt_target_variance(lam, sigma_omega, reward_sd)
    gen = np.random.default_rng(seed)
    c = (mu + lam) / (1.0 + 2.0 * lam)
    vals = np.empty(n_reps)
    chunk = max(1, min(n_reps, 2_000_000 // max(s, 1)))
    done = 0
    while done < n_reps:
        m = min(chunk, n_reps - done)
        R = gen.normal(mu, reward_sd, (m, s))
        W = gen.normal(1.0, sigma_omega, (3, m, s))
        num = (W[0] * R).sum(axis=1) + lam * W[1].sum(axis=1)
        den = W[0].sum(axis=1) + lam * (W[1].sum(axis=1) + W[2].sum(axis=1))
        vals[done : done + m] = math.sqrt(s) * (num / den - c)
        done += m
    observed = float(vals.var(ddof=1))
    lo, hi = 0.9 * target, 1.1 * target
    passed = lo <= observed <= hi
    margin = min(observed - lo, hi - observed)
    report.add(f"lam={lam:g},sigma={sigma_omega:g},sd={reward_sd:g},s={s}", observed, lo, hi, passed, margin)
    report.notes = (
        f"delta-method variance={_clt_linearization_variance(lam, sigma_omega, reward_sd, mu):.6g}"
    )
    return report


def check_subexponential_decay(
    a: float = 1.0,
    b: float = 2.0,
    s_grid=(10, 20, 40, 80),
    n_samples: int = 200_000,
    seed: int = 23,
) -> CheckReport:
    """Sanity check that E exp(-s / (a Xbar + b)) decays as s grows, for
    centered-exponential (hence sub-exponential) summands with a Xbar + b > 0."""
    if not b > a:
        raise ValueError("need b > a so the denominator stays positive")
    report = CheckReport("subexponential_decay", seed=seed)
    gen = np.random.default_rng(seed)
    prev = math.inf
    for s in s_grid:
        xbar = gen.exponential(1.0, (n_samples, s)).mean(axis=1) - 1.0
        vals = np.exp(-s / (a * xbar + b))
        observed = float(vals.mean())
        passed = observed < prev
        margin = prev - observed if math.isfinite(prev) else math.inf
        report.add(f"s={s}", observed, 0.0, prev, passed, margin)
        prev = observed
    return report


# ---------------------------------------------------------------------------
# exact two-armed enumeration under double-or-nothing weights


def _pair_scores(lam: Fraction, w: tuple[int, ...]) -> tuple[tuple[Fraction | None, bool], tuple[Fraction | None, bool]]:
    w1, w1p, w1pp, w2, w2p, w2pp = (Fraction(v) for v in w)
    den1 = w1 + lam * w1p + lam * w1pp
    den2 = w2 + lam * w2p + lam * w2pp
    s1 = (lam * w1p / den1, True) if den1 != 0 else (None, False)
    s2 = ((w2 + lam * w2p) / den2, True) if den2 != 0 else (None, False)
    return s1, s2


def enumerate_example1_detail(lam: float | Fraction) -> tuple[Fraction, int, int]:
    """Exact enumeration of the 64 double-or-nothing weight tuples for the
    stuck two-armed state (arm 1 history {0}, arm 2 history {1}).

    Returns (probability that arm 1's score strictly exceeds arm 2's with
    both defined, count of such tuples, count of tuples where arm 1 is
    defined but arm 2 is not). Only both-defined comparisons count toward
    the probability; zero-denominator scores never win a comparison.
    """
    lam = Fraction(lam)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    strict = mixed = 0
    for w in product((0, 2), repeat=6):
        (v1, def1), (v2, def2) = _pair_scores(lam, w)
        if def1 and def2 and v1 > v2:
            strict += 1
        elif def1 and not def2:
            mixed += 1
    return Fraction(strict, 64), strict, mixed


def enumerate_example1(lam: float | Fraction) -> Fraction:
    prob, _, _ = enumerate_example1_detail(lam)
    return prob


def check_example1() -> CheckReport:
    report = CheckReport("example1_enumeration")
    p_half, n_half, m_half = enumerate_example1_detail(Fraction(1, 2))
    lo = 1.0 / 64.0
    report.add("lam=0.5", float(p_half), lo, 1.0, p_half >= Fraction(1, 64), float(p_half) - lo)
    p_zero = enumerate_example1(0)
    report.add("lam=0", float(p_zero), 0.0, 0.0, p_zero == 0, 0.0)
    n_big = enumerate_example1_detail(10**6)[1]
    n_bigger = enumerate_example1_detail(10**7)[1]
    report.add("lam=1e6-vs-1e7", float(n_big), float(n_bigger), float(n_bigger), n_big == n_bigger, 0.0)
    report.notes = f"lam=0.5 exact counts: {n_half}/64 strict, {m_half}/64 with arm 2 undefined"
    return report


def run_all_checks(seed: int = 7, fast: bool = False) -> list[CheckReport]:
    """The default verification battery (smaller samples when ``fast``)."""
    scale = 10 if fast else 1
    return [
        check_gaussian_tail(),
        check_subgaussian_mgf(n_samples=10**6 // scale, seed=seed + 1),
        check_gaussian_ratio(n_samples=10**6 // scale, seed=seed + 2),
        check_erfc_bound(),
        check_shifted_mean_clt(n_reps=8000 // scale, seed=seed + 3),
        check_subexponential_decay(n_samples=200_000 // scale, seed=seed + 4),
        check_example1(),
    ]
