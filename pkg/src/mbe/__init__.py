"""Multiplier-bootstrap exploration for stochastic bandits.

A library plus CLI: randomly-reweighted reward estimators with boundary
pseudo-rewards, baseline policies, a deterministic regret simulator with
CSV/SVG reporting, and numerical checks of the supporting probability
bounds.
"""

__version__ = "0.1.0"

from .envs import EnvSpec, parse_env_spec
from .policies import AlgSpec, make_policy, parse_alg_spec
from .rng import RngStream
from .weights import TuningParams, WeightDistribution, parse_dist_spec, validate_tuning

__all__ = [
    "__version__",
    "RngStream",
    "WeightDistribution",
    "TuningParams",
    "parse_dist_spec",
    "validate_tuning",
    "EnvSpec",
    "parse_env_spec",
    "AlgSpec",
    "parse_alg_spec",
    "make_policy",
]
