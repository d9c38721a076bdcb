"""Experiment configuration: a line-oriented ``key = value`` file format
with section headers, merged with command-line overrides.

The canonical text of a config doubles as the metadata echo: feeding it
back reproduces the experiment byte-for-byte.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .envs import EnvSpec, RewardFamily, parse_env_spec
from .errors import ConfigError
from .policies import AlgSpec, parse_alg_spec
from .rng import stable_hash

__all__ = ["SimConfig", "parse_config_file", "build_config", "canonical_text", "experiment_id"]

_EXPERIMENT_KEYS = {"env", "t", "runs", "seed", "stride", "workers", "realized", "out"}


@dataclass(frozen=True)
class SimConfig:
    env: EnvSpec
    algorithms: tuple[AlgSpec, ...]
    T: int
    n_runs: int
    master_seed: int
    stride: int
    workers: int = 1
    realized: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.n_runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.algorithms:
            raise ConfigError("no algorithms")

    def single(self, alg: AlgSpec) -> "SimConfig":
        return replace(self, algorithms=(alg,))


def validate_pairing(alg: AlgSpec, env: EnvSpec) -> None:
    """Reject environment/algorithm pairs the dispatcher cannot serve."""
    kind = env.kind
    if alg.name in ("mbe", "naive-mb"):
        exact_raw = alg.get("exact")
        exact = alg.name == "naive-mb" if exact_raw is None else exact_raw.lower() in ("true", "1", "yes")
        if exact and kind != "mab":
            raise ConfigError(f"{alg.label!r}: exact resampling is only defined for mab environments")
        return
    if alg.name == "ts":
        if kind != "mab":
            raise ConfigError(f"{alg.label!r} is defined for mab environments only")
        family = env.param("family")
        flavor = alg.get("flavor")
        if flavor == "bernoulli" and family is not RewardFamily.BERNOULLI:
            raise ConfigError(f"{alg.label!r} needs bernoulli rewards, env has {family.value}")
        if flavor == "gauss" and family is not RewardFamily.GAUSSIAN:
            raise ConfigError(f"{alg.label!r} needs gaussian rewards, env has {family.value}")
        return
    if alg.name in ("phe", "eg") and kind == "lin":
        raise ConfigError(f"{alg.label!r} is not defined for linear environments here")


def parse_config_file(path: str) -> dict:
    """Read the sectioned key=value grammar; '#' starts a comment line."""
    values: dict[str, object] = {"alg": []}
    section = None
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("experiment", "algorithms"):
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if section == "algorithms":
            if key != "alg":
                raise ConfigError(f"{path}:{lineno}: only 'alg' entries belong in [algorithms]")
            values["alg"].append(value)
        elif section == "experiment":
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
        else:
            raise ConfigError(f"{path}:{lineno}: entries must appear inside a section")
    return values


def _as_int(values: dict, key: str, default: int) -> int:
    raw = values.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integer for {key!r}: {raw!r}") from exc


def _as_bool(values: dict, key: str, default: bool) -> bool:
    raw = values.get(key)
    if raw is None:
        return default
    if isinstance(raw, bool):
        return raw
    if str(raw).lower() in ("true", "1", "yes"):
        return True
    if str(raw).lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"bad boolean for {key!r}: {raw!r}")


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> SimConfig:
    """Resolve defaults, file values, then overrides (flags win).

    The MBE_SEED environment variable outranks every seed source.
    """
    merged: dict[str, object] = {"alg": []}
    for source in (file_values, overrides):
        if not source:
            continue
        for key, value in source.items():
            if value is None:
                continue
            if key == "alg":
                if value:  # a non-empty list replaces earlier algorithms
                    merged["alg"] = list(value)
            else:
                merged[key] = value
    env_raw = merged.get("env")
    if env_raw is None:
        raise ConfigError("missing environment spec (env = ...)")
    env = env_raw if isinstance(env_raw, EnvSpec) else parse_env_spec(str(env_raw))
    algs = []
    for raw in merged["alg"]:
        alg = raw if isinstance(raw, AlgSpec) else parse_alg_spec(str(raw))
        validate_pairing(alg, env)
        algs.append(alg)
    T = _as_int(merged, "t", 1000)
    seed = _as_int(merged, "seed", 0)
    env_seed = os.environ.get("MBE_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"bad MBE_SEED value {env_seed!r}") from exc
    stride = _as_int(merged, "stride", max(1, T // 200))
    out = merged.get("out")
    return SimConfig(
        env=env,
        algorithms=tuple(algs),
        T=T,
        n_runs=_as_int(merged, "runs", 20),
        master_seed=seed,
        stride=stride,
        workers=_as_int(merged, "workers", 1),
        realized=_as_bool(merged, "realized", False),
        out_dir=str(out) if out is not None else None,
    )


def canonical_text(cfg: SimConfig) -> str:
    """Deterministic config echo; reparsing it rebuilds the experiment."""
    lines = [
        "[experiment]",
        f"env = {cfg.env.spec()}",
        f"T = {cfg.T}",
        f"runs = {cfg.n_runs}",
        f"seed = {cfg.master_seed}",
        f"stride = {cfg.stride}",
        f"realized = {str(cfg.realized).lower()}",
    ]
    if cfg.out_dir is not None:
        lines.append(f"out = {cfg.out_dir}")
    lines.append("[algorithms]")
    lines.extend(f"alg = {alg.label}" for alg in cfg.algorithms)
    return "\n".join(lines) + "\n"


def _hash_text(cfg: SimConfig) -> str:
    """Like the echo, but only fields that shape the results."""
    lines = [
        f"env = {cfg.env.spec()}",
        f"T = {cfg.T}",
        f"runs = {cfg.n_runs}",
        f"seed = {cfg.master_seed}",
        f"stride = {cfg.stride}",
        f"realized = {str(cfg.realized).lower()}",
    ]
    lines.extend(f"alg = {alg.label}" for alg in cfg.algorithms)
    return "\n".join(lines)


def experiment_id(cfg: SimConfig) -> str:
    return f"{stable_hash(_hash_text(cfg)):016x}"
