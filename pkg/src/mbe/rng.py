"""Deterministic, splittable random streams.

Every consumer of randomness derives its own stream from a master seed and
an integer path, so runs can execute in any order (or in parallel) and still
replay bit-identically.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "stable_hash"]


def stable_hash(tag: str) -> int:
    """Map a string to a stable non-negative 64-bit integer."""
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little", signed=False)


@dataclass(frozen=True)
class RngStream:
    """A (master_seed, path) address of an independent random stream.

    Identical addresses yield bit-identical draws across platforms; the
    underlying generator is counter-based (Philox), so streams derived from
    disjoint paths never collide.
    """

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def child(self, *keys: int | str) -> "RngStream":
        """Derive a sub-stream by extending the path.

        String keys are hashed; integer keys must be non-negative.
        """
        suffix = []
        for key in keys:
            if isinstance(key, str):
                suffix.append(stable_hash(key))
            else:
                key = int(key)
                if key < 0:
                    raise ValueError("path keys must be non-negative")
                suffix.append(key)
        return RngStream(self.master_seed, self.path + tuple(suffix))

    def generator(self) -> np.random.Generator:
        """Instantiate a fresh generator positioned at the stream start."""
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))
