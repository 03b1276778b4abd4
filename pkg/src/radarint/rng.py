"""Keyed random substreams.

A :class:`Stream` is a root seed plus a key path. Every unit of work (a block
of slots, a scene, a sweep point) derives its own generator from its key, so
results do not depend on how work is scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "Stream":
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64DXSM(ss))


def as_stream(rng) -> Stream:
    if isinstance(rng, Stream):
        return rng
    if rng is None:
        return Stream(0)
    return Stream(int(rng))
