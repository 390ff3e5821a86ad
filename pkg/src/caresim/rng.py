"""Counter-keyed random substreams.

Every stochastic process draws from its own stream, and every stream is split
further by year, so a draw added to one process (or one year) never shifts
the numbers seen by another. This is what makes paired scenario comparisons
with common random numbers meaningful.
"""

from __future__ import annotations

import numpy as np

STREAMS: dict[str, int] = {
    "init": 0,
    "mortality": 1,
    "fertility": 2,
    "partnership": 3,
    "divorce": 4,
    "relocation": 5,
    "allocation": 6,
    "health": 7,
    "education": 8,
    "economy": 9,
    "projection": 10,
    "orphans": 11,
    "hospital": 12,
}


class RngStream:
    """An independent substream identified by ``(seed, stream_id, *key)``.

    ``stream.gen`` is a ``numpy.random.Generator`` positioned at draw index 0
    of this substream; ``stream.child(k)`` derives a further-keyed substream.
    """

    __slots__ = ("seed", "stream_id", "key", "_gen")

    def __init__(self, seed: int, stream_id: str, *key: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream_id not in STREAMS:
            raise ValueError(f"unknown stream {stream_id!r}")
        self.seed = int(seed)
        self.stream_id = stream_id
        self.key = tuple(int(k) for k in key)
        self._gen: np.random.Generator | None = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(
                entropy=self.seed, spawn_key=(STREAMS[self.stream_id], *self.key)
            )
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, *self.key, *key)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream_id!r}, key={self.key})"


def year_generator(seed: int, stream_id: str, year: int) -> np.random.Generator:
    return RngStream(seed, stream_id, year).gen


def as_generator(rng: RngStream | np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
