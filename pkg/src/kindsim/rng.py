"""Reproducible random streams.

Every random draw in the package comes from an :class:`EventStream`, a thin
buffer over raw 64-bit outputs of numpy's ``PCG64`` bit generator.  Both event
kernels (compiled and pure Python) read the same buffer and convert raw words
to doubles with the same formula, so a given seed produces bitwise identical
trajectories whichever kernel is loaded.

Seed derivation
---------------
A stream for replicate ``i`` of an experiment with master seed ``s`` is::

    PCG64(SeedSequence(entropy=s, spawn_key=(i,)))

``SeedSequence`` hashing is specified by numpy and is stable across platforms
and numpy releases, which makes the mapping ``(s, i) -> stream`` reproducible
on any machine.  Sub-streams that are not replicates (certification ensembles,
sweep rows, Erdos-Renyi retries) use a two-element spawn key ``(tag, i)`` with
the tags defined below, so they never collide with replicate streams.

A raw word ``r`` becomes the double ``(r >> 11) * 2**-53`` in ``[0, 1)``.
"""
from __future__ import annotations

import numpy as np

TWO_M53 = 1.0 / 9007199254740992.0

TAG_ERDOS_RENYI = 0x4552
TAG_CERT_TRAJECTORY = 0x4354
TAG_CERT_RANDOM = 0x4352
TAG_SWEEP_ROW = 0x5357

_MIN_BLOCK = 3 * 128
_MAX_BLOCK = 3 * 32768


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    if master_seed < 0 or master_seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {master_seed}")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def derive_seed(master_seed: int, *key: int) -> int:
    """Derive a new 64-bit master seed from ``master_seed`` and a spawn key."""
    return int(seed_sequence(master_seed, *key).generate_state(1, dtype=np.uint64)[0])


class EventStream:
    """Buffered stream of raw PCG64 words shared by the event kernels.

    The buffer grows geometrically so that short-lived replicates do not pay
    for a large block up front.  Words are consumed strictly in order; the
    position advances by exactly the number of words used.
    """

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if not isinstance(seed, np.random.SeedSequence):
            seed = seed_sequence(seed)
        self._bitgen = np.random.PCG64(seed)
        self._block = _MIN_BLOCK
        self.buf = np.empty(0, dtype=np.uint64)
        self.pos = 0

    @classmethod
    def for_replicate(cls, master_seed: int, index: int) -> "EventStream":
        return cls(seed_sequence(master_seed, index))

    @property
    def available(self) -> int:
        return self.buf.shape[0] - self.pos

    def reserve(self, n: int) -> None:
        """Make sure at least ``n`` unread words are buffered."""
        if self.available >= n:
            return
        need = n - self.available
        while self._block < need:
            self._block *= 2
        fresh = self._bitgen.random_raw(self._block)
        self.buf = np.concatenate([self.buf[self.pos:], fresh])
        self.pos = 0
        if self._block < _MAX_BLOCK:
            self._block *= 2

    def raw(self, n: int) -> np.ndarray:
        self.reserve(n)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def random(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on ``[0, 1)``."""
        return (self.raw(n) >> np.uint64(11)) * TWO_M53

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        return low + (high - low) * self.random(n)


def as_stream(rng: "EventStream | int | np.random.SeedSequence") -> EventStream:
    if isinstance(rng, EventStream):
        return rng
    return EventStream(rng)
