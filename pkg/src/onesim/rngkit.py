"""Deterministic random streams.

Every random draw in the engine comes from a :class:`DetStream` whose seed is
derived with :func:`stream_seed` from (run seed, agent id, round, node id).
Because the derivation depends only on those four values, a handler draws the
same numbers no matter which worker runs it or how deliveries interleave,
which is what makes re-partitioned runs reproducible.

The generator is splitmix64; bounded draws use Lemire's multiply-shift so the
exact same integer sequence is reproducible in the compiled kernels (64-bit
wrapping arithmetic, no rejection loops with platform-dependent iteration
counts).
"""
from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a string's UTF-8 bytes."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def mix64(x: int) -> int:
    """splitmix64 finalizer: bijective scramble of a 64-bit value."""
    z = (x + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_seed(seed: int, agent_id: str, round_stamp: int, node_id: str) -> int:
    """Derive the 64-bit seed for one handler invocation's stream.

    Stable across workers and across delivery interleavings: it reads nothing
    but its arguments.
    """
    tag = fnv1a64("%s|%d|%s" % (agent_id, round_stamp, node_id))
    return mix64((seed & MASK64) ^ tag)


class DetStream:
    """splitmix64 stream with the handful of draw shapes the engine needs."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform int in [0, n) via Lemire's multiply-shift."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return (self.next_u64() * n) >> 64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def choice(self, seq):
        if not seq:
            raise ValueError("choice of empty sequence")
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates; returns the list for chaining."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
