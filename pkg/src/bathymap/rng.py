"""Deterministic random streams used wherever randomness affects an artifact.

The generator is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit counter
advanced by the golden-ratio increment, finalized by two xor-multiply
rounds. It was chosen because the full stream definition fits in a dozen
lines and can be re-implemented bit-for-bit in any language, which keeps
models, train/test splits, and subsampled tables reproducible outside this
codebase.

Stream derivation
-----------------
A logical stream is addressed by ``(seed, index)``. Its initial internal
state is::

    state0 = mix64((seed + (index + 1) * GOLDEN) mod 2**64)

and each call to ``next_u64`` advances ``state += GOLDEN`` and returns
``mix64(state)``. Derived draws are defined on top of the raw 64-bit
output:

* ``randbelow(n)`` is ``next_u64() % n`` (modulo; the bias at n << 2**64
  is irrelevant here and keeps the definition one line).
* ``random()`` is ``next_u64() * 2**-64``.
* ``shuffle`` / ``subset`` use Fisher-Yates driven by ``randbelow``.

forest.py consumes the identical stream from compiled code; the constants
below are the single source of truth.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * MIX_B) & MASK64
    return z ^ (z >> 31)


def derive_state(seed: int, index: int) -> int:
    """Initial internal state of stream ``(seed, index)``."""
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


def derive_seed(seed: int, index: int) -> int:
    """A child seed for handing to an independent component.

    Identical to ``derive_state``; the alias documents intent at call
    sites that re-seed a sub-stage rather than draw from the stream.
    """
    return derive_state(seed, index)


class SplitMix64:
    """One logical stream. Cheap to construct; state is a single int."""

    __slots__ = ("state",)

    def __init__(self, seed: int, index: int = 0):
        self.state = derive_state(seed, index)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        return self.next_u64() % n

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self.next_u64() * 2.0**-64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, front to back."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]

    def subset(self, n: int, k: int) -> list[int]:
        """First k entries of a partial Fisher-Yates shuffle of range(n),
        returned sorted ascending."""
        items = list(range(n))
        for i in range(min(k, n - 1)):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
        return sorted(items[:k])
