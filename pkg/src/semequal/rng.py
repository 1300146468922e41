"""
Portable pseudo-random streams.

Permutations and synthetic image parameters must be identical across implementations,
so they come from splitmix64 seeding and xoshiro256** rather than numpy's generators.

Classes:
    SplitMix64: 64-bit seeding generator.
    Xoshiro256StarStar: The general purpose stream.

Functions:
    splitmix64_mix: The splitmix64 output function applied to one state value.
    fisher_yates: Seeded permutation of range(n).
    derive_seed: Per-cell seed from a master seed and a key.
"""

from __future__ import annotations

import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

MASK64: typing.Final[int] = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA: typing.Final[int] = 0x9E3779B97F4A7C15


def splitmix64_mix(value: int) -> int:
    """
    Apply the splitmix64 finalizer to a 64-bit value.

    Args:
        value (int): The (already incremented) state.

    Returns:
        int: The mixed 64-bit output.
    """
    value &= MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & MASK64
    return value ^ (value >> 31)


class SplitMix64:
    """Sequential splitmix64 generator."""

    def __init__(self, seed: int) -> None:
        """Initialize the generator with a 64-bit seed."""
        self.state = seed & MASK64

    def next(self) -> int:
        """Return the next 64-bit output."""
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return splitmix64_mix(self.state)


def _rotl(value: int, shift: int) -> int:
    return ((value << shift) | (value >> (64 - shift))) & MASK64


class Xoshiro256StarStar:
    """
    xoshiro256** seeded from four consecutive splitmix64 outputs.

    Attributes:
        state (list[int]): The four 64-bit words of state.
    """

    def __init__(self, seed: int) -> None:
        """
        Initialize the stream from a 64-bit seed.

        Args:
            seed (int): The seed; only its low 64 bits are used.
        """
        seeder = SplitMix64(seed)
        self.state = [seeder.next() for _ in range(4)]

    def next(self) -> int:
        """Return the next 64-bit output."""
        s0, s1, s2, s3 = self.state
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        shifted = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= shifted
        s3 = _rotl(s3, 45)
        self.state = [s0, s1, s2, s3]
        return result

    def below(self, bound: int) -> int:
        """Return next() mod bound."""
        return self.next() % bound

    def uniform(self) -> float:
        """Return a double in [0, 1) built from the top 53 bits."""
        return (self.next() >> 11) * (1.0 / (1 << 53))

    def uniform_range(self, low: float, high: float) -> float:
        """Return a double in [low, high)."""
        return low + (high - low) * self.uniform()


def fisher_yates(count: int, seed: int) -> typing.List[int]:
    """
    Return a seeded permutation of range(count).

    For i from count - 1 down to 1, j = next() mod (i + 1) and entries i and j swap.

    Args:
        count (int): Length of the permutation.
        seed (int): Seed for the xoshiro256** stream.

    Returns:
        list[int]: The permutation; entry k is the original index placed at slot k.
    """
    stream = Xoshiro256StarStar(seed)
    order = list(range(count))
    for position in range(count - 1, 0, -1):
        swap = stream.below(position + 1)
        order[position], order[swap] = order[swap], order[position]
    return order


def derive_seed(master: int, *key: int) -> int:
    """
    Derive a 64-bit seed for one cell of an experiment from a master seed.

    Each key component advances the value by one splitmix64 step, so distinct keys
    give unrelated seeds.

    Args:
        master (int): The master seed.
        key (int): Non-negative components naming the cell.

    Returns:
        int: The derived seed.
    """
    value = master & MASK64
    for component in key:
        value = splitmix64_mix(value + (component + 1) * GOLDEN_GAMMA)
    return value
