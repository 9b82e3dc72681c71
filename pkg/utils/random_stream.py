"""Seeded, path-addressed random streams on a counter-based generator."""
from typing import Tuple

import numpy as np

_U64_MAX = 2**64 - 1

# Leading path index that separates the task families of an experiment.
Y_DOMAIN = 1
REP_DOMAIN = 2
ORACLE_DOMAIN = 3
K2_DOMAIN = 4
SELFTEST_DOMAIN = 5


def _check_u64(name: str, value) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if not 0 <= value <= _U64_MAX:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


class RandomStream:
    """
    A reproducible stream identified by (seed, path).

    The path is hashed together with the seed by numpy's SeedSequence into
    the key of a Philox generator, so distinct paths give independent
    streams and the same (seed, path) always replays the same draws.
    """

    __slots__ = ("seed", "path", "_generator")

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        self.seed = _check_u64("seed", seed)
        self.path = tuple(_check_u64("path index", i) for i in path)
        self._generator = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._generator = np.random.Generator(np.random.Philox(sequence))
        return self._generator

    def substream(self, *indices: int) -> "RandomStream":
        return RandomStream(self.seed, self.path + tuple(indices))

    def __eq__(self, other) -> bool:
        return isinstance(other, RandomStream) and (self.seed, self.path) == (other.seed, other.path)

    def __hash__(self) -> int:
        return hash((self.seed, self.path))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, path={self.path})"

    def __reduce__(self):
        return (RandomStream, (self.seed, self.path))
