"""Seeded random streams.

All randomness goes through counter-based Philox generators keyed by a base
seed plus integer coordinates, so any grid point or training step can be
replayed on its own.
"""
import numpy as np

# Stream tags keep independent consumers of one base seed apart.
INIT = 1
DATA = 2
TRAIN = 3
CHANNEL = 4
NOISE = 5
SORTING = 6
SWEEP = 7


def make_generator(seed, *coords) -> np.random.Generator:
    """Return a Philox generator for ``seed`` and the stream ``coords``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or int(seed) < 0:
        raise ValueError(f'seed must be a non-negative integer, got {seed!r}')
    spawn_key = tuple(int(c) for c in coords)
    if any(c < 0 for c in spawn_key):
        raise ValueError(f'stream coordinates must be non-negative, got {coords!r}')
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def draw_seed(rng: np.random.Generator) -> int:
    """Draw a child seed from ``rng``."""
    return int(rng.integers(0, 2 ** 63 - 1))
