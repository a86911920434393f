"""Counter-based random streams and invariant sampling on the vector models.

Every random draw comes from ``Philox`` keyed by ``SeedSequence(seed, spawn_key=(stream, block))``.
Blocks have fixed sizes, so a result depends on the seed alone and never on
how many threads consumed the blocks.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import DomainError, UnsupportedSpaceError
from .spaces import SpaceKind

logger = logging.getLogger(__name__)

STREAM_POINTS = 0
STREAM_MONTE_CARLO = 1
STREAM_BOOTSTRAP = 2
STREAM_PERTURB = 3
STREAM_ROTATION = 4


def philox_generator(seed: int, stream: int, block: int = 0) -> np.random.Generator:
    if seed < 0:
        raise DomainError("seeds must be nonnegative 64-bit integers")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(sequence))


def box_muller(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normal deviates from two uniform draws per value (cosine branch)."""

    u1 = rng.random(shape)
    u2 = rng.random(shape)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def random_unit_vectors(space: SpaceKind, count: int, rng: np.random.Generator) -> np.ndarray:
    """Normalised Gaussian vectors over the field; their law is the invariant measure."""

    if not space.has_vector_model:
        raise UnsupportedSpaceError(f"{space.label} has no sampler")
    shape = space.vector_shape
    gauss = box_muller(rng, (count, *shape))
    axes = tuple(range(1, gauss.ndim))
    norms = np.sqrt(np.sum(gauss * gauss, axis=axes, keepdims=True))
    return gauss / norms


__all__ = [
    "STREAM_BOOTSTRAP",
    "STREAM_MONTE_CARLO",
    "STREAM_PERTURB",
    "STREAM_POINTS",
    "STREAM_ROTATION",
    "philox_generator",
    "box_muller",
    "random_unit_vectors",
]
