"""Seeded random-number plumbing.

Every stochastic routine in the package takes either an integer seed or a
numpy Generator. Independent work items (disorder realizations, recall
trials, pipeline stages) get their own child streams via SeedSequence
spawning, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["as_rng", "spawn_rngs", "rng_state_label"]


def as_rng(seed_or_rng) -> np.random.Generator:
    """Coerce an int seed, SeedSequence, Generator, or None to a Generator.

    Passing an existing Generator returns it unchanged (shared stream);
    anything else creates a fresh PCG64 stream.
    """
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def spawn_rngs(seed_or_rng, count: int) -> list[np.random.Generator]:
    """Create `count` statistically independent child generators.

    Children are derived with SeedSequence.spawn, so the i-th child is a
    pure function of (parent seed material, i): parallel realizations
    reproduce bit-exactly no matter how work is scheduled.
    """
    if isinstance(seed_or_rng, np.random.SeedSequence):
        seq = seed_or_rng
    elif isinstance(seed_or_rng, np.random.Generator):
        seq = seed_or_rng.bit_generator.seed_seq
        if seq is None:  # generator built without a SeedSequence
            seq = np.random.SeedSequence(seed_or_rng.integers(2**63))
    else:
        seq = np.random.SeedSequence(seed_or_rng)
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def rng_state_label(rng: np.random.Generator) -> str:
    """Short identifier of the bit-generator algorithm, for report metadata."""
    return type(rng.bit_generator).__name__
