"""Seeded random stream plumbing.

Every stochastic operation in the package takes an explicit
``numpy.random.Generator``.  Campaigns derive one independent child stream
per unit of work from a single master seed, so results are reproducible and
independent of worker scheduling.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "child_rng", "spawn_rngs", "generator_state", "restore_generator"]


def make_rng(seed) -> np.random.Generator:
    """Build the master generator for a run."""
    return np.random.default_rng(seed)


def child_rng(seed, *key) -> np.random.Generator:
    """Derive a child stream from ``seed`` and an integer key path.

    The same ``(seed, key)`` always yields the same stream, regardless of
    how many other children were derived before it.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def spawn_rngs(seed, count, *prefix):
    """Derive ``count`` independent child streams."""
    return [child_rng(seed, *prefix, i) for i in range(count)]


def generator_state(rng: np.random.Generator) -> dict:
    """Snapshot a generator so a checkpoint can resume it bit-exactly."""
    return rng.bit_generator.state


def restore_generator(state: dict) -> np.random.Generator:
    """Rebuild a generator from a :func:`generator_state` snapshot."""
    bitgen_name = state["bit_generator"]
    bitgen = getattr(np.random, bitgen_name)()
    bitgen.state = state
    return np.random.Generator(bitgen)
