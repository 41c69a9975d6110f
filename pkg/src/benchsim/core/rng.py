"""Seeded, splittable randomness with serializable state.

Every stochastic component draws from a generator produced here so that a
(seed, stream) pair fully determines behavior across runs and platforms.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for a (seed, stream...) key.

    Distinct stream keys (e.g. env indices) give statistically independent
    sequences; the same key always gives the same sequence.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def rng_state(rng: np.random.Generator) -> dict:
    """JSON-serializable snapshot of the generator state."""
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {k: str(v) for k, v in state["state"].items()},
        "has_uint32": state["has_uint32"],
        "uinteger": state["uinteger"],
    }


def set_rng_state(rng: np.random.Generator, snapshot: dict) -> None:
    """Restore a state captured by rng_state; continuation is bit-identical."""
    rng.bit_generator.state = {
        "bit_generator": snapshot["bit_generator"],
        "state": {k: int(v) for k, v in snapshot["state"].items()},
        "has_uint32": snapshot["has_uint32"],
        "uinteger": snapshot["uinteger"],
    }
