"""Deterministic random-stream plumbing.

Every stochastic entry point in the toolkit takes a ``SeededRng`` (or a bare
integer seed). Streams are keyed, not sequential: the generator for
``(seed, stream)`` is derived through ``numpy.random.SeedSequence`` spawn
keys, so replicate k can be rerun in isolation and draws never depend on
which other streams were consumed first, or on thread schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SeededRng:
    """Key identifying one reproducible random stream.

    Attributes
    ----------
    seed : int
        64-bit base seed shared by the whole run.
    stream : tuple of int
        Hierarchical stream id; ``()`` is the root stream. Children are
        derived with :meth:`child`.
    """

    seed: int
    stream: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if isinstance(self.stream, int):
            object.__setattr__(self, "stream", (self.stream,))

    def child(self, *ids: int) -> "SeededRng":
        """Derive a sub-stream key, e.g. ``rng.child(scenario, replicate)``."""
        return SeededRng(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """Instantiate the numpy generator for this key."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.default_rng(ss)


def as_seeded(rng: "SeededRng | int") -> SeededRng:
    """Normalize an int seed or SeededRng to a SeededRng."""
    if isinstance(rng, SeededRng):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng))
    raise TypeError(
        f"expected SeededRng or int seed, got {type(rng).__name__}; "
        "raw numpy generators are not accepted because sub-stream derivation "
        "would not be reproducible"
    )


def as_generator(rng: "SeededRng | int | np.random.Generator") -> np.random.Generator:
    """Accept a SeededRng, int seed, or ready generator; return a generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return as_seeded(rng).generator()
