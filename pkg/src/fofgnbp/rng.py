"""Seeded, splittable random streams.

Every stream is a Philox-4x64 counter-based generator whose key is derived
from ``(seed, stream_id)`` through numpy's ``SeedSequence``; the same pair
reproduces the same draws on any platform running the same numpy release.
"""
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "as_stream"]


@dataclass
class RngStream:
    seed: int
    stream: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def split(self, count):
        """Child streams ``stream * 2**20 + 1 ..``; independent of this one."""
        base = (self.stream << 20) % 2**64
        return [RngStream(self.seed, (base + k + 1) % 2**64) for k in range(count)]

    # thin pass-throughs so callers can treat a stream like a Generator
    def __getattr__(self, name):
        if name == "generator":
            raise AttributeError(name)
        return getattr(self.generator, name)


def as_stream(rng):
    """Coerce ``None``/int/RngStream/Generator into something with Generator methods."""
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (RngStream, np.random.Generator)):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")
