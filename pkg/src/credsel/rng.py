"""Seedable RNG wrapper with reproducible substreams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Multiplier for substream derivation; large odd prime so distinct
# (stream, index) pairs map to distinct child streams at any realistic fanout.
_STREAM_MIX = 1_000_003


@dataclass
class RngState:
    """Deterministic random source identified by (seed, stream).

    Two RngState instances constructed with the same (seed, stream) produce
    bit-identical draw sequences. Independent substreams for parallel work
    are derived with :meth:`substream`.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def gen(self) -> np.random.Generator:
        return self._gen

    def substream(self, index: int) -> "RngState":
        """Derive an independent child stream, deterministic in (stream, index)."""
        if index < 0:
            raise ValueError("substream index must be nonnegative")
        return RngState(self.seed, self.stream * _STREAM_MIX + index + 1)
