"""Seeded, counter-based random streams for reproducible Monte-Carlo trials.

Every randomized operation in this package draws from an :class:`RngStream`,
a thin wrapper over numpy's Philox counter-based bit generator.  A stream is
fully determined by ``(master_seed, stream_id)``, so independent trials can
be keyed by structured identifiers (cell index, trial index) and executed in
any order, on any number of threads, with bit-identical results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "derive_stream_id"]

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def derive_stream_id(*parts: int | str) -> int:
    """Hash a tuple of identifying parts into a 64-bit stream id.

    Parts may be integers or strings; they are encoded unambiguously
    (type-tagged, length-delimited) so that e.g. ``(1, "23")`` and
    ``(12, "3")`` cannot collide by concatenation.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool) or not isinstance(part, (int, str)):
            raise TypeError(f"stream id parts must be int or str, got {type(part).__name__}")
        data = (
            b"i" + str(int(part)).encode("ascii")
            if isinstance(part, int)
            else b"s" + part.encode("utf-8")
        )
        h.update(len(data).to_bytes(4, "big"))
        h.update(data)
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class RngStream:
    """A named, platform-stable random stream.

    Attributes:
        master_seed: 64-bit experiment-level seed.
        stream_id: 64-bit identifier of this stream within the experiment.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if not 0 <= self.stream_id <= _MASK64:
            raise ValueError(f"stream_id must fit in 64 bits, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Return a fresh generator positioned at the start of this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=_U64)
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, *parts: int | str) -> "RngStream":
        """Return a child stream keyed by this stream's id plus `parts`."""
        child = derive_stream_id(self.stream_id, *parts)
        return RngStream(self.master_seed, child)
