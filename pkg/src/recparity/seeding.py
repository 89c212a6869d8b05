"""Deterministic seed derivation.

Every randomized operation in this package takes a :class:`SeedSpec` and
derives named child streams from it instead of sharing one global RNG.
Two runs with the same master seed therefore produce bit-identical results
no matter how the work is ordered or parallelized: a stream's state depends
only on the master seed and the label path used to reach it, never on how
many draws happened elsewhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_to_int(label) -> int:
    """Map an arbitrary label (int or string-able) to a stable uint64."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return int(label) & _MASK64
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class SeedSpec:
    """A master seed plus the label path identifying one derived stream."""

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must fit in 64 bits")

    def child(self, *labels) -> "SeedSpec":
        """Derive a sub-spec for a named component, user, replication, etc."""
        extended = self.path + tuple(_label_to_int(lab) for lab in labels)
        return SeedSpec(self.master_seed, extended)

    def rng(self) -> np.random.Generator:
        """Fresh generator for this stream; independent of call order."""
        seq = np.random.SeedSequence([int(self.master_seed), *self.path])
        return np.random.default_rng(seq)


def as_seed(seed) -> SeedSpec:
    """Accept either a SeedSpec or a bare integer master seed."""
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))
