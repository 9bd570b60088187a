"""Resource-block model of a shared band."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import AllocationConflict, DomainError, ReleaseError


@dataclass(frozen=True)
class BandPlan:
    center_freq_hz: float
    total_bw_hz: float
    block_bw_hz: float

    def __post_init__(self):
        if self.center_freq_hz <= 0 or self.total_bw_hz <= 0 or self.block_bw_hz <= 0:
            raise DomainError("band frequencies and bandwidths must be positive")
        ratio = self.total_bw_hz / self.block_bw_hz
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise DomainError(
                f"total bandwidth {self.total_bw_hz} is not a multiple of block bandwidth {self.block_bw_hz}")

    @property
    def block_count(self) -> int:
        return int(round(self.total_bw_hz / self.block_bw_hz))

    def block_center_hz(self, index: int) -> float:
        low = self.center_freq_hz - self.total_bw_hz / 2
        return low + (index + 0.5) * self.block_bw_hz


# Use Case 1: L-band share with the GEO system. Use Case 2: 5G band at 28 GHz.
L_BAND = BandPlan(2e9, 200e6, 1e6)
MMWAVE_TN_BAND = BandPlan(28e9, 400e6, 4e6)


@dataclass(frozen=True)
class Allocation:
    owner: str
    tag: Optional[str] = None


@dataclass(frozen=True)
class AllocationMap:
    """Immutable per-block ownership; every update returns a new map.

    ``registry`` optionally restricts which owner ids may allocate.
    ``updated_at`` records the time of the last change and is ignored by
    equality, so an allocate/release round trip compares equal.
    """

    entries: tuple
    registry: Optional[frozenset] = None
    updated_at: float = field(default=0.0, compare=False)

    @classmethod
    def empty(cls, block_count: int, registry: Iterable[str] | None = None) -> AllocationMap:
        if block_count < 1:
            raise DomainError("block_count must be at least 1")
        reg = frozenset(registry) if registry is not None else None
        return cls((None,) * block_count, reg)

    @classmethod
    def for_band(cls, band: BandPlan, registry: Iterable[str] | None = None) -> AllocationMap:
        return cls.empty(band.block_count, registry)

    @property
    def block_count(self) -> int:
        return len(self.entries)

    def _indices(self, blocks) -> list[int]:
        idx = sorted({int(b) for b in blocks})
        if idx and (idx[0] < 0 or idx[-1] >= self.block_count):
            bad = idx[0] if idx[0] < 0 else idx[-1]
            raise DomainError(f"block index {bad} out of range [0, {self.block_count})")
        return idx

    def allocate(self, blocks, owner: str, tag: str | None = None, at: float | None = None) -> AllocationMap:
        idx = self._indices(blocks)
        if not idx:
            return self
        if self.registry is not None and owner not in self.registry:
            raise DomainError(f"owner {owner!r} is not a registered participant")
        for i in idx:
            if self.entries[i] is not None:
                raise AllocationConflict(i)
        entry = Allocation(owner, tag)
        new = list(self.entries)
        for i in idx:
            new[i] = entry
        return AllocationMap(tuple(new), self.registry, self.updated_at if at is None else at)

    def release(self, blocks, at: float | None = None) -> AllocationMap:
        idx = self._indices(blocks)
        if not idx:
            return self
        for i in idx:
            if self.entries[i] is None:
                raise ReleaseError(i)
        new = list(self.entries)
        for i in idx:
            new[i] = None
        return AllocationMap(tuple(new), self.registry, self.updated_at if at is None else at)

    def entry(self, index: int) -> Allocation | None:
        return self.entries[index]

    def is_free(self, index: int) -> bool:
        return self.entries[index] is None

    def free_blocks(self) -> frozenset:
        return frozenset(i for i, e in enumerate(self.entries) if e is None)

    def allocated_blocks(self) -> frozenset:
        return frozenset(i for i, e in enumerate(self.entries) if e is not None)

    def blocks_of(self, owner: str) -> frozenset:
        return frozenset(i for i, e in enumerate(self.entries) if e is not None and e.owner == owner)

    def occupied_fraction(self) -> float:
        return sum(e is not None for e in self.entries) / self.block_count


def contiguous_runs(indices) -> list[range]:
    """Split a set of block indices into maximal contiguous ranges."""
    runs: list[range] = []
    start = prev = None
    for i in sorted(indices):
        if start is None:
            start = prev = i
        elif i == prev + 1:
            prev = i
        else:
            runs.append(range(start, prev + 1))
            start = prev = i
    if start is not None:
        runs.append(range(start, prev + 1))
    return runs
