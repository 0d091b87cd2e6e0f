"""Channel-transfer categories and the per-run bandwidth ledger."""
from __future__ import annotations

from enum import IntEnum

from .core import LINE_BYTES


class Category(IntEnum):
    XPOINT_READ = 0
    XPOINT_WRITE = 1
    CACHE_HIT_READ = 2
    CACHE_WRITE = 3
    INSTALL = 4
    MISS_PROBE = 5
    TOC_ACCESS = 6
    TOC_UPDATE = 7
    DIRTY_BIT_UPDATE = 8

    @property
    def label(self):
        return _LABELS[self]


_LABELS = {
    Category.XPOINT_READ: "XpointRead",
    Category.XPOINT_WRITE: "XpointWrite",
    Category.CACHE_HIT_READ: "CacheHitRead",
    Category.CACHE_WRITE: "CacheWrite",
    Category.INSTALL: "Install",
    Category.MISS_PROBE: "MissProbe",
    Category.TOC_ACCESS: "TocAccess",
    Category.TOC_UPDATE: "TocUpdate",
    Category.DIRTY_BIT_UPDATE: "DirtyBitUpdate",
}

USEFUL = (Category.XPOINT_READ, Category.XPOINT_WRITE, Category.CACHE_HIT_READ, Category.CACHE_WRITE)
MAINTENANCE = (Category.MISS_PROBE, Category.TOC_ACCESS, Category.TOC_UPDATE, Category.DIRTY_BIT_UPDATE)


class Device(IntEnum):
    DRAM = 0
    XPOINT = 1


class TransferRecord(tuple):
    """(category, device, line address, is_write) of one 64 B transfer."""

    __slots__ = ()

    def __new__(cls, category, device, addr, is_write=False):
        return tuple.__new__(cls, (Category(category), Device(device), addr, bool(is_write)))

    category = property(lambda self: self[0])
    device = property(lambda self: self[1])
    addr = property(lambda self: self[2])
    is_write = property(lambda self: self[3])
    bytes = LINE_BYTES


class BandwidthLedger:
    """Counts 64 B channel transfers by category.

    With ``record=True`` every transfer is also appended to :attr:`log` as a
    plain ``(category, device, addr, is_write)`` tuple so the channel model
    can replay it.
    """

    def __init__(self, record=False):
        self.counts = [0] * len(Category)
        self.log = [] if record else None
        # separately reported sub-counters
        self.wasted_parallel_reads = 0
        self.mdc_writebacks = 0

    def charge(self, category, device, addr, is_write=False):
        self.counts[category] += 1
        if self.log is not None:
            self.log.append((category, device, addr, is_write))

    def __getitem__(self, category):
        return self.counts[category]

    @property
    def total(self):
        return sum(self.counts)

    @property
    def total_bytes(self):
        return self.total * LINE_BYTES

    @property
    def useful_fraction(self):
        total = self.total
        if total == 0:
            return 1.0
        return sum(self.counts[c] for c in USEFUL) / total

    def snapshot(self):
        return list(self.counts)

    def delta(self, snapshot):
        """Counts accumulated since ``snapshot``, keyed by category label."""
        return {c.label: self.counts[c] - snapshot[c] for c in Category}

    def as_dict(self):
        return {c.label: self.counts[c] for c in Category}
