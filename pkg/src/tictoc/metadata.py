"""Out-of-line (TOC) metadata: packed entries, metadata lines and their SRAM cache.

In-line (TIC) metadata needs no structure of its own: it rides in the ECC
bits of each DRAM-cache line and is kept by the controllers next to the
data.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import NamedTuple

from .accounting import Category, Device
from .core import LINES_PER_TOC_LINE


class TocEntry(NamedTuple):
    """One metadata byte: bits [7:2] tag, [1] dirty, [0] valid."""

    tag: int = 0
    dirty: bool = False
    valid: bool = False

    def encode(self) -> int:
        if not 0 <= self.tag < 64:
            raise ValueError(f"TOC tag {self.tag} does not fit in 6 bits")
        return (self.tag << 2) | (int(self.dirty) << 1) | int(self.valid)

    @classmethod
    def decode(cls, byte: int) -> "TocEntry":
        if not 0 <= byte < 256:
            raise ValueError(f"not a byte: {byte}")
        return cls(byte >> 2, bool(byte & 2), bool(byte & 1))


class TocLine:
    """64 packed entries for 64 adjacent sets, plus an SRAM-side dirty flag."""

    __slots__ = ("entries", "dirty")

    def __init__(self, entries=None):
        self.entries = bytearray(entries) if entries is not None else bytearray(LINES_PER_TOC_LINE)
        self.dirty = False

    def __getitem__(self, slot) -> TocEntry:
        return TocEntry.decode(self.entries[slot])

    def __setitem__(self, slot, entry: TocEntry):
        self.entries[slot] = entry.encode()

    def mark_dirty(self):
        self.dirty = True


class MetadataCache:
    """Fully associative LRU cache of metadata lines."""

    def __init__(self, entries=512, log=False):
        if entries < 1:
            raise ValueError("metadata cache needs at least one entry")
        self.capacity = entries
        self.lines: OrderedDict[int, TocLine] = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.log = [] if log else None

    def __len__(self):
        return len(self.lines)

    def __contains__(self, line_id):
        return line_id in self.lines

    @property
    def lookups(self):
        return self.hits + self.misses

    @property
    def miss_rate(self) -> float:
        """Metadata-cache miss probability (rho); 0 when nothing was looked up."""
        return self.misses / self.lookups if self.lookups else 0.0

    def lookup(self, line_id):
        """The cached line (refreshing its LRU position), or None on a miss."""
        line = self.lines.get(line_id)
        if line is None:
            self.misses += 1
        else:
            self.hits += 1
            self.lines.move_to_end(line_id)
        if self.log is not None:
            self.log.append((line_id, line is not None))
        return line

    def peek(self, line_id):
        """Like :meth:`lookup` but leaves LRU order and statistics untouched."""
        return self.lines.get(line_id)

    def install(self, line_id, line: TocLine):
        """Insert ``line``; returns the LRU victim as (id, line, was_dirty) or None."""
        if line_id in self.lines:
            raise KeyError(f"metadata line {line_id} already cached")
        victim = None
        if len(self.lines) >= self.capacity:
            vid, vline = self.lines.popitem(last=False)
            victim = (vid, vline, vline.dirty)
        self.lines[line_id] = line
        return victim


class TocStore:
    """The DRAM metadata region seen through its metadata cache.

    Every access goes through :meth:`fetch`, which charges one DRAM read on a
    metadata-cache miss, to the caller's category.  Writing a dirty line back
    when it is evicted to make room is always charged as TocUpdate and also
    counted in the ledger's ``mdc_writebacks``.
    """

    def __init__(self, cache_lines, entries, ledger, log=False):
        self.set_shift = cache_lines.bit_length() - 1
        self.base_addr = cache_lines  # metadata lines live after the data lines
        self.region: dict[int, bytearray] = {}
        self.mdc = MetadataCache(entries, log=log)
        self.ledger = ledger

    def tag_of(self, addr):
        return addr >> self.set_shift

    def fetch(self, line_id, category) -> TocLine:
        mdc = self.mdc
        line = mdc.lines.get(line_id)
        if line is not None and mdc.log is None:
            mdc.hits += 1
            mdc.lines.move_to_end(line_id)
            return line
        line = mdc.lookup(line_id)
        if line is not None:
            return line
        self.ledger.charge(category, Device.DRAM, self.base_addr + line_id)
        line = TocLine(self.region.get(line_id))
        victim = self.mdc.install(line_id, line)
        if victim is not None and victim[2]:
            self._write_back(victim[0], victim[1])
        return line

    def _write_back(self, line_id, line):
        self.ledger.charge(Category.TOC_UPDATE, Device.DRAM, self.base_addr + line_id, True)
        self.ledger.mdc_writebacks += 1
        self.region[line_id] = bytes(line.entries)
        line.dirty = False

    def update(self, set_index, entry: TocEntry, category) -> int:
        """Write one entry; returns the number of transfers this charged now."""
        before = self.ledger.total
        self.write_byte(set_index, entry.encode(), category)
        return self.ledger.total - before

    def write_byte(self, set_index, byte, category) -> None:
        """:meth:`update` on an already-encoded entry (the controllers' fast path)."""
        self.store(self.fetch(set_index >> 6, category), set_index & 63, byte)

    @staticmethod
    def store(line: TocLine, slot, byte) -> None:
        """Write into a line already fetched by the current operation."""
        if line.entries[slot] != byte:
            line.entries[slot] = byte
            line.dirty = True

    def current(self, set_index) -> TocEntry:
        """Authoritative entry without any charge (for checks and reports)."""
        line_id = set_index >> 6
        line = self.mdc.peek(line_id)
        if line is not None:
            return line[set_index & 63]
        raw = self.region.get(line_id)
        return TocEntry.decode(raw[set_index & 63]) if raw is not None else TocEntry()

    def flush(self) -> None:
        """Write back and drop every cached line, as if evicted one by one."""
        for line_id, line in list(self.mdc.lines.items()):
            if line.dirty:
                self._write_back(line_id, line)
        self.mdc.lines.clear()

    def drain(self) -> None:
        """End of run: write back every dirty line."""
        for line_id, line in self.mdc.lines.items():
            if line.dirty:
                self._write_back(line_id, line)
