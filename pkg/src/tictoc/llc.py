"""The on-chip L3: set-associative LRU, carrying DCP/DCD bits per line.

The L3 turns the raw access stream into the events the DRAM-cache
controller sees: read and write misses plus the evictions they cause.
"""
from __future__ import annotations

from collections import OrderedDict
from enum import Enum
from typing import NamedTuple


class EventKind(str, Enum):
    READ_MISS = "ReadMiss"
    WRITE_MISS = "WriteMiss"
    DIRTY_EVICTION = "DirtyEviction"
    CLEAN_EVICTION = "CleanEviction"


class L3Event(NamedTuple):
    """One L3-to-L4 event.

    For misses ``pc`` is the triggering access's PC.  Evictions carry a
    snapshot of the victim: the PC that filled it, its DCP/DCD bits, its
    payload and whether its fill bypassed the DRAM cache.
    """

    kind: EventKind
    addr: int
    pc: int
    dcp: bool = False
    dcd: bool = False
    payload: int | None = None
    bypassed: bool = False


class L3Line:
    __slots__ = ("addr", "dirty", "dcp", "dcd", "pc", "payload", "bypassed")

    def __init__(self, addr, pc, payload, dirty=False, dcp=False, dcd=False, bypassed=False):
        self.addr = addr
        self.pc = pc
        self.payload = payload
        self.dirty = dirty
        self.dcp = dcp
        self.dcd = dcd
        self.bypassed = bypassed

    def __repr__(self):
        flags = "".join(c for c, on in (("D", self.dirty), ("P", self.dcp), ("d", self.dcd)) if on)
        return f"L3Line({self.addr:#x} {flags or '-'})"


class L3Cache:
    """Set-associative, LRU, write-back L3.

    A miss reserves its way immediately: the LRU victim (if the set is full)
    leaves at :meth:`access` time and is reported alongside the miss, so the
    consumer can write it back before handling the fill.
    """

    def __init__(self, lines=1 << 17, ways=16):
        if lines % ways:
            raise ValueError("lines must be a multiple of ways")
        n_sets = lines // ways
        if n_sets & (n_sets - 1):
            raise ValueError("number of L3 sets must be a power of two")
        self.ways = ways
        self.mask = n_sets - 1
        self.sets = [OrderedDict() for _ in range(n_sets)]
        self.pending: dict[int, tuple] = {}
        self._reserved = [0] * n_sets
        self.hits = 0
        self.misses = 0

    def __contains__(self, addr):
        return addr in self.sets[addr & self.mask]

    def line(self, addr) -> L3Line | None:
        return self.sets[addr & self.mask].get(addr)

    def __iter__(self):
        for s in self.sets:
            yield from s.values()

    def access(self, addr, pc, is_write=False, payload=None):
        """Look up one access; returns ``()`` on a hit, else the miss events.

        The miss event comes first, then the eviction it forces (if any).
        """
        index = addr & self.mask
        s = self.sets[index]
        line = s.get(addr)
        if line is not None:
            self.hits += 1
            s.move_to_end(addr)
            if is_write:
                line.dirty = True
                line.payload = payload
            return ()
        victim = self.reserve(addr, pc, is_write, payload)
        kind = EventKind.WRITE_MISS if is_write else EventKind.READ_MISS
        if victim is None:
            return [L3Event(kind, addr, pc)]
        return [L3Event(kind, addr, pc), _eviction(victim)]

    def reserve(self, addr, pc, is_write=False, payload=None) -> L3Line | None:
        """Register a miss for a non-resident ``addr``; returns the evicted line, if any.

        This is :meth:`access` minus the lookup and the event objects, for
        callers that already know the access missed.
        """
        if addr in self.pending:
            raise RuntimeError(f"second miss to {addr:#x} while one is outstanding")
        index = addr & self.mask
        s = self.sets[index]
        self.misses += 1
        victim = None
        if len(s) + self._reserved[index] >= self.ways:
            victim = s.popitem(last=False)[1]
        self._reserved[index] += 1
        self.pending[addr] = (pc, is_write, payload)
        return victim

    def fill(self, addr, present_in_l4, dirty_in_l4, payload) -> L3Line:
        """Complete the outstanding miss for ``addr`` with data from below."""
        try:
            pc, is_write, write_payload = self.pending.pop(addr)
        except KeyError:
            raise RuntimeError(f"fill of {addr:#x} without an outstanding miss") from None
        index = addr & self.mask
        self._reserved[index] -= 1
        if is_write:
            payload = write_payload
        if present_in_l4:
            line = L3Line(addr, pc, payload, is_write, True, bool(dirty_in_l4), False)
        else:
            line = L3Line(addr, pc, payload, is_write, False, False, True)
        self.sets[index][addr] = line
        return line

    def clear_presence(self, addr) -> None:
        """Snoop from the DRAM cache: ``addr`` was evicted there."""
        line = self.sets[addr & self.mask].get(addr)
        if line is not None:
            line.dcp = False
            line.dcd = False

    def evict_dirty(self):
        """Remove every dirty line, in set then LRU order, yielding its event.

        Lazy on purpose: the consumer's reaction to one eviction may snoop
        lines still waiting here, and their events must reflect that.
        """
        for s in self.sets:
            for addr in [a for a, ln in s.items() if ln.dirty]:
                yield _eviction(s.pop(addr))


def _eviction(line: L3Line) -> L3Event:
    kind = EventKind.DIRTY_EVICTION if line.dirty else EventKind.CLEAN_EVICTION
    return L3Event(kind, line.addr, line.pc, line.dcp, line.dcd, line.payload, line.bypassed)
