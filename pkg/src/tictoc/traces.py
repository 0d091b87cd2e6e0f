"""Memory-access traces: schema, text format and synthetic generators.

Every generator draws PCs from a small fixed pool in which each PC is either
a *writer* (all of its accesses are writes) or a *reader* (never writes).
Which lines get written is a seeded function of the line, so the same
lines are always written by writer PCs.  That gives the write predictor a
known ground truth: lines a writer PC brings in are eventually written.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .core import MASK64, coerce_fields, make_rng, mix64_array, parse_key_values


class Kind(str, Enum):
    READ = "R"
    WRITE = "W"


class MemAccess(NamedTuple):
    pc: int
    addr: int
    kind: Kind

    @property
    def is_write(self) -> bool:
        return self.kind is Kind.WRITE


class Pattern(str, Enum):
    STREAM = "Stream"
    PAGE_LOCAL = "PageLocal"
    WRITE_ONCE = "WriteOnce"
    WRITE_REPEAT = "WriteRepeat"
    POINTER_CHASE = "PointerChase"
    MIX = "Mix"


PC_BASE = 0x400000
READERS_PER_PATTERN = 4
WRITERS_PER_PATTERN = 4
_PATTERN_SLOT = {p: i for i, p in enumerate(Pattern)}


def pc_pool(pattern: Pattern) -> tuple[list[int], list[int]]:
    """(reader PCs, writer PCs) used by ``pattern``; 8 per pattern, 48 in all."""
    slot = _PATTERN_SLOT[Pattern(pattern)] * (READERS_PER_PATTERN + WRITERS_PER_PATTERN)
    pcs = [PC_BASE + 4 * (slot + j) for j in range(READERS_PER_PATTERN + WRITERS_PER_PATTERN)]
    return pcs[:READERS_PER_PATTERN], pcs[READERS_PER_PATTERN:]


def is_writer_pc(pc: int) -> bool:
    return ((pc - PC_BASE) // 4) % (READERS_PER_PATTERN + WRITERS_PER_PATTERN) >= READERS_PER_PATTERN


@dataclass(frozen=True)
class TraceSpec:
    pattern: Pattern = Pattern.STREAM
    footprint_lines: int = 1 << 16
    access_count: int = 100_000
    write_fraction: float = 0.0
    locality_span: int = 64
    seed: int = 0
    base_line: int = 0

    def __post_init__(self):
        if not isinstance(self.pattern, Pattern):
            object.__setattr__(self, "pattern", Pattern(self.pattern))
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ValueError("write_fraction must lie in [0, 1]")
        if not self.footprint_lines >= self.locality_span >= 1:
            raise ValueError("need footprint_lines >= locality_span >= 1")
        if self.access_count < 0 or self.base_line < 0:
            raise ValueError("access_count and base_line must be non-negative")
        if self.pattern is Pattern.WRITE_REPEAT and self.footprint_lines <= self.locality_span:
            raise ValueError("WriteRepeat needs filler lines beyond the hot set")
        if self.pattern is Pattern.WRITE_REPEAT and self.write_fraction == 0.0:
            raise ValueError("WriteRepeat needs write_fraction > 0")


class Trace:
    """An immutable access sequence backed by three numpy arrays."""

    __slots__ = ("pcs", "addrs", "writes")

    def __init__(self, pcs, addrs, writes):
        self.pcs = np.asarray(pcs, dtype=np.uint64)
        self.addrs = np.asarray(addrs, dtype=np.uint64)
        self.writes = np.asarray(writes, dtype=bool)
        if not len(self.pcs) == len(self.addrs) == len(self.writes):
            raise ValueError("trace columns differ in length")
        for arr in (self.pcs, self.addrs, self.writes):
            arr.setflags(write=False)

    @classmethod
    def from_accesses(cls, accesses) -> "Trace":
        accesses = list(accesses)
        return cls([a.pc for a in accesses], [a.addr for a in accesses],
                   [Kind(a.kind) is Kind.WRITE for a in accesses])

    def __len__(self):
        return len(self.addrs)

    def __iter__(self) -> Iterator[MemAccess]:
        for pc, addr, w in zip(self.pcs.tolist(), self.addrs.tolist(), self.writes.tolist()):
            yield MemAccess(pc, addr, Kind.WRITE if w else Kind.READ)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.pcs[i], self.addrs[i], self.writes[i])
        return MemAccess(int(self.pcs[i]), int(self.addrs[i]),
                         Kind.WRITE if self.writes[i] else Kind.READ)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (np.array_equal(self.pcs, other.pcs) and np.array_equal(self.addrs, other.addrs)
                and np.array_equal(self.writes, other.writes))

    def __repr__(self):
        return f"Trace({len(self)} accesses, {int(self.writes.sum())} writes)"

    def columns(self):
        """Plain-list columns, the fastest form for a Python simulation loop."""
        return self.pcs.tolist(), self.addrs.tolist(), self.writes.tolist()

    def concat(self, other: "Trace") -> "Trace":
        return Trace(np.concatenate([self.pcs, other.pcs]),
                     np.concatenate([self.addrs, other.addrs]),
                     np.concatenate([self.writes, other.writes]))


# -- generators --------------------------------------------------------------

def _write_lines(offsets, spec):
    """Which footprint offsets are write lines (a pure function of offset and seed)."""
    if spec.write_fraction >= 1.0:
        return np.ones(len(offsets), dtype=bool)
    if spec.write_fraction <= 0.0:
        return np.zeros(len(offsets), dtype=bool)
    h = mix64_array(np.asarray(offsets, dtype=np.uint64) ^ np.uint64((spec.seed * 0x9E37 + 1) & MASK64))
    threshold = np.uint64(int(spec.write_fraction * 2.0**64) if spec.write_fraction < 1 else 2**64 - 1)
    return h < threshold


def _assign_pcs(rng, writes, pattern):
    readers, writers = pc_pool(pattern)
    pcs = np.asarray(readers, dtype=np.uint64)[rng.integers(0, len(readers), len(writes))]
    wpcs = np.asarray(writers, dtype=np.uint64)[rng.integers(0, len(writers), len(writes))]
    return np.where(writes, wpcs, pcs)


def _finish(spec, offsets, rng, pattern=None, writes=None):
    offsets = np.asarray(offsets, dtype=np.uint64)
    if writes is None:
        writes = _write_lines(offsets, spec)
    pcs = _assign_pcs(rng, writes, pattern or spec.pattern)
    return Trace(pcs, offsets + np.uint64(spec.base_line), writes)


def _stream(spec, rng):
    return _finish(spec, np.arange(spec.access_count, dtype=np.uint64) % np.uint64(spec.footprint_lines), rng)


def _bursts(spec, rng, n_bursts):
    # bursts cover whole aligned pages of ``span`` lines
    span = spec.locality_span
    starts = rng.integers(0, spec.footprint_lines // span, n_bursts, dtype=np.uint64) * np.uint64(span)
    return (starts[:, None] + np.arange(span, dtype=np.uint64)[None, :]).ravel()


def _page_local(spec, rng):
    n = spec.access_count
    offsets = _bursts(spec, rng, -(-n // spec.locality_span))[:n]
    return _finish(spec, offsets, rng)


def _write_once(spec, rng):
    # first pass visits every line once, page by page in random page order;
    # later passes only read, so no line is ever written twice
    span = spec.locality_span
    n_pages = -(-spec.footprint_lines // span)
    order = rng.permutation(n_pages).astype(np.uint64)
    first = (order[:, None] * np.uint64(span) + np.arange(span, dtype=np.uint64)[None, :]).ravel()
    first = first[first < np.uint64(spec.footprint_lines)]
    reps = -(-spec.access_count // max(1, len(first)))
    offsets = np.tile(first, reps)[:spec.access_count]
    writes = _write_lines(offsets, spec)
    writes[len(first):] = False
    return _finish(spec, offsets, rng, writes=writes)


def _write_repeat(spec, rng):
    # rounds of: every hot line written once, then uniform filler reads
    hot = spec.locality_span
    filler = max(1, round(hot * (1.0 - spec.write_fraction) / spec.write_fraction))
    per_round = hot + filler
    rounds = -(-spec.access_count // per_round)
    hot_part = np.tile(np.arange(hot, dtype=np.uint64), (rounds, 1))
    fill_part = rng.integers(hot, spec.footprint_lines, (rounds, filler), dtype=np.uint64)
    offsets = np.concatenate([hot_part, fill_part], axis=1).ravel()[:spec.access_count]
    writes = offsets < np.uint64(hot)
    return _finish(spec, offsets, rng, writes=writes)


def _pointer_chase(spec, rng):
    return _finish(spec, rng.integers(0, spec.footprint_lines, spec.access_count, dtype=np.uint64), rng)


MIX_PARTS = (Pattern.STREAM, Pattern.PAGE_LOCAL, Pattern.WRITE_ONCE,
             Pattern.WRITE_REPEAT, Pattern.POINTER_CHASE)
MIX_PHASE = 1000


def _mix(spec, rng):
    # equal shares of the five base patterns, each on its own slice of the
    # footprint, interleaved in phases of MIX_PHASE accesses
    k = len(MIX_PARTS)
    region = spec.footprint_lines // k
    if region < spec.locality_span:
        raise ValueError("Mix footprint too small for its locality span")
    share = -(-spec.access_count // k)
    parts = []
    for i, pattern in enumerate(MIX_PARTS):
        wf = spec.write_fraction
        if pattern is Pattern.WRITE_REPEAT:
            wf = max(wf, 1e-3)
        sub = TraceSpec(pattern, region, share, wf, spec.locality_span,
                        int(rng.integers(0, 2**63)), spec.base_line + i * region)
        parts.append(generate(sub))
    pcs, addrs, writes = [], [], []
    for start in range(0, share, MIX_PHASE):
        for part in parts:
            pcs.append(part.pcs[start:start + MIX_PHASE])
            addrs.append(part.addrs[start:start + MIX_PHASE])
            writes.append(part.writes[start:start + MIX_PHASE])
    n = spec.access_count
    return Trace(np.concatenate(pcs)[:n], np.concatenate(addrs)[:n], np.concatenate(writes)[:n])


_GENERATORS = {
    Pattern.STREAM: _stream,
    Pattern.PAGE_LOCAL: _page_local,
    Pattern.WRITE_ONCE: _write_once,
    Pattern.WRITE_REPEAT: _write_repeat,
    Pattern.POINTER_CHASE: _pointer_chase,
    Pattern.MIX: _mix,
}


def generate(spec: TraceSpec) -> Trace:
    """Deterministic synthetic trace for ``spec``."""
    if spec.access_count == 0:
        return Trace([], [], [])
    rng = make_rng(spec.seed, _PATTERN_SLOT[spec.pattern])
    return _GENERATORS[spec.pattern](spec, rng)


# -- text format -------------------------------------------------------------

class TraceFormatError(ValueError):
    def __init__(self, record: int, message: str):
        super().__init__(f"record {record}: {message}")
        self.record = record


def write_trace(trace, path) -> None:
    """One ``<pc-hex> <lineaddr-hex> R|W`` record per line."""
    if not isinstance(trace, Trace):
        trace = Trace.from_accesses(trace)
    pcs, addrs, writes = trace.columns()
    with open(path, "w") as f:
        f.writelines(f"{pc:x} {addr:x} {'W' if w else 'R'}\n"
                     for pc, addr, w in zip(pcs, addrs, writes))


def read_trace(path, memory_lines: int | None = None) -> Trace:
    pcs, addrs, writes = [], [], []
    with open(path) as f:
        for record, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 3 or fields[2] not in ("R", "W"):
                raise TraceFormatError(record, f"expected '<pc-hex> <lineaddr-hex> R|W', got {line.strip()!r}")
            try:
                pc, addr = int(fields[0], 16), int(fields[1], 16)
            except ValueError:
                raise TraceFormatError(record, f"bad hex field in {line.strip()!r}") from None
            if pc >= 1 << 64 or pc < 0:
                raise TraceFormatError(record, "pc does not fit in 64 bits")
            if addr < 0 or (memory_lines is not None and addr >= memory_lines):
                raise TraceFormatError(record, f"line address {addr:#x} out of range")
            pcs.append(pc)
            addrs.append(addr)
            writes.append(fields[2] == "W")
    return Trace(pcs, addrs, writes)


def load_trace_spec(path) -> TraceSpec:
    """Read a ``key = value`` file whose keys are :class:`TraceSpec` fields."""
    path = Path(path)
    pairs = parse_key_values(path.read_text(), str(path))
    return TraceSpec(**coerce_fields(TraceSpec, pairs, str(path)))
