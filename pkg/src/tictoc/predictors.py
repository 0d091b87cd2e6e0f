"""PC-indexed hit/miss predictor and the signature-based write predictor."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import mix64, mix64_array


def _pc_index(pc, bits):
    # PCs are 4-byte aligned; fold high bits onto the low index bits
    return ((pc >> 2) ^ (pc >> (2 + bits))) & ((1 << bits) - 1)


class HitMissPredictor:
    """Table of 2-bit saturating counters; predicts hit iff counter >= 2."""

    def __init__(self, entries=4096, init=3):
        self.bits = entries.bit_length() - 1
        if 1 << self.bits != entries:
            raise ValueError("entries must be a power of two")
        self.counters = [init] * entries
        self.correct = 0
        self.total = 0

    def index(self, pc):
        return _pc_index(pc, self.bits)

    def predict(self, pc) -> bool:
        return self.counters[_pc_index(pc, self.bits)] >= 2

    def train(self, pc, hit: bool) -> None:
        self.train_index(_pc_index(pc, self.bits), hit)

    def train_index(self, i, hit: bool) -> None:
        c = self.counters[i]
        self.total += 1
        if (c >= 2) == hit:
            self.correct += 1
        if hit:
            if c < 3:
                self.counters[i] = c + 1
        elif c > 0:
            self.counters[i] = c - 1

    @property
    def storage_bytes(self):
        return len(self.counters) * 2 / 8


@dataclass
class SampledLineMeta:
    signature: int
    written_to: bool = False


SIG_BITS = 9


def signature(pc: int) -> int:
    """9-bit installing-PC signature; also the write-predictor table index."""
    return _pc_index(pc, SIG_BITS)


def pc_tag(pc: int) -> int:
    return (pc >> (2 + 2 * SIG_BITS)) & ((1 << SIG_BITS) - 1)


def is_sampled(set_index: int, seed: int, rate: float = 0.01) -> bool:
    """Whether a DRAM-cache set carries write-predictor training metadata."""
    return mix64(set_index ^ (seed * 0x2545F4914F6CDD1D)) < int(rate * 2.0**64)


def sampled_mask(set_indices: np.ndarray, seed: int, rate: float = 0.01) -> np.ndarray:
    """Vectorised :func:`is_sampled`."""
    key = np.uint64((seed * 0x2545F4914F6CDD1D) & (2**64 - 1))
    h = mix64_array(np.asarray(set_indices, dtype=np.uint64) ^ key)
    return h < np.uint64(min(int(rate * 2.0**64), 2**64 - 1))


def sampled_sets(cache_lines: int, seed: int, rate: float = 0.01, chunk=1 << 22) -> set[int]:
    out = set()
    for start in range(0, cache_lines, chunk):
        idx = np.arange(start, min(start + chunk, cache_lines), dtype=np.uint64)
        out.update(idx[sampled_mask(idx, seed, rate)].tolist())
    return out


class WritePredictor:
    """Signature-based write predictor.

    Sampled DRAM-cache sets remember the signature of the installing PC and
    whether the line was written.  When such a line leaves the cache the
    counter for its signature moves up (written) or down (never written).
    A PC whose tagged counter is non-zero predicts write-likely.
    """

    COUNTER_MAX = 7

    def __init__(self, entries=512, sampled=None):
        if entries != 1 << SIG_BITS:
            raise ValueError("the write predictor is indexed by a 9-bit signature")
        self.tags = [None] * entries
        self.counters = [0] * entries
        self.sampled = sampled if sampled is not None else set()
        self.meta: dict[int, SampledLineMeta] = {}
        self._keys: dict[int, tuple[int, int]] = {}  # pc -> (signature, tag)

    def predict(self, pc) -> bool:
        key = self._keys.get(pc)
        if key is None:
            key = self._keys[pc] = (signature(pc), pc_tag(pc))
        i = key[0]
        return self.tags[i] == key[1] and self.counters[i] > 0

    def observe_install(self, set_index, pc) -> None:
        if set_index not in self.sampled:
            return
        sig = signature(pc)
        tag = pc_tag(pc)
        if self.tags[sig] != tag:
            self.tags[sig] = tag
            self.counters[sig] = 0
        self.meta[set_index] = SampledLineMeta(sig)

    def observe_write(self, set_index) -> None:
        m = self.meta.get(set_index)
        if m is not None:
            m.written_to = True

    def learn_on_evict(self, set_index) -> None:
        m = self.meta.pop(set_index, None)
        if m is not None:
            self.learn(m.signature, m.written_to)

    def learn(self, sig, written: bool) -> None:
        c = self.counters[sig]
        if written:
            if c < self.COUNTER_MAX:
                self.counters[sig] = c + 1
        elif c > 0:
            self.counters[sig] = c - 1

    def learn_bypassed(self, set_index, pc, written: bool) -> None:
        """Train from a line that lived only in the L3 (it was never installed)."""
        if set_index in self.sampled:
            sig = signature(pc)
            tag = pc_tag(pc)
            if self.tags[sig] != tag:
                self.tags[sig] = tag
                self.counters[sig] = 0
            self.learn(sig, written)

    @property
    def storage_bytes(self):
        return len(self.counters) * (SIG_BITS + 3) / 8
