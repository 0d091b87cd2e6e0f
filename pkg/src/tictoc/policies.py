"""DRAM-cache controllers.

Each controller consumes L3 events (read misses, dirty and clean evictions)
and charges every 64 B channel transfer it causes to the bandwidth ledger.
All of them share one interface:

* ``read_miss(addr, pc) -> Fill`` supplies the data for an L3 miss;
* ``dirty_eviction(addr, pc, dcp, dcd, payload, bypassed)`` absorbs an L3
  write-back;
* ``clean_eviction(addr, pc, dcp, bypassed)`` is a notification only (the
  simulator sends it just for lines that bypassed the DRAM cache);
* ``drain()`` writes every dirty DRAM-cache line and metadata line back.

The DRAM cache is direct mapped, so a set index is simply the low bits of
the line address.
"""
from __future__ import annotations

from typing import NamedTuple

from .accounting import BandwidthLedger, Category, Device
from .core import BypassMode, Organization, PolicyConfig, make_rng
from .metadata import TocEntry, TocStore
from .predictors import HitMissPredictor, WritePredictor, sampled_sets

_DRAM = Device.DRAM
_XPOINT = Device.XPOINT
_XREAD = Category.XPOINT_READ
_XWRITE = Category.XPOINT_WRITE
_HIT = Category.CACHE_HIT_READ
_CWRITE = Category.CACHE_WRITE
_INSTALL = Category.INSTALL
_PROBE = Category.MISS_PROBE
_TOC_ACCESS = Category.TOC_ACCESS
_TOC_UPDATE = Category.TOC_UPDATE
_DBU = Category.DIRTY_BIT_UPDATE

RNG_STREAM_BYPASS = 1


class IntegrityError(RuntimeError):
    """Controller state contradicts what the L3 or the oracle knows."""


class Fill(NamedTuple):
    present: bool  # line is now resident in the DRAM cache
    dirty: bool  # known dirty there (feeds the DCD bit)
    payload: int


class MainMemory:
    """3D-XPoint contents; a never-written line holds its initial token."""

    def __init__(self):
        self.data: dict[int, int] = {}

    def read(self, addr) -> int:
        v = self.data.get(addr)
        return -1 - addr if v is None else v  # initial_token, inlined

    def write(self, addr, payload) -> None:
        self.data[addr] = payload


class BypassSampler:
    """Per-opportunity uniform draws from the run's seeded bypass stream."""

    BLOCK = 4096

    def __init__(self, seed):
        self.rng = make_rng(seed, RNG_STREAM_BYPASS)
        self._buf = []
        self._i = 0
        self.draws = 0

    def draw(self) -> float:
        if self._i == len(self._buf):
            self._buf = self.rng.random(self.BLOCK).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        self.draws += 1
        return u


class Controller:
    """Base class: owns the ledger, main memory and the L3 snoop hook."""

    organization: Organization = None

    def __init__(self, config: PolicyConfig, ledger=None, memory=None, snoop=None):
        if config.organization is not self.organization:
            raise ValueError(f"{type(self).__name__} cannot run a {config.organization.value} config")
        self.config = config
        self.ledger = ledger if ledger is not None else BandwidthLedger()
        self.memory = memory if memory is not None else MainMemory()
        self.snoop = snoop if snoop is not None else (lambda addr: None)
        self.set_mask = config.cache_lines - 1

    def _mem_read(self, addr):
        self.ledger.charge(_XREAD, _XPOINT, addr)
        return self.memory.read(addr)

    def _mem_write(self, addr, payload):
        self.ledger.charge(_XWRITE, _XPOINT, addr, True)
        self.memory.write(addr, payload)

    def read_miss(self, addr, pc) -> Fill:
        raise NotImplementedError

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        raise NotImplementedError

    def clean_eviction(self, addr, pc, dcp=False, bypassed=False):
        pass

    def drain(self):
        pass

    def cached(self):
        """Resident lines as ``{addr: (payload, data_dirty)}``."""
        return {}

    def check_invariants(self):
        pass


class NoCacheController(Controller):
    """Every L3 miss and write-back goes straight to 3D-XPoint."""

    organization = Organization.NO_CACHE

    def read_miss(self, addr, pc):
        return Fill(False, False, self._mem_read(addr))

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        self._mem_write(addr, payload)


class _CachedController(Controller):
    """Shared direct-mapped L4 state: tag, data token and data-dirty per set."""

    def __init__(self, config, ledger=None, memory=None, snoop=None):
        super().__init__(config, ledger, memory, snoop)
        self.tags: dict[int, int] = {}
        self.data: dict[int, int] = {}
        self.dirty: set[int] = set()

    def cached(self):
        return {a: (self.data[s], s in self.dirty) for s, a in self.tags.items()}

    def _place(self, s, addr, payload, dirty):
        self.ledger.charge(_INSTALL, _DRAM, addr, True)
        self.tags[s] = addr
        self.data[s] = payload
        if dirty:
            self.dirty.add(s)
        else:
            self.dirty.discard(s)

    def _drop(self, s):
        addr = self.tags.pop(s)
        del self.data[s]
        self.dirty.discard(s)
        self.snoop(addr)
        return addr

    def _write_resident(self, s, addr, payload):
        if self.tags.get(s) != addr:
            raise IntegrityError(f"write-back of {addr:#x} marked present but not resident")
        self.ledger.charge(_CWRITE, _DRAM, addr, True)
        self.data[s] = payload
        self.dirty.add(s)

    def _expect_absent(self, s, addr):
        if self.tags.get(s) == addr:
            raise IntegrityError(f"{addr:#x} is resident but its L3 copy says not present")

    def drain(self):
        for s in sorted(self.dirty):
            self._mem_write(self.tags[s], self.data[s])
        self.dirty.clear()


class IdealSramController(_CachedController):
    """Tags in free on-chip SRAM: only data moves on the channel."""

    organization = Organization.IDEAL_SRAM

    def read_miss(self, addr, pc):
        s = addr & self.set_mask
        if self.tags.get(s) == addr:
            self.ledger.charge(_HIT, _DRAM, addr)
            return Fill(True, s in self.dirty, self.data[s])
        payload = self._mem_read(addr)
        self._install(s, addr, payload, False)
        return Fill(True, False, payload)

    def _install(self, s, addr, payload, dirty):
        victim = self.tags.get(s)
        if victim is not None:
            if s in self.dirty:
                self.ledger.charge(_PROBE, _DRAM, victim)
                self._mem_write(victim, self.data[s])
            self._drop(s)
        self._place(s, addr, payload, dirty)

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        s = addr & self.set_mask
        if self.tags.get(s) == addr:
            self._write_resident(s, addr, payload)
        else:
            self._install(s, addr, payload, True)


class _PredictingController(_CachedController):
    """Adds the PC-indexed hit/miss predictor and the bypass sampler."""

    def __init__(self, config, ledger=None, memory=None, snoop=None):
        super().__init__(config, ledger, memory, snoop)
        self.hm = HitMissPredictor(config.hm_entries)
        self._hm_shift = 2 + self.hm.bits
        self._hm_mask = config.hm_entries - 1
        self.bypass = config.bypass
        self.sampler = BypassSampler(config.rng_seed)
        self.install_threshold = 1.0 - config.bypass_rate

    def _wasted_read(self, addr):
        # memory was read in parallel with a DRAM-cache lookup that hit
        self.ledger.charge(_PROBE, _XPOINT, addr)
        self.ledger.wasted_parallel_reads += 1

    def _should_install(self, incoming_dirty, write_likely=False, bypassed=False) -> bool:
        """Bypass decision for one install opportunity.

        A line whose fill already bypassed the DRAM cache has had its draw;
        its write-back installs only if the mode always installs dirty lines.
        """
        mode = self.bypass
        if mode is BypassMode.NONE:
            return True
        if bypassed:
            return mode is not BypassMode.BYPASS90
        sampler = self.sampler
        if sampler._i < len(sampler._buf):
            u = sampler._buf[sampler._i]
            sampler._i += 1
            sampler.draws += 1
        else:
            u = sampler.draw()
        if u < self.install_threshold:
            return True
        if incoming_dirty and mode is not BypassMode.BYPASS90:
            return True
        return write_likely and mode is BypassMode.PREEMPTIVE_WRITE_ALLOCATE


class TicController(_PredictingController):
    """Tags in-line with data: every lookup costs one DRAM-cache read."""

    organization = Organization.TIC

    def read_miss(self, addr, pc):
        s = addr & self.set_mask
        predicted_hit = self.hm.predict(pc)
        hit = self.tags.get(s) == addr
        self.hm.train(pc, hit)
        if hit:
            self.ledger.charge(_HIT, _DRAM, addr)
            if not predicted_hit:
                self._wasted_read(addr)
            return Fill(True, s in self.dirty, self.data[s])
        # the tag+data read came back with the victim line instead
        self.ledger.charge(_PROBE, _DRAM, addr)
        payload = self._mem_read(addr)
        if not self._should_install(False):
            return Fill(False, False, payload)
        self._replace(s, addr, payload, False)
        return Fill(True, False, payload)

    def _replace(self, s, addr, payload, dirty):
        # the probe already returned the victim, so writing it back is free of reads
        if s in self.tags:
            if s in self.dirty:
                self._mem_write(self.tags[s], self.data[s])
            self._drop(s)
        self._place(s, addr, payload, dirty)

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        s = addr & self.set_mask
        if dcp:
            self._write_resident(s, addr, payload)
            return
        self._expect_absent(s, addr)
        if not self._should_install(True, False, bypassed):
            self._mem_write(addr, payload)
            return
        self.ledger.charge(_PROBE, _DRAM, addr)
        self._replace(s, addr, payload, True)


class TocController(_PredictingController):
    """Tags out-of-line in a DRAM metadata region behind an SRAM cache."""

    organization = Organization.TOC

    def __init__(self, config, ledger=None, memory=None, snoop=None):
        super().__init__(config, ledger, memory, snoop)
        self.toc = TocStore(config.cache_lines, config.metadata_cache_entries, self.ledger)

    def read_miss(self, addr, pc):
        s = addr & self.set_mask
        line_id = s >> 6
        predicted_hit = self.hm.predict(pc)
        mdc_hit = line_id in self.toc.mdc
        line = self.toc.fetch(line_id, _TOC_ACCESS)
        entry = line[s & 63]
        hit = entry.valid and entry.tag == self.toc.tag_of(addr)
        self.hm.train(pc, hit)
        if hit:
            if not mdc_hit and not predicted_hit:
                self._wasted_read(addr)
            self.ledger.charge(_HIT, _DRAM, addr)
            return Fill(True, entry.dirty, self.data[s])
        victim_read = False
        if not mdc_hit and predicted_hit:
            # the speculative data read fetched the victim, not the request
            self.ledger.charge(_PROBE, _DRAM, addr)
            victim_read = True
        payload = self._mem_read(addr)
        self._install(s, addr, payload, False, line, victim_read)
        return Fill(True, False, payload)

    def _install(self, s, addr, payload, dirty, line, victim_read):
        # ``line`` is the metadata line this operation already looked up
        entry = line[s & 63]
        if entry.valid:
            victim = self.tags[s]
            if entry.dirty:
                if not victim_read:
                    self.ledger.charge(_PROBE, _DRAM, victim)
                self._mem_write(victim, self.data[s])
            self._drop(s)
        self._place(s, addr, payload, dirty)
        self.toc.store(line, s & 63, TocEntry(self.toc.tag_of(addr), dirty, True).encode())

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        s = addr & self.set_mask
        if dcp:
            self._write_resident(s, addr, payload)
            _set_toc_dirty(self.toc, s)
            return
        self._expect_absent(s, addr)
        self._install(s, addr, payload, True, self.toc.fetch(s >> 6, _TOC_ACCESS), False)

    def drain(self):
        super().drain()
        self.toc.drain()

    def check_invariants(self):
        _check_toc(self)
        for s in self.tags:
            if (s in self.dirty) != self.toc.current(s).dirty:
                raise IntegrityError(f"set {s}: TOC dirty disagrees with data")


def _set_toc_dirty(toc: TocStore, s):
    """Clean-to-dirty transition for a resident line; reads via the mdc."""
    line = toc.fetch(s >> 6, _DBU)
    slot = s & 63
    byte = line.entries[slot]
    if not byte & 2:
        line.entries[slot] = byte | 2
        line.dirty = True


def _check_toc(ctl):
    toc = ctl.toc
    for s, addr in ctl.tags.items():
        e = toc.current(s)
        if not e.valid or e.tag != toc.tag_of(addr):
            raise IntegrityError(f"set {s}: TOC entry {e} does not describe {addr:#x}")
        if s in ctl.dirty and not e.dirty:
            raise IntegrityError(f"set {s}: TIC dirty but TOC clean")


class TicTocController(TocController):
    """In-line and out-of-line tags together.

    A predicted hit reads the DRAM cache directly (TIC path); a predicted
    miss consults the TOC first.  Optional features: DCD skips TOC dirty-bit
    updates the L3 already knows are done, PDM installs write-likely lines
    with their TOC dirty bit preset, and the bypass modes skip most installs.
    """

    organization = Organization.TICTOC

    def __init__(self, config, ledger=None, memory=None, snoop=None):
        super().__init__(config, ledger, memory, snoop)
        self.dcd_enabled = config.dcd_enabled
        self.pdm_enabled = config.pdm_enabled
        self.swp = WritePredictor(config.swp_entries,
                                  sampled_sets(config.cache_lines, config.rng_seed, config.sample_rate))
        # write-predictor scoring: prediction made at each clean install
        self.scoring = True
        self._predicted: dict[int, bool] = {}
        self.swp_outcomes = [[0, 0], [0, 0]]  # [predicted likely][actually written]

    @property
    def swp_accuracy(self) -> float | None:
        o = self.swp_outcomes
        total = o[0][0] + o[0][1] + o[1][0] + o[1][1]
        return (o[0][0] + o[1][1]) / total if total else None

    def _known_dirty(self, s):
        if s in self.dirty:
            return True
        line = self.toc.mdc.peek(s >> 6)
        return line is not None and bool(line.entries[s & 63] & 2)

    def read_miss(self, addr, pc):
        s = addr & self.set_mask
        hit = self.tags.get(s) == addr
        hm = self.hm
        i = ((pc >> 2) ^ (pc >> self._hm_shift)) & self._hm_mask  # hm.index(pc), inlined
        if hm.counters[i] >= 2:
            # TIC path: read tag and data together
            hm.train_index(i, hit)
            if hit:
                self.ledger.charge(_HIT, _DRAM, addr)
                return Fill(True, self._known_dirty(s), self.data[s])
            self.ledger.charge(_PROBE, _DRAM, addr)
            victim_read = True
            line = None
        else:
            # TOC path: metadata first, memory in parallel
            toc = self.toc
            line_id = s >> 6
            mdc_hit = line_id in toc.mdc.lines
            line = toc.fetch(line_id, _TOC_ACCESS)
            byte = line.entries[s & 63]
            if hit != (byte & 1 == 1 and byte >> 2 == addr >> toc.set_shift):
                raise IntegrityError(f"set {s}: TOC and TIC disagree on {addr:#x}")
            hm.train_index(i, hit)
            if hit:
                if not mdc_hit:
                    self._wasted_read(addr)
                self.ledger.charge(_HIT, _DRAM, addr)
                return Fill(True, bool(byte & 2), self.data[s])
            victim_read = False
        payload = self._mem_read(addr)
        likely = self.swp.predict(pc)
        if self.bypass is not BypassMode.NONE and not self._should_install(False, likely):
            return Fill(False, False, payload)
        toc_dirty = self._install_line(s, addr, pc, payload, False, likely, victim_read, line)
        return Fill(True, toc_dirty, payload)

    def _install_line(self, s, addr, pc, payload, incoming_dirty, likely, victim_read, line=None):
        toc = self.toc
        if line is None:
            line = toc.fetch(s >> 6, _TOC_UPDATE)
        byte = line.entries[s & 63]
        if s in self.tags:
            victim = self.tags[s]
            if not victim_read and byte & 2:
                self.ledger.charge(_PROBE, _DRAM, victim)
                victim_read = True
            if s in self.dirty:
                if not victim_read:
                    raise IntegrityError(f"set {s}: TIC-dirty victim behind a clean TOC entry")
                self._mem_write(victim, self.data[s])
            self._evict(s)
        toc_dirty = incoming_dirty or (self.pdm_enabled and likely)
        self._place(s, addr, payload, incoming_dirty)
        toc.store(line, s & 63, ((addr >> toc.set_shift) << 2) | (2 if toc_dirty else 0) | 1)
        swp = self.swp
        if s in swp.sampled:
            swp.observe_install(s, pc)
            if incoming_dirty:
                swp.observe_write(s)
        if not incoming_dirty and self.scoring:
            self._predicted[s] = likely
        return toc_dirty

    def _evict(self, s):
        self._score(s)
        self.swp.learn_on_evict(s)
        self._drop(s)

    def _score(self, s):
        p = self._predicted.pop(s, None)
        if p is not None:
            self.swp_outcomes[p][s in self.dirty] += 1

    def dirty_eviction(self, addr, pc, dcp=False, dcd=False, payload=None, bypassed=False):
        s = addr & self.set_mask
        if dcp:
            self._write_resident(s, addr, payload)
            self.swp.observe_write(s)
            if dcd and self.dcd_enabled:
                return  # the TOC entry is already dirty
            _set_toc_dirty(self.toc, s)
            return
        self._expect_absent(s, addr)
        likely = self.swp.predict(pc)
        if not self._should_install(True, likely, bypassed):
            self._mem_write(addr, payload)
            if bypassed:
                self.swp.learn_bypassed(s, pc, True)
            return
        if self.toc.mdc.peek(s >> 6) is not None:
            victim_read = False  # the cached TOC entry answers the tag check
        else:
            self.ledger.charge(_PROBE, _DRAM, addr)
            victim_read = True
        self._install_line(s, addr, pc, payload, True, likely, victim_read)

    def clean_eviction(self, addr, pc, dcp=False, bypassed=False):
        if bypassed:
            self.swp.learn_bypassed(addr & self.set_mask, pc, False)

    def drain(self):
        for s in list(self._predicted):
            self._score(s)
        super().drain()

    def check_invariants(self):
        _check_toc(self)


CONTROLLERS = {
    Organization.NO_CACHE: NoCacheController,
    Organization.IDEAL_SRAM: IdealSramController,
    Organization.TIC: TicController,
    Organization.TOC: TocController,
    Organization.TICTOC: TicTocController,
}


def make_controller(config: PolicyConfig, ledger=None, memory=None, snoop=None) -> Controller:
    return CONTROLLERS[config.organization](config, ledger, memory, snoop)
