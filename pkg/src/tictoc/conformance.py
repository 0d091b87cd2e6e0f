"""Micro-trace conformance suite: exact per-operation transfer counts.

Each check drives one controller directly with a handful of events on a
tiny DRAM cache and compares a transfer count with its known value.  The
predictors are primed by hand so the path taken is never in doubt.

"Lookup cost" below counts DRAM-side reads spent finding or moving data
for the request (CacheHitRead, MissProbe and TocAccess on the DRAM
device); it leaves out the memory access itself and the install write.
"""
from __future__ import annotations

from dataclasses import dataclass

from .accounting import BandwidthLedger, Category, Device
from .core import PolicyConfig
from .policies import Fill, make_controller
from .predictors import pc_tag, signature

CACHE_LINES = 1 << 10
A = 5
B = A + CACHE_LINES  # same set as A, different tag

READER = 0x401000
WRITER = 0x402000

_LOOKUP = (Category.CACHE_HIT_READ, Category.MISS_PROBE, Category.TOC_ACCESS)


@dataclass
class Check:
    name: str
    expected: int
    observed: int

    @property
    def passed(self) -> bool:
        return self.expected == self.observed

    def __str__(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: expected {self.expected}, got {self.observed}"


def micro_config(organization, **kw) -> PolicyConfig:
    return PolicyConfig(organization=organization, cache_lines=CACHE_LINES,
                        memory_lines=CACHE_LINES * 16, l3_lines=64, l3_ways=4,
                        metadata_cache_entries=4, **kw)


class Bench:
    """One controller with a recording ledger and hand-primed predictors."""

    def __init__(self, organization, **kw):
        self.ledger = BandwidthLedger(record=True)
        self.ctl = make_controller(micro_config(organization, **kw), self.ledger)

    def predict_hit(self, pc, hit=True):
        hm = self.ctl.hm
        hm.counters[hm.index(pc)] = 3 if hit else 0

    def write_likely(self, pc):
        swp = self.ctl.swp
        swp.tags[signature(pc)] = pc_tag(pc)
        swp.counters[signature(pc)] = swp.COUNTER_MAX

    def cold_mdc(self):
        self.ctl.toc.flush()

    def mark(self):
        return len(self.ledger.log)

    def since(self, mark):
        return self.ledger.log[mark:]


def count(records, categories=None, device=None) -> int:
    return sum(1 for cat, dev, _, _ in records
               if (categories is None or cat in categories) and (device is None or dev == device))


def lookup_cost(records) -> int:
    return count(records, _LOOKUP, Device.DRAM)


def _dirty_resident(bench, addr):
    # install ``addr`` and write it back once, leaving it dirty in the cache
    fill = bench.ctl.read_miss(addr, READER)
    bench.ctl.dirty_eviction(addr, READER, fill.present, fill.dirty, payload=1)


# -- lookup costs per organization -------------------------------------------------------------

def _hit(org, cold=False):
    b = Bench(org)
    if org != "IdealSram":
        # Toc looks up serially, so its memory read never competes
        b.predict_hit(READER, org == "Tic")
    b.ctl.read_miss(A, READER)
    if cold:
        b.cold_mdc()
    m = b.mark()
    b.ctl.read_miss(A, READER)
    return lookup_cost(b.since(m))


def _miss(org, dirty, cold=False, predicted_hit=False):
    b = Bench(org)
    if org != "IdealSram":
        b.predict_hit(READER, predicted_hit)
    if dirty:
        _dirty_resident(b, A)
    else:
        b.ctl.read_miss(A, READER)
    if cold:
        b.cold_mdc()
    m = b.mark()
    b.ctl.read_miss(B, READER)
    return b.since(m)


def lookup_checks() -> list[Check]:
    out = [Check("IdealSram hit", 1, _hit("IdealSram")),
           Check("IdealSram miss, clean victim", 0, lookup_cost(_miss("IdealSram", False))),
           Check("IdealSram miss, dirty victim", 1, lookup_cost(_miss("IdealSram", True)))]
    for dirty in (False, True):
        recs = _miss("Tic", dirty, predicted_hit=True)
        label = "dirty" if dirty else "clean"
        out.append(Check(f"Tic miss, {label} victim: probes", 1, count(recs, (Category.MISS_PROBE,))))
        out.append(Check(f"Tic miss, {label} victim: victim writes", int(dirty),
                         count(recs, (Category.XPOINT_WRITE,))))
    out.append(Check("Tic hit", 1, _hit("Tic")))
    for cold, extra in ((False, 0), (True, 1)):
        tag = "mdc miss" if cold else "mdc hit"
        out.append(Check(f"Toc hit, {tag}", 1 + extra, _hit("Toc", cold)))
        out.append(Check(f"Toc miss, clean victim, {tag}", extra,
                         lookup_cost(_miss("Toc", False, cold))))
        out.append(Check(f"Toc miss, dirty victim, {tag}", 1 + extra,
                         lookup_cost(_miss("Toc", True, cold))))
        out.append(Check(f"TicToc predicted-miss, clean victim, {tag}", extra,
                         lookup_cost(_miss("TicToc", False, cold))))
    out.append(Check("TicToc predicted-hit miss: probes", 1,
                     count(_miss("TicToc", False, True, predicted_hit=True), (Category.MISS_PROBE,))))
    return out


# -- write path and miss+install ---------------------------------------------------

def _write_path(pdm):
    b = Bench("TicToc", dcd_enabled=pdm, pdm_enabled=pdm)
    b.predict_hit(WRITER, False)
    if pdm:
        b.write_likely(WRITER)
    m = b.mark()
    fill = b.ctl.read_miss(A, WRITER)
    install = count(b.since(m), (Category.INSTALL,))
    b.cold_mdc()  # the write-back arrives long after the install
    m = b.mark()
    b.ctl.dirty_eviction(A, WRITER, fill.present, fill.dirty and pdm, payload=7)
    b.cold_mdc()  # ... and the metadata line is eventually evicted
    return install + len(b.since(m))


def _miss_install(pdm):
    b = Bench("TicToc", dcd_enabled=pdm, pdm_enabled=pdm)
    b.predict_hit(READER, False)
    b.predict_hit(WRITER, False)
    if pdm:
        b.write_likely(WRITER)
    b.ctl.read_miss(A, WRITER)  # Predicted-Dirty under PDM, never written
    m = b.mark()
    b.ctl.read_miss(B, READER)
    return b.since(m)


def path_checks() -> list[Check]:
    plain = _miss_install(False)
    pdm = _miss_install(True)
    return [Check("write path, TicToc", 4, _write_path(False)),
            Check("write path, TicToc+PDM (predicted write)", 2, _write_path(True)),
            Check("miss+install, TicToc", 2, len(plain)),
            Check("miss+install, TicToc+PDM false Predicted-Dirty victim", 3, len(pdm)),
            Check("false Predicted-Dirty victim: memory writes", 0,
                  count(pdm, (Category.XPOINT_WRITE,)))]


# -- other single-event behaviour ------------------------------------------------

def _dcd_repeat():
    b = Bench("TicToc", dcd_enabled=True)
    b.predict_hit(WRITER, False)
    fill = b.ctl.read_miss(A, WRITER)
    b.ctl.dirty_eviction(A, WRITER, fill.present, False, payload=1)
    m = b.mark()
    b.ctl.dirty_eviction(A, WRITER, True, True, payload=2)
    recs = b.since(m)
    return count(recs, (Category.CACHE_WRITE,)), count(recs, (Category.DIRTY_BIT_UPDATE,))


def _bypassed_read():
    b = Bench("TicToc", bypass="Bypass90")
    b.predict_hit(READER, False)
    b.ctl.read_miss(A, READER)  # warms the metadata cache
    sampler = b.ctl.sampler
    sampler._buf, sampler._i = [0.5], 0  # a draw that lands in the bypassed 90%
    m = b.mark()
    fill: Fill = b.ctl.read_miss(A + 1, READER)
    recs = b.since(m)
    return count(recs, device=Device.DRAM), fill.present


def _drain(org):
    b = Bench(org)
    if org != "NoCache":
        b.ctl.read_miss(A, READER)
    b.ctl.dirty_eviction(A, READER, org != "NoCache", False, payload=3)
    m = b.mark()
    b.ctl.drain()
    return count(b.since(m), (Category.XPOINT_WRITE,))


def other_checks() -> list[Check]:
    writes, dbu = _dcd_repeat()
    dram, present = _bypassed_read()
    return [Check("DCD repeat write-back: cache writes", 1, writes),
            Check("DCD repeat write-back: dirty-bit updates", 0, dbu),
            Check("Bypass90 skipped install: DRAM-cache transfers", 0, dram),
            Check("Bypass90 skipped install: reported present", 0, int(present)),
            Check("NoCache drain after one write", 0, _drain("NoCache")),
            Check("IdealSram drain after one write", 1, _drain("IdealSram"))]


def run_conformance() -> list[Check]:
    return lookup_checks() + path_checks() + other_checks()
