"""Simulation driver, flat-memory oracle, experiment plans and reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .accounting import BandwidthLedger, Category
from .channel import RunStats, replay
from .core import PolicyConfig, initial_token, payload_token
from .llc import EventKind, L3Cache
from .policies import CONTROLLERS, IntegrityError, MainMemory
from .traces import Trace, TraceSpec, generate, read_trace

_DIRTY = EventKind.DIRTY_EVICTION


class OracleMemory:
    """Flat reference memory: the last token written to each line."""

    def __init__(self):
        self.data: dict[int, int] = {}

    def expected(self, addr) -> int:
        v = self.data.get(addr)
        return -1 - addr if v is None else v  # initial_token, inlined


@dataclass
class OracleVerdict:
    passed: bool = True
    first_divergence: int | None = None
    stage: str = ""
    mismatches: int = 0

    def __str__(self):
        if self.passed:
            return "PASS"
        return f"FAIL@{self.first_divergence:#x}"


class Simulator:
    """Feeds a trace through L3 -> controller and checks data against the oracle.

    Every fill is compared with the oracle as it happens.  :meth:`finish`
    then compares the effective memory image (3D-XPoint overlaid with dirty
    DRAM-cache and L3 lines) before draining, and raw 3D-XPoint afterwards.
    """

    def __init__(self, config: PolicyConfig, record=False, controller_cls=None, warmup=0.1):
        self.config = config
        self.ledger = BandwidthLedger(record)
        self.memory = MainMemory()
        self.l3 = L3Cache(config.l3_lines, config.l3_ways)
        cls = controller_cls or CONTROLLERS[config.organization]
        self.controller = cls(config, self.ledger, self.memory, self.l3.clear_presence)
        self.oracle = OracleMemory()
        self.warmup = warmup
        self.dcd_enabled = config.dcd_enabled
        self.seq = 0
        self.accesses = 0
        self._bad: dict[str, set] = {}
        self.finished = False

    # -- main loop -----------------------------------------------------------

    def run(self, trace: Trace) -> "Simulator":
        if self.finished:
            raise RuntimeError("simulation already drained")
        if len(trace) and int(trace.addrs.max()) >= self.config.memory_lines:
            raise ValueError("trace address beyond the configured memory size")
        pcs, addrs, writes = trace.columns()
        ctl = self.controller
        scoring = hasattr(ctl, "scoring")
        warm_until = int(len(addrs) * self.warmup) if scoring and self.accesses == 0 else 0
        if warm_until:
            ctl.scoring = False
        reserve = self.l3.reserve
        l3_sets = self.l3.sets
        l3_mask = self.l3.mask
        oracle = self.oracle.data
        miss = self._miss
        seq = self.seq
        hits = 0
        for i in range(len(addrs)):
            if i == warm_until and scoring:
                ctl.scoring = True
            addr = addrs[i]
            # L3 hits are handled inline; they never reach the controller
            s = l3_sets[addr & l3_mask]
            line = s.get(addr)
            if writes[i]:
                seq += 1
                token = payload_token(addr, seq)
                if line is not None:
                    hits += 1
                    s.move_to_end(addr)
                    line.dirty = True
                    line.payload = token
                else:
                    miss(addr, pcs[i], reserve(addr, pcs[i], True, token))
                oracle[addr] = token
            elif line is not None:
                hits += 1
                s.move_to_end(addr)
            else:
                miss(addr, pcs[i], reserve(addr, pcs[i], False))
        self.l3.hits += hits
        if scoring:
            ctl.scoring = True
        self.seq = seq
        self.accesses += len(addrs)
        return self

    def _miss(self, addr, pc, victim):
        ctl = self.controller
        if victim is not None:
            if victim.dirty:
                self._dirty_eviction(victim.addr, victim.pc, victim.dcp, victim.dcd,
                                     victim.payload, victim.bypassed)
            elif victim.bypassed:
                # controllers only learn from clean lines that skipped the DRAM cache
                ctl.clean_eviction(victim.addr, victim.pc, victim.dcp, True)
        fill = ctl.read_miss(addr, pc)
        v = self.oracle.data.get(addr)
        if fill.payload != (-1 - addr if v is None else v):
            self._diverge("fill", addr)
        self.l3.fill(addr, fill.present, fill.dirty and self.dcd_enabled, fill.payload)

    def _dirty_eviction(self, addr, pc, dcp, dcd, payload, bypassed):
        if addr not in self.oracle.data:
            raise IntegrityError(f"dirty eviction of never-written line {addr:#x}")
        self.controller.dirty_eviction(addr, pc, dcp, dcd, payload, bypassed)

    def _evict(self, ev):
        if ev.kind is _DIRTY:
            self._dirty_eviction(ev.addr, ev.pc, ev.dcp, ev.dcd, ev.payload, ev.bypassed)
        else:
            self.controller.clean_eviction(ev.addr, ev.pc, ev.dcp, ev.bypassed)

    def _diverge(self, stage, addr):
        self._bad.setdefault(stage, set()).add(addr)

    # -- end of run ----------------------------------------------------------

    def effective_memory(self) -> dict[int, int]:
        """Newest value of every line anywhere in the hierarchy."""
        eff = dict(self.memory.data)
        for addr, (payload, dirty) in self.controller.cached().items():
            if dirty:
                eff[addr] = payload
        for line in self.l3:
            if line.dirty:
                eff[line.addr] = line.payload
        return eff

    def _check_pre_drain(self):
        eff = self.effective_memory()
        expected = self.oracle.expected
        for addr in set(eff) | set(self.oracle.data):
            if eff.get(addr, initial_token(addr)) != expected(addr):
                self._diverge("pre-drain", addr)
        # clean copies must match what lies below them
        for addr, (payload, dirty) in self.controller.cached().items():
            if not dirty and payload != self.memory.read(addr):
                self._diverge("pre-drain", addr)
        for line in self.l3:
            if not line.dirty and line.payload != expected(line.addr):
                self._diverge("pre-drain", line.addr)

    def finish(self) -> OracleVerdict:
        """Check, flush the L3, drain the controller, check again."""
        if self.finished:
            return self.verdict()
        self._check_pre_drain()
        for ev in self.l3.evict_dirty():
            self._evict(ev)
        self.controller.drain()
        self.finished = True
        expected = self.oracle.expected
        for addr in set(self.memory.data) | set(self.oracle.data):
            if self.memory.read(addr) != expected(addr):
                self._diverge("post-drain", addr)
        return self.verdict()

    def verdict(self) -> OracleVerdict:
        if not self._bad:
            return OracleVerdict()
        every = set().union(*self._bad.values())
        first = min(every)
        stage = next(s for s in ("fill", "pre-drain", "post-drain") if first in self._bad.get(s, ()))
        return OracleVerdict(False, first, stage, len(every))

    def annotate(self, stats: RunStats) -> RunStats:
        ctl = self.controller
        toc = getattr(ctl, "toc", None)
        if toc is not None:
            stats.rho = toc.mdc.miss_rate
            stats.mdc_lookups = toc.mdc.lookups
        stats.mdc_writebacks = self.ledger.mdc_writebacks
        stats.wasted_parallel_reads = self.ledger.wasted_parallel_reads
        hm = getattr(ctl, "hm", None)
        if hm is not None and hm.total:
            stats.hm_accuracy = hm.correct / hm.total
        stats.swp_accuracy = getattr(ctl, "swp_accuracy", None)
        sampler = getattr(ctl, "sampler", None)
        stats.bypass_draws = sampler.draws if sampler is not None else 0
        stats.accesses = self.accesses
        return stats

    def stats(self) -> RunStats:
        """Counts always; timing only when the transfer log was recorded."""
        if self.ledger.log is not None:
            stats = replay(self.ledger.log, self.config)
        else:
            stats = RunStats(counts=self.ledger.as_dict())
        return self.annotate(stats)


def simulate(config: PolicyConfig, trace: Trace, record=True, **kw):
    """Run ``trace`` to completion; returns (stats, verdict, simulator)."""
    sim = Simulator(config, record=record, **kw)
    sim.run(trace)
    verdict = sim.finish()
    return sim.stats(), verdict, sim


# -- experiment plans ----------------------------------------------------------

@dataclass
class ExperimentPlan:
    """(config, trace source) pairs; a source is a TraceSpec, a Trace or a path."""

    runs: list = field(default_factory=list)
    output: str | Path | None = None
    format: str = "csv"


@dataclass
class RunResult:
    run_id: int
    config: PolicyConfig
    stats: RunStats
    verdict: OracleVerdict


def load_trace(source, config: PolicyConfig) -> Trace:
    if isinstance(source, Trace):
        return source
    if isinstance(source, TraceSpec):
        return generate(source)
    return read_trace(source, config.memory_lines)


def run(plan: ExperimentPlan) -> list[RunResult]:
    results = []
    for run_id, (config, source) in enumerate(plan.runs):
        stats, verdict, _ = simulate(config, load_trace(source, config))
        results.append(RunResult(run_id, config, stats, verdict))
    if plan.output is not None:
        emit_report(results, plan.output, plan.format)
    return results


def sweep_mdc_size(config: PolicyConfig, trace: Trace, sizes=(128, 256, 512, 1024)) -> list[RunResult]:
    """One run per metadata-cache size, everything else held fixed."""
    if not config.uses_toc:
        raise ValueError("metadata-cache sweep needs a Toc or TicToc config")
    results = []
    for run_id, size in enumerate(sizes):
        cfg = config.replace(metadata_cache_entries=int(size))
        stats, verdict, _ = simulate(cfg, trace)
        results.append(RunResult(run_id, cfg, stats, verdict))
    return results


# -- reports -------------------------------------------------------------------

REPORT_COLUMNS = (["run_id", "organization", "flags"]
                  + [c.label for c in Category]
                  + ["rho", "useful_fraction", "makespan_ns", "verdict"])


def _flags(config: PolicyConfig) -> str:
    parts = config.label.split("+")[1:]
    return "+".join(parts) if parts else "-"


def report_row(result: RunResult) -> dict:
    s = result.stats
    row = {"run_id": result.run_id,
           "organization": result.config.organization.value,
           "flags": _flags(result.config)}
    for c in Category:
        row[c.label] = s.counts.get(c.label, 0)
    row["rho"] = round(s.rho, 6)
    row["useful_fraction"] = round(s.useful_fraction, 6)
    row["makespan_ns"] = round(s.makespan_ns, 3)
    row["verdict"] = str(result.verdict)
    return row


def format_report(results, fmt="csv") -> str:
    rows = [report_row(r) for r in results]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def emit_report(results, path, fmt="csv") -> Path:
    path = Path(path)
    path.write_text(format_report(results, fmt))
    return path
