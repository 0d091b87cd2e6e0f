"""Channel occupancy and latency model, plus the per-run statistics record.

Two 16 GB/s channels are modelled.  In shared mode both carry DRAM-cache
and 3D-XPoint traffic, interleaved by line address; in dedicated mode one
channel serves only the DRAM cache and the other only 3D-XPoint.  Each
channel is a FIFO bus followed by a device with a fixed service time, a
small row-buffer cache for 3D-XPoint reads and a bounded write queue.
"""
from __future__ import annotations

import heapq
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .accounting import USEFUL, Category, Device
from .core import LINE_BYTES, ChannelMode, PolicyConfig

N_CHANNELS = 2


class XPointDevice:
    """Row-buffer LRU for reads; writes occupy one of a fixed set of queue slots."""

    def __init__(self, config: PolicyConfig):
        self.lines_per_row = max(1, config.xpoint_row_bytes // LINE_BYTES)
        self.n_buffers = config.xpoint_row_buffers
        self.rows: OrderedDict[int, None] = OrderedDict()
        self.t_hit = config.xpoint_tcas_ns
        self.t_miss = config.xpoint_trcd_ns
        self.t_write = config.xpoint_twr_ns
        self.queue = [0.0] * config.xpoint_write_queue  # busy-until per slot (heap)
        self.row_hits = 0
        self.row_misses = 0

    def read_latency(self, addr) -> float:
        row = addr // self.lines_per_row
        if row in self.rows:
            self.rows.move_to_end(row)
            self.row_hits += 1
            return self.t_hit
        self.row_misses += 1
        self.rows[row] = None
        if len(self.rows) > self.n_buffers:
            self.rows.popitem(last=False)
        return self.t_miss

    def accept_write(self, t) -> float:
        """Time the write is accepted into the queue (it then drains in tWR)."""
        start = max(t, self.queue[0])
        heapq.heapreplace(self.queue, start + self.t_write)
        return start


class ChannelModel:
    def __init__(self, config: PolicyConfig, mode=None):
        self.config = config
        self.mode = ChannelMode(mode) if mode is not None else config.channel_mode
        self.transfer_ns = LINE_BYTES / config.bus_bandwidth_gbps
        self.t_dram = config.dram_tcas_ns
        self.bus_free = [0.0] * N_CHANNELS
        self.busy_ns = [0.0] * N_CHANNELS
        self.xpoint = [XPointDevice(config) for _ in range(N_CHANNELS)]
        self.transfers = 0

    def route(self, device, addr) -> int:
        if self.mode is ChannelMode.SHARED:
            return addr & 1
        return 0 if device == Device.DRAM else 1

    def charge(self, category, device, addr, is_write=False, issue_ns=0.0) -> float:
        """Occupy a bus for one 64 B transfer; returns its completion time."""
        ch = self.route(device, addr)
        start = max(issue_ns, self.bus_free[ch])
        end = start + self.transfer_ns
        self.bus_free[ch] = end
        self.busy_ns[ch] += self.transfer_ns
        self.transfers += 1
        if device == Device.DRAM:
            return end + self.t_dram
        dev = self.xpoint[ch]
        if is_write:
            return dev.accept_write(end)
        return end + dev.read_latency(addr)


@dataclass
class RunStats:
    """Everything measured for one run."""

    counts: dict = field(default_factory=dict)
    busy_ns: list = field(default_factory=list)
    makespan_ns: float = 0.0
    mean_latency_ns: float = 0.0
    p50_latency_ns: float = 0.0
    p99_latency_ns: float = 0.0
    rho: float = 0.0
    mdc_lookups: int = 0
    mdc_writebacks: int = 0
    wasted_parallel_reads: int = 0
    swp_accuracy: float | None = None
    hm_accuracy: float | None = None
    bypass_draws: int = 0
    accesses: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def total_bytes(self) -> int:
        return self.total * LINE_BYTES

    @property
    def useful_fraction(self) -> float:
        total = self.total
        if not total:
            return 1.0
        return sum(self.counts.get(c.label, 0) for c in USEFUL) / total

    def __getitem__(self, label):
        if isinstance(label, Category):
            label = label.label
        return self.counts[label]


def replay(log, config: PolicyConfig, mode=None) -> RunStats:
    """Time a recorded transfer log with at most ``max_inflight`` outstanding."""
    model = ChannelModel(config, mode)
    window = config.max_inflight
    inflight: list[float] = []
    latencies = np.empty(len(log))
    issue = 0.0
    makespan = 0.0
    counts = [0] * len(Category)
    for i, (cat, device, addr, is_write) in enumerate(log):
        counts[cat] += 1
        if len(inflight) >= window:
            issue = max(issue, heapq.heappop(inflight))
        done = model.charge(cat, device, addr, is_write, issue)
        heapq.heappush(inflight, done)
        latencies[i] = done - issue
        if done > makespan:
            makespan = done
    stats = RunStats(counts={c.label: counts[c] for c in Category},
                     busy_ns=list(model.busy_ns), makespan_ns=makespan)
    if len(log):
        stats.mean_latency_ns = float(latencies.mean())
        stats.p50_latency_ns = float(np.percentile(latencies, 50))
        stats.p99_latency_ns = float(np.percentile(latencies, 99))
    return stats


def compare_modes(trace, config: PolicyConfig) -> dict:
    """Simulate once, then time the same transfers under both channel modes."""
    from .harness import Simulator

    sim = Simulator(config, record=True)
    sim.run(trace)
    sim.finish()
    out = {}
    for mode in ChannelMode:
        stats = replay(sim.ledger.log, config, mode)
        sim.annotate(stats)
        out[mode.value.lower()] = stats
    return out
