"""Bypass ladder and channel sharing.

First half: a write-heavy stream twice the size of the DRAM cache, under
each bypass mode.  Second half: the same hit-dominated loop timed with two
shared channels and with one channel per device.
"""
from tictoc import Category, PolicyConfig, TraceSpec, compare_modes, generate, simulate

CACHE = 1 << 13
stream = generate(TraceSpec("Stream", 2 * CACHE, 100_000, 0.5, 64, seed=11))
print(f"{'bypass':26}{'Install':>9}{'XpointWrite':>12}{'XpointRead':>11}")
for mode in ("None", "Bypass90", "WriteAllocate", "PreemptiveWriteAllocate"):
    cfg = PolicyConfig(organization="TicToc", bypass=mode, cache_lines=CACHE,
                       memory_lines=CACHE * 16, l3_lines=1024, l3_ways=16, metadata_cache_entries=16)
    stats, verdict, _ = simulate(cfg, stream, record=False)
    assert verdict.passed
    print(f"{mode:26}{stats[Category.INSTALL]:>9}{stats[Category.XPOINT_WRITE]:>12}"
          f"{stats[Category.XPOINT_READ]:>11}")

loop = generate(TraceSpec("Stream", 4096, 100_000, 0.0, 64, seed=1))
cfg = PolicyConfig(organization="TicToc", cache_lines=1 << 14, memory_lines=1 << 18,
                   l3_lines=1024, l3_ways=16)
r = compare_modes(loop, cfg)
print()
for mode, s in r.items():
    print(f"{mode:10} makespan {s.makespan_ns / 1000:8.1f} us  busy per channel "
          + ", ".join(f"{b / 1000:.1f} us" for b in s.busy_ns))
print(f"shared/dedicated = {r['shared'].makespan_ns / r['dedicated'].makespan_ns:.2f}")
