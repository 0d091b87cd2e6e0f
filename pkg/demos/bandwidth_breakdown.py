"""Where does the channel bandwidth go?

Runs one Mix trace through every DRAM-cache organization and prints the
per-category transfer breakdown, the share of useful transfers and the
makespan.  Run with ``python3 demos/bandwidth_breakdown.py``.
"""
from tictoc import Category, TraceSpec, desk_config, generate, simulate

CACHE = 1 << 14
trace = generate(TraceSpec("Mix", CACHE * 3 // 2, 60_000, 0.1, 64, seed=1))
print(f"trace: {trace!r} over {CACHE * 3 // 2} lines; DRAM cache holds {CACHE}\n")

setups = [dict(organization=o) for o in ("NoCache", "IdealSram", "Tic", "Toc", "TicToc")]
setups.append(dict(organization="TicToc", dcd_enabled=True, pdm_enabled=True,
                   bypass="PreemptiveWriteAllocate"))

short = {c: c.label[:8] for c in Category}
print(f"{'config':40}" + "".join(f"{short[c]:>9}" for c in Category) + "   useful  makespan(us)")
for kw in setups:
    cfg = desk_config(cache_lines=CACHE, memory_lines=CACHE * 16, metadata_cache_entries=512, **kw)
    stats, verdict, _ = simulate(cfg, trace)
    assert verdict.passed
    row = "".join(f"{stats[c]:>9}" for c in Category)
    print(f"{cfg.label:40}{row}   {stats.useful_fraction:6.3f}  {stats.makespan_ns / 1000:10.1f}")

print("""
Tic pays a MissProbe on every miss; Toc trades that for metadata reads.
TicToc routes by predicted outcome, and the write-side features plus
write-aware bypass cut the Install and dirty-bit traffic further.""")
