"""Address geometry, run configuration and deterministic randomness.

Everything here is pure: a :class:`PolicyConfig` is frozen and the helper
functions have no state, so configs can be shared freely between runs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

LINE_BYTES = 64
LINES_PER_TOC_LINE = 64
TOC_TAG_BITS = 6
MASK64 = (1 << 64) - 1


class Organization(str, Enum):
    NO_CACHE = "NoCache"
    IDEAL_SRAM = "IdealSram"
    TIC = "Tic"
    TOC = "Toc"
    TICTOC = "TicToc"


class BypassMode(str, Enum):
    NONE = "None"
    BYPASS90 = "Bypass90"
    WRITE_ALLOCATE = "WriteAllocate"
    PREEMPTIVE_WRITE_ALLOCATE = "PreemptiveWriteAllocate"


class ChannelMode(str, Enum):
    SHARED = "Shared"
    DEDICATED = "Dedicated"


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    cache_lines: int = 1 << 26
    metadata_region_lines: int = 1 << 20
    lines_per_toc_line: int = LINES_PER_TOC_LINE

    def __post_init__(self):
        if not _is_pow2(self.cache_lines):
            raise ValueError(f"cache_lines must be a power of two, got {self.cache_lines}")
        if self.lines_per_toc_line != LINES_PER_TOC_LINE:
            raise ValueError("a metadata line always covers 64 sets")
        if self.metadata_region_lines * self.lines_per_toc_line < self.cache_lines:
            raise ValueError("metadata region too small to cover every set")


def cache_index(addr: int, geom: CacheGeometry) -> int:
    """Direct-mapped set of a line address."""
    return addr & (geom.cache_lines - 1)


def toc_line_of(set_index: int) -> tuple[int, int]:
    """(metadata-line id, slot) holding the TOC entry of ``set_index``."""
    return set_index >> 6, set_index & 63


@dataclass(frozen=True)
class PolicyConfig:
    """One simulated system: organization, feature flags and structure sizes.

    Defaults reproduce the full-size system (4 GB direct-mapped DRAM cache in
    front of 64 GB of 3D-XPoint, 8 MB 16-way L3, one shared 16 GB/s channel).
    Use :func:`desk_config` for a proportionally shrunk system that simulates
    quickly.
    """

    organization: Organization = Organization.TICTOC
    dcd_enabled: bool = False
    pdm_enabled: bool = False
    bypass: BypassMode = BypassMode.NONE
    metadata_cache_entries: int = 512
    channel_mode: ChannelMode = ChannelMode.SHARED
    rng_seed: int = 0
    # geometry, in 64 B lines
    cache_lines: int = 1 << 26
    memory_lines: int = 1 << 30
    l3_lines: int = 1 << 17
    l3_ways: int = 16
    # predictor / bypass sizing
    hm_entries: int = 4096
    swp_entries: int = 512
    sample_rate: float = 0.01
    bypass_rate: float = 0.9
    # channel and device timing
    bus_bandwidth_gbps: float = 16.0
    dram_tcas_ns: float = 13.0
    dram_trcd_ns: float = 13.0
    dram_trp_ns: float = 13.0
    dram_tras_ns: float = 30.0
    xpoint_tcas_ns: float = 4.0
    xpoint_trcd_ns: float = 80.0
    xpoint_trp_ns: float = 0.0
    xpoint_tras_ns: float = 96.0
    xpoint_twr_ns: float = 320.0
    xpoint_row_buffers: int = 64
    xpoint_row_bytes: int = 256
    xpoint_write_queue: int = 64
    max_inflight: int = 64

    def __post_init__(self):
        # tolerate plain strings (config files, kwargs from the CLI)
        for name, enum in (("organization", Organization), ("bypass", BypassMode),
                           ("channel_mode", ChannelMode)):
            value = getattr(self, name)
            if not isinstance(value, enum):
                object.__setattr__(self, name, _parse_enum(enum, value))
        org = self.organization
        if self.dcd_enabled and org is not Organization.TICTOC:
            raise ValueError("dcd_enabled requires the TicToc organization")
        if self.pdm_enabled and org is not Organization.TICTOC:
            raise ValueError("pdm_enabled requires the TicToc organization")
        if self.bypass is BypassMode.BYPASS90:
            if org not in (Organization.TIC, Organization.TICTOC):
                raise ValueError("Bypass90 requires the Tic or TicToc organization")
        elif self.bypass is not BypassMode.NONE and org is not Organization.TICTOC:
            raise ValueError(f"{self.bypass.value} requires the TicToc organization")
        for name in ("cache_lines", "memory_lines", "l3_ways", "hm_entries", "swp_entries"):
            if not _is_pow2(getattr(self, name)):
                raise ValueError(f"{name} must be a power of two")
        if self.memory_lines < self.cache_lines:
            raise ValueError("memory must be at least as large as the DRAM cache")
        if self.l3_lines % self.l3_ways or not _is_pow2(self.l3_lines // self.l3_ways):
            raise ValueError("l3_lines / l3_ways must be a power of two")
        if self.metadata_cache_entries < 1:
            raise ValueError("metadata_cache_entries must be positive")
        if self.uses_toc and self.memory_lines // self.cache_lines > 1 << TOC_TAG_BITS:
            # 6-bit TOC tags would alias
            raise ValueError("memory/cache ratio exceeds 64; TOC tags would alias")
        if not 0.0 <= self.sample_rate <= 1.0 or not 0.0 <= self.bypass_rate <= 1.0:
            raise ValueError("rates must lie in [0, 1]")

    @property
    def geometry(self) -> CacheGeometry:
        return CacheGeometry(self.cache_lines, max(1, self.cache_lines // LINES_PER_TOC_LINE))

    @property
    def uses_toc(self) -> bool:
        return self.organization in (Organization.TOC, Organization.TICTOC)

    @property
    def label(self) -> str:
        """Short human-readable name, e.g. ``TicToc+DCD+PDM+Bypass90``."""
        parts = [self.organization.value]
        if self.dcd_enabled:
            parts.append("DCD")
        if self.pdm_enabled:
            parts.append("PDM")
        if self.bypass is not BypassMode.NONE:
            parts.append(self.bypass.value)
        return "+".join(parts)

    def replace(self, **changes) -> "PolicyConfig":
        return dataclasses.replace(self, **changes)


def desk_config(**overrides) -> PolicyConfig:
    """A 1/1024-scale system: 4 MB DRAM cache, 64 MB memory, 256 KB L3.

    The metadata cache shrinks to 32 entries so that its coverage relative to
    the L3 and the DRAM cache stays comparable to the full-size system.
    """
    base = dict(cache_lines=1 << 16, memory_lines=1 << 20, l3_lines=1 << 12,
                metadata_cache_entries=32)
    base.update(overrides)
    return PolicyConfig(**base)


def _parse_enum(enum, text):
    text = str(text).strip()
    for member in enum:
        if text.lower() in (member.value.lower(), member.name.lower()):
            return member
    choices = ", ".join(m.value for m in enum)
    raise ValueError(f"unknown {enum.__name__} {text!r} (expected one of {choices})")


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        pairs[key] = value
    return pairs


def coerce_fields(cls, pairs: dict[str, str], source: str = "<config>") -> dict:
    """Convert string values to the declared field types of dataclass ``cls``."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in pairs.items():
        if key not in fields:
            raise ValueError(f"{source}: unknown key {key!r}")
        default = fields[key].default
        if isinstance(default, Enum):
            out[key] = _parse_enum(type(default), value)
        elif isinstance(default, bool):
            out[key] = _parse_bool(value)
        elif isinstance(default, int):
            out[key] = int(value, 0)
        elif isinstance(default, float):
            out[key] = float(value)
        else:
            out[key] = value
    return out


def load_config(path) -> PolicyConfig:
    path = Path(path)
    pairs = parse_key_values(path.read_text(), str(path))
    return PolicyConfig(**coerce_fields(PolicyConfig, pairs, str(path)))


def dump_config(config: PolicyConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def save_config(config: PolicyConfig, path) -> None:
    Path(path).write_text(dump_config(config))


# -- hashing and randomness ------------------------------------------------

def mix64(x: int) -> int:
    """splitmix64 finalizer; a cheap bijective 64-bit scrambler."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mix64` over a uint64 array."""
    with np.errstate(over="ignore"):
        x = x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for one named stream of a run seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def payload_token(addr: int, seq: int) -> int:
    """64-bit stand-in for the 64 B of data written by access ``seq``."""
    return mix64((addr << 24) ^ seq)


def initial_token(addr: int) -> int:
    """Contents of a never-written line.

    Negative, so it can never equal a :func:`payload_token`.
    """
    return -1 - addr


# -- SRAM storage accounting -------------------------------------------------

@dataclass(frozen=True)
class StorageReport:
    """Controller SRAM in bytes plus per-L3-line bits."""

    items: dict
    per_l3_line_bits: dict

    @property
    def total_bytes(self) -> float:
        return sum(self.items.values())

    @property
    def total_kb(self) -> float:
        return self.total_bytes / 1024

    @property
    def bits_per_l3_line(self) -> int:
        return sum(self.per_l3_line_bits.values())

    def summary(self) -> str:
        total = self.total_bytes
        if total >= 1 << 20:
            size = f"{total / (1 << 20):.0f} MB"
        else:
            size = f"{round(total / 1024)} KB"
        if self.bits_per_l3_line:
            size += f" + {self.bits_per_l3_line} bits/L3-line"
        return size


def storage_budget(config: PolicyConfig) -> StorageReport:
    org = config.organization
    items = {}
    bits = {}
    if org is Organization.IDEAL_SRAM:
        # one metadata byte (6 tag, dirty, valid) per DRAM-cache line
        items["tag_store"] = config.cache_lines
    if org in (Organization.TIC, Organization.TOC, Organization.TICTOC):
        items["hit_miss_predictor"] = config.hm_entries * 2 / 8
        bits["dcp"] = 1
    if config.uses_toc:
        items["metadata_cache"] = config.metadata_cache_entries * LINE_BYTES
    if org is Organization.TICTOC:
        # 9-bit PC tag + 3-bit counter per entry
        items["write_predictor"] = config.swp_entries * (9 + 3) / 8
        bits["dcd"] = 1
    return StorageReport(items, bits)
