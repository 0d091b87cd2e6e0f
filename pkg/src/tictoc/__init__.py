"""Trace-driven model of a DRAM cache in front of 3D-XPoint memory."""
from .accounting import BandwidthLedger, Category, Device
from .channel import ChannelModel, RunStats, compare_modes, replay
from .core import (BypassMode, CacheGeometry, ChannelMode, Organization, PolicyConfig,
                   desk_config, load_config, save_config, storage_budget)
from .harness import (ExperimentPlan, OracleMemory, OracleVerdict, RunResult, Simulator,
                      emit_report, run, simulate, sweep_mdc_size)
from .llc import EventKind, L3Cache, L3Event
from .policies import IntegrityError, make_controller
from .traces import MemAccess, Pattern, Trace, TraceSpec, generate, read_trace, write_trace

__version__ = "0.1.0"
