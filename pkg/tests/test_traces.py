from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tictoc import Pattern, Trace, TraceSpec, generate, read_trace, write_trace
from tictoc.traces import MemAccess, Kind, TraceFormatError, is_writer_pc, load_trace_spec


def test_stream_degenerate():
    t = generate(TraceSpec("Stream", 1000, 1000, 0.0, 1))
    assert t.addrs.tolist() == list(range(1000))
    assert not t.writes.any()


def test_write_once_all_writes():
    t = generate(TraceSpec("WriteOnce", 64, 64, 1.0, 8))
    assert t.writes.all()
    assert sorted(t.addrs.tolist()) == list(range(64))


@given(st.sampled_from(list(Pattern)), st.integers(0, 2**32), st.sampled_from([0.0, 0.2, 0.7]))
@settings(max_examples=30, deadline=None)
def test_generators_are_pure(pattern, seed, wf):
    if pattern is Pattern.WRITE_REPEAT and wf == 0.0:
        wf = 0.5
    spec = TraceSpec(pattern, 4096, 3000, wf, 16, seed)
    assert generate(spec) == generate(spec)


@given(st.integers(0, 1000), st.integers(64, 5000), st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_write_once_writes_each_line_at_most_once(seed, footprint, wf):
    t = generate(TraceSpec("WriteOnce", footprint, 3 * footprint, wf, 16, seed))
    counts = Counter(t.addrs[t.writes].tolist())
    assert max(counts.values(), default=0) <= 1


def test_page_local_bursts_are_sequential():
    t = generate(TraceSpec("PageLocal", 1 << 16, 50_000, 0.3, 64, 2))
    d = np.diff(t.addrs.astype(np.int64)).reshape(-1)
    within = np.ones(len(d), dtype=bool)
    within[63::64] = False  # pairs that straddle two bursts
    assert (d[within] == 1).mean() >= 0.9


@pytest.mark.parametrize("pattern", list(Pattern))
def test_pcs_have_fixed_write_behaviour(pattern):
    t = generate(TraceSpec(pattern, 8192, 20_000, 0.3, 16, 4))
    for pc, w in zip(t.pcs.tolist(), t.writes.tolist()):
        assert is_writer_pc(pc) == w
    assert len(set(t.pcs.tolist())) <= 64
    assert int(t.addrs.max()) < 8192


def test_mix_uses_every_part():
    t = generate(TraceSpec("Mix", 1 << 14, 20_000, 0.3, 16, 1))
    assert len(set(t.pcs.tolist())) > 20


def test_spec_validation():
    with pytest.raises(ValueError):
        TraceSpec("Stream", 10, 10, 1.5)
    with pytest.raises(ValueError):
        TraceSpec("Stream", 10, 10, 0.0, 20)
    with pytest.raises(ValueError):
        TraceSpec("WriteRepeat", 1024, 10, 0.0, 8)
    with pytest.raises(ValueError):
        TraceSpec("Zigzag")


def test_empty_file(tmp_path):
    p = tmp_path / "e.trace"
    p.write_text("")
    assert len(read_trace(p)) == 0


def test_three_records(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("400000 a R\n400004 b W\n400000 c R\n")
    t = read_trace(p)
    assert list(t) == [MemAccess(0x400000, 10, Kind.READ), MemAccess(0x400004, 11, Kind.WRITE),
                       MemAccess(0x400000, 12, Kind.READ)]


def test_round_trip_large(tmp_path):
    t = generate(TraceSpec("Mix", 1 << 16, 100_000, 0.3, 16, 8))
    write_trace(t, tmp_path / "m.trace")
    assert read_trace(tmp_path / "m.trace") == t
    write_trace(read_trace(tmp_path / "m.trace"), tmp_path / "n.trace")
    assert (tmp_path / "m.trace").read_bytes() == (tmp_path / "n.trace").read_bytes()


def test_malformed_record_reports_position(tmp_path):
    p = tmp_path / "bad.trace"
    p.write_text("1 2 R\n1 2 X\n")
    with pytest.raises(TraceFormatError) as e:
        read_trace(p)
    assert e.value.record == 2


def test_address_out_of_range(tmp_path):
    p = tmp_path / "big.trace"
    p.write_text("1 ffff R\n")
    with pytest.raises(TraceFormatError):
        read_trace(p, memory_lines=1024)


def test_spec_file(tmp_path):
    p = tmp_path / "s.spec"
    p.write_text("pattern = PageLocal\nfootprint_lines = 2048\nseed = 3  # comment\n")
    assert load_trace_spec(p) == TraceSpec("PageLocal", 2048, seed=3)


def test_slicing_and_concat():
    t = generate(TraceSpec("Stream", 100, 50))
    assert t[:20].concat(t[20:]) == t
    assert isinstance(t[3], MemAccess)
