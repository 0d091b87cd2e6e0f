from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from tictoc.llc import EventKind, L3Cache


def test_read_hit_updates_lru():
    l3 = L3Cache(4, 2)  # 2 sets x 2 ways
    for a in (0, 2):
        l3.access(a, 1)
        l3.fill(a, False, False, None)
    assert l3.access(0, 1) == ()
    ev = l3.access(4, 1)
    assert ev[1].addr == 2  # 0 was touched more recently


def test_miss_into_free_way():
    l3 = L3Cache(4, 2)
    ev = l3.access(6, 9)
    assert [e.kind for e in ev] == [EventKind.READ_MISS]


def test_write_miss_evicts_dirty_victim():
    l3 = L3Cache(4, 2)
    for a in (0, 2):
        l3.access(a, 1, True, a + 100)
        l3.fill(a, True, False, None)
    ev = l3.access(4, 7, True, 5)
    assert [e.kind for e in ev] == [EventKind.WRITE_MISS, EventKind.DIRTY_EVICTION]
    assert ev[1].addr == 0 and ev[1].payload == 100 and ev[1].dcp


def test_fill_rules():
    l3 = L3Cache(16, 4)
    for addr, present, dirty, dcp, dcd in ((1, True, True, True, True),
                                            (2, False, False, False, False),
                                            (3, True, False, True, False)):
        l3.access(addr, 0)
        line = l3.fill(addr, present, dirty, 0)
        assert (line.dcp, line.dcd) == (dcp, dcd)
        assert line.bypassed == (not present)


def test_fill_needs_outstanding_miss():
    l3 = L3Cache(16, 4)
    with pytest.raises(RuntimeError):
        l3.fill(3, True, False, 0)
    l3.access(3, 0)
    with pytest.raises(RuntimeError):
        l3.reserve(3, 0)


def test_snoop_clears_presence():
    l3 = L3Cache(16, 4)
    l3.access(3, 0)
    l3.fill(3, True, True, 0)
    l3.clear_presence(3)
    assert not l3.line(3).dcp and not l3.line(3).dcd
    l3.clear_presence(99)  # absent lines are ignored


def test_geometry_checks():
    with pytest.raises(ValueError):
        L3Cache(10, 4)
    with pytest.raises(ValueError):
        L3Cache(24, 4)


ops = st.lists(st.tuples(st.integers(0, 63), st.booleans(), st.booleans(), st.booleans(),
                         st.integers(0, 10)), max_size=300)


@given(ops)
@settings(max_examples=60)
def test_dcd_implies_dcp_and_dirty_evictions_need_writes(seq):
    l3 = L3Cache(16, 2)
    writes_since_fill = Counter()
    for addr, is_write, present, dirty, snoop in seq:
        if snoop == 0:
            l3.clear_presence(addr)
        events = l3.access(addr, 0, is_write, 1)
        for ev in events[1:]:
            if ev.kind is EventKind.DIRTY_EVICTION:
                assert writes_since_fill[ev.addr] >= 1
            writes_since_fill[ev.addr] = 0
        if events:
            l3.fill(addr, present, dirty, 0)
        if is_write:
            writes_since_fill[addr] += 1
        assert all(ln.dcp for ln in l3 if ln.dcd)


def test_infinite_l3_never_evicts():
    l3 = L3Cache(1 << 12, 1 << 12)
    for i in range(2000):
        addr = (i * 7919) % 4000
        for ev in l3.access(addr, 0, i % 3 == 0, i):
            assert ev.kind in (EventKind.READ_MISS, EventKind.WRITE_MISS)
            l3.fill(addr, False, False, 0)


def test_evict_dirty_is_lazy():
    l3 = L3Cache(8, 2)
    for a in range(4):
        l3.access(a, 0, True, a)
        l3.fill(a, True, False, None)
    gen = l3.evict_dirty()
    first = next(gen)
    l3.clear_presence(3)  # a snoop caused by handling the first eviction
    rest = list(gen)
    assert first.addr == 0
    assert [e.dcp for e in rest if e.addr == 3] == [False]
    assert len(list(l3)) == 0
