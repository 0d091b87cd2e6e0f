import numpy as np
from hypothesis import given, settings, strategies as st

from tictoc.predictors import (HitMissPredictor, WritePredictor, is_sampled, sampled_mask,
                               sampled_sets, signature)

PC_A = 0x400010
PC_B = 0x400abc


def test_fresh_counter_predicts_hit():
    assert HitMissPredictor().predict(PC_A)


def test_two_misses_flip_to_miss():
    hm = HitMissPredictor()
    hm.counters[hm.index(PC_A)] = 2
    hm.train(PC_A, False)
    hm.train(PC_A, False)
    assert not hm.predict(PC_A)


def test_alternating_oscillates():
    hm = HitMissPredictor()
    i = hm.index(PC_A)
    hm.counters[i] = 2
    seen = set()
    for k in range(20):
        hm.train(PC_A, k % 2 == 1)
        seen.add(hm.counters[i])
    assert seen <= {1, 2}
    assert len(seen) == 2


@given(st.lists(st.tuples(st.integers(0, 1 << 30), st.booleans()), max_size=300))
def test_hm_counters_saturate(events):
    hm = HitMissPredictor(64)
    for pc, hit in events:
        hm.train(pc, hit)
    assert all(0 <= c <= 3 for c in hm.counters)


def _cycle(swp, s, pc, written):
    swp.observe_install(s, pc)
    if written:
        swp.observe_write(s)
    swp.learn_on_evict(s)


def test_swp_learning():
    swp = WritePredictor(sampled={7})
    assert not swp.predict(PC_A)
    _cycle(swp, 7, PC_A, True)
    assert swp.counters[signature(PC_A)] == 1 and swp.predict(PC_A)
    _cycle(swp, 7, PC_A, True)
    assert swp.counters[signature(PC_A)] == 2
    _cycle(swp, 7, PC_B, False)
    assert swp.counters[signature(PC_B)] == 0 and not swp.predict(PC_B)


def test_swp_decay_to_zero():
    swp = WritePredictor(sampled={1})
    _cycle(swp, 1, PC_A, True)
    _cycle(swp, 1, PC_A, False)
    assert not swp.predict(PC_A)


def test_unsampled_sets_do_not_train():
    swp = WritePredictor(sampled={1})
    _cycle(swp, 2, PC_A, True)
    assert not swp.predict(PC_A)


def test_bypassed_lines_train():
    swp = WritePredictor(sampled={4})
    swp.learn_bypassed(4, PC_A, True)
    assert swp.predict(PC_A)


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 1 << 32), st.integers(0, 3)),
                max_size=400))
@settings(max_examples=60)
def test_swp_counters_saturate(events):
    swp = WritePredictor(sampled=set(range(8)))
    for s, pc, op in events:
        if op == 0:
            swp.observe_install(s, pc)
        elif op == 1:
            swp.observe_write(s)
        elif op == 2:
            swp.learn_on_evict(s)
        else:
            swp.learn_bypassed(s, pc, bool(pc & 1))
    assert all(0 <= c <= WritePredictor.COUNTER_MAX for c in swp.counters)


def test_sampling_is_deterministic():
    idx = np.arange(5000, dtype=np.uint64)
    m = sampled_mask(idx, 3)
    assert m.tolist() == [is_sampled(i, 3) for i in range(5000)]
    assert sampled_sets(5000, 3) == set(np.flatnonzero(m).tolist())
    assert sampled_sets(5000, 3) != sampled_sets(5000, 4)


def test_sampled_fraction_over_full_cache():
    n = 1 << 26
    chunk = 1 << 22
    total = 0
    for start in range(0, n, chunk):
        total += int(sampled_mask(np.arange(start, start + chunk, dtype=np.uint64), 0).sum())
    assert abs(total / n - 0.01) <= 0.002
