import pytest
from hypothesis import given, strategies as st

from tictoc import PolicyConfig, desk_config, load_config, save_config, storage_budget
from tictoc.core import (CacheGeometry, cache_index, initial_token, mix64, mix64_array,
                         make_rng, parse_key_values, payload_token, toc_line_of)

import numpy as np

GEOM = CacheGeometry()


def test_cache_index_examples():
    assert cache_index(0, GEOM) == 0
    assert cache_index(1 << 26, GEOM) == 0
    assert cache_index((1 << 26) + 5, GEOM) == 5


@given(st.integers(0, 1 << 40))
def test_cache_index_in_range(addr):
    assert 0 <= cache_index(addr, GEOM) < GEOM.cache_lines


def test_cache_index_covers_every_set():
    g = CacheGeometry(cache_lines=256, metadata_region_lines=4)
    assert {cache_index(a, g) for a in range(1024)} == set(range(256))


def test_toc_line_of():
    assert toc_line_of(0) == (0, 0)
    assert toc_line_of(63) == (0, 63)
    assert toc_line_of(64) == (1, 0)


def test_toc_line_groups_of_64():
    groups = {}
    for s in range(64 * 10):
        line, slot = toc_line_of(s)
        groups.setdefault(line, set()).add(slot)
    assert all(v == set(range(64)) for v in groups.values())


def test_storage_tictoc_default():
    r = storage_budget(PolicyConfig())
    assert r.total_bytes == sum(r.items.values())
    assert round(r.total_kb) == 34
    assert r.bits_per_l3_line == 2
    assert r.summary() == "34 KB + 2 bits/L3-line"


def test_storage_tic_and_sram():
    tic = storage_budget(PolicyConfig(organization="Tic"))
    assert tic.total_kb == 1.0 and tic.bits_per_l3_line == 1
    sram = storage_budget(PolicyConfig(organization="IdealSram"))
    assert sram.total_bytes == 64 << 20
    assert sram.summary() == "64 MB"


def test_config_rejects_bad_combinations():
    with pytest.raises(ValueError):
        PolicyConfig(organization="Tic", dcd_enabled=True)
    with pytest.raises(ValueError):
        PolicyConfig(organization="Toc", bypass="Bypass90")
    with pytest.raises(ValueError):
        PolicyConfig(organization="Tic", bypass="WriteAllocate")
    with pytest.raises(ValueError):
        PolicyConfig(cache_lines=1000)
    with pytest.raises(ValueError):
        PolicyConfig(cache_lines=1 << 10, memory_lines=1 << 17)  # 128x would alias TOC tags
    with pytest.raises(ValueError):
        PolicyConfig(organization="Banana")


def test_config_accepts_strings_and_labels():
    c = PolicyConfig(organization="tictoc", bypass="bypass90", dcd_enabled=True)
    assert c.label == "TicToc+DCD+Bypass90"
    assert c.replace(dcd_enabled=False).label == "TicToc+Bypass90"
    assert PolicyConfig(organization="IdealSram").label == "IdealSram"


def test_config_file_round_trip(tmp_path):
    c = desk_config(organization="TicToc", pdm_enabled=True, rng_seed=9)
    save_config(c, tmp_path / "c.cfg")
    assert load_config(tmp_path / "c.cfg") == c


def test_config_file_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("organization = Tic\nwhat = 3\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_config(p)
    with pytest.raises(ValueError, match="2"):
        parse_key_values("a = 1\njunk\n")


def test_rng_is_reproducible():
    a = make_rng(5, 1).random(4)
    assert np.array_equal(a, make_rng(5, 1).random(4))
    assert not np.array_equal(a, make_rng(5, 2).random(4))


@given(st.lists(st.integers(0, 2**64 - 1), max_size=20))
def test_mix64_array_matches_scalar(xs):
    arr = mix64_array(np.array(xs, dtype=np.uint64))
    assert arr.tolist() == [mix64(x) for x in xs]


@given(st.integers(0, 1 << 36), st.integers(1, 1 << 40))
def test_tokens_never_look_unwritten(addr, seq):
    assert payload_token(addr, seq) >= 0 > initial_token(addr)
