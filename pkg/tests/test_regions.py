import numpy as np
import pytest

from elemtypes import UB, W
from regionir.regions import (
    RegionSpec,
    ReplicateSpec,
    SelectSpec,
    check_region,
    compose_indices,
    find_region,
    rdregion_eval,
    replicate_eval,
    wrregion_eval,
)

PROPERTY_SPECS = 1200


def test_replicate_duplicates_pairs():
    v = np.array([10, 11, 12, 13], dtype=np.int32)
    assert replicate_eval(v, ReplicateSpec(2, 1, 2, 0, 0)).tolist() == [10, 10, 11, 11]
    assert replicate_eval(v, ReplicateSpec(2, 1, 2, 0, 2)).tolist() == [12, 12, 13, 13]


def test_replicate_blocks_with_vertical_stride():
    v = np.arange(8, dtype=np.int32)
    assert replicate_eval(v, ReplicateSpec(2, 4, 4, 0, 2)).tolist() == [2, 2, 2, 2, 6, 6, 6, 6]


def test_matrix_select_to_region():
    # 6x24 window at row 1, column 3 of an 8x32 byte matrix
    region = SelectSpec(6, 1, 24, 1, 1, 3).to_region(32, 1)
    assert (region.vstride, region.width, region.hstride, region.offset_bytes, region.length) == (32, 24, 1, 35, 144)
    m = np.arange(256, dtype=np.uint16).astype(np.uint8)
    got = rdregion_eval(m, region)
    want = m.reshape(8, 32)[1:7, 3:27].reshape(-1)
    assert np.array_equal(got, want)


def test_vector_select_with_stride():
    v = np.arange(16, dtype=np.int32)
    region = SelectSpec.vector(4, 2, 1).to_region(16, 4)
    assert rdregion_eval(v, region).tolist() == [1, 3, 5, 7]


def test_select_out_of_bounds_does_not_fit():
    assert not SelectSpec.vector(8, 2, 2).fits(1, 16)
    assert SelectSpec.vector(8, 2, 1).fits(1, 16)


def test_rdregion_reinterprets_through_element_type():
    v = np.array([0x01020304], dtype=np.int32)
    assert rdregion_eval(v, RegionSpec.identity(4), UB).tolist() == [4, 3, 2, 1]
    assert rdregion_eval(v, RegionSpec(0, 1, 0, 2, 1), W).tolist() == [0x0102]


def test_wrregion_honours_predicate_and_lanes():
    old = np.zeros(8, dtype=np.int32)
    new = np.array([1, 2, 3, 4], dtype=np.int32)
    spec = RegionSpec(0, 4, 2, 0, 4)
    assert wrregion_eval(old, new, spec).tolist() == [1, 0, 2, 0, 3, 0, 4, 0]
    assert wrregion_eval(old, new, spec, predicate=np.array([1, 0, 1, 0])).tolist() == [1, 0, 0, 0, 3, 0, 0, 0]
    lanes = np.array([False, True, True, False])
    assert wrregion_eval(old, new, spec, lanes=lanes).tolist() == [0, 0, 2, 0, 3, 0, 0, 0]


def test_wrregion_broadcasts_scalars():
    old = np.zeros(4, dtype=np.int32)
    assert wrregion_eval(old, np.array([7], dtype=np.int32), RegionSpec.identity(4)).tolist() == [7, 7, 7, 7]


def test_check_region_reports_problems():
    assert check_region(RegionSpec(0, 4, 1, 0, 4), 4, 4) == []
    assert check_region(RegionSpec(0, 4, 1, 4, 4), 4, 4)
    assert check_region(RegionSpec(0, 3, 1, 0, 4), 4, 8)
    assert check_region(RegionSpec(0, 4, 1, 2, 4), 4, 8)
    assert check_region(RegionSpec(0, 4, 0, 0, 4), 4, 8, write=True)
    assert check_region(RegionSpec(0, 4, 0, 0, 4), 4, 8) == []


def test_out_of_bounds_read_raises():
    with pytest.raises(ValueError):
        rdregion_eval(np.zeros(4, dtype=np.int32), RegionSpec(0, 4, 2, 0, 4))


def _random_spec(rng, source_length):
    width = int(rng.choice([1, 2, 4, 8, 16]))
    rows = int(rng.integers(1, 5))
    hstride = int(rng.integers(0, 4))
    vstride = int(rng.integers(0, 20))
    span = (rows - 1) * vstride + (width - 1) * hstride + 1
    if span > source_length:
        return None
    offset = int(rng.integers(0, source_length - span + 1))
    return RegionSpec(vstride, width, hstride, offset * 4, rows * width)


def _property_specs():
    rng = np.random.default_rng(20240611)
    specs = []
    while len(specs) < PROPERTY_SPECS:
        spec = _random_spec(rng, 64)
        if spec is not None:
            specs.append(spec)
    return specs


def test_region_reads_follow_the_index_formula():
    src = np.arange(64, dtype=np.int32) * 3 + 1
    for spec in _property_specs():
        got = rdregion_eval(src, spec)
        for k in range(spec.length):
            assert got[k] == src[spec.offset_bytes // 4 + (k // spec.width) * spec.vstride + (k % spec.width) * spec.hstride]


def test_region_writes_touch_exactly_the_region():
    old = np.full(64, -1, dtype=np.int32)
    for spec in _writable_specs():
        idx = spec.indices(4)
        new = np.arange(spec.length, dtype=np.int32)
        out = wrregion_eval(old, new, spec)
        assert np.array_equal(out[idx], new)
        untouched = np.setdiff1d(np.arange(64), idx)
        assert np.all(out[untouched] == -1)


def test_found_regions_reproduce_their_indices():
    for spec in _property_specs():
        idx = spec.indices(4)
        found = find_region(idx, 4)
        assert found is not None
        assert np.array_equal(found.indices(4), idx)


def test_composed_reads_equal_nested_reads():
    rng = np.random.default_rng(7)
    src = np.arange(64, dtype=np.int32)
    for inner in _property_specs()[:300]:
        mid = rdregion_eval(src, inner)
        outer = _random_spec(rng, mid.size)
        if outer is None:
            continue
        nested = rdregion_eval(mid, outer)
        composed = compose_indices(outer.indices(4), inner.indices(4))
        assert np.array_equal(src[composed], nested)


def _writable(spec) -> bool:
    return spec is not None and not check_region(spec, 4, 64, write=True)


def _writable_specs():
    rng = np.random.default_rng(20240612)
    specs = []
    while len(specs) < PROPERTY_SPECS:
        spec = _random_spec(rng, 64)
        if _writable(spec):
            specs.append(spec)
    return specs


def _disjoint_partner(rng, first):
    used = set(first.indices(4).tolist())
    for _ in range(50):
        spec = _random_spec(rng, 64)
        if _writable(spec) and not used & set(spec.indices(4).tolist()):
            return spec
    free = sorted(set(range(64)) - used)
    if not free:
        return None
    return RegionSpec(0, 1, 0, int(rng.choice(free)) * 4, 1)


def test_region_examples_from_the_select_docs():
    v = np.arange(100, 108, dtype=np.int32)
    assert rdregion_eval(v, RegionSpec(0, 4, 2, 4, 4)).tolist() == [101, 103, 105, 107]

    m = np.arange(32, dtype=np.int32)
    got = rdregion_eval(m, SelectSpec(2, 2, 2, 4, 1, 2).to_region(8, 4))
    assert [divmod(int(x), 8) for x in got] == [(1, 2), (1, 6), (3, 2), (3, 6)]


def test_replicate_identity():
    v = np.arange(5, dtype=np.int32)
    assert replicate_eval(v, ReplicateSpec(1, 0, 5, 1, 0)).tolist() == v.tolist()


def test_wrregion_strided_write_and_full_mask():
    old = np.zeros(8, dtype=np.int32)
    new = np.full(4, 9, dtype=np.int32)
    spec = RegionSpec(0, 4, 2, 0, 4)
    assert wrregion_eval(old, new, spec).tolist() == [9, 0, 9, 0, 9, 0, 9, 0]
    assert wrregion_eval(old, new, spec, predicate=np.zeros(4)).tolist() == [0] * 8


def test_write_of_a_read_is_identity():
    old = np.arange(64, dtype=np.int32) * 7 - 100
    for spec in _writable_specs():
        assert np.array_equal(wrregion_eval(old, rdregion_eval(old, spec), spec), old)


def test_read_of_a_write_returns_the_written_values():
    old = np.zeros(64, dtype=np.int32)
    for spec in _writable_specs():
        new = np.arange(spec.length, dtype=np.int32) + 1000
        assert np.array_equal(rdregion_eval(wrregion_eval(old, new, spec), spec), new)


def test_disjoint_writes_commute():
    rng = np.random.default_rng(31)
    old = np.full(64, -5, dtype=np.int32)
    checked = 0
    for first in _writable_specs():
        second = _disjoint_partner(rng, first)
        if second is None:
            continue
        assert np.intersect1d(first.indices(4), second.indices(4)).size == 0
        a = np.arange(first.length, dtype=np.int32)
        b = np.arange(second.length, dtype=np.int32) + 500
        one = wrregion_eval(wrregion_eval(old, a, first), b, second)
        two = wrregion_eval(wrregion_eval(old, b, second), a, first)
        assert np.array_equal(one, two)
        checked += 1
    assert checked >= 1000
