import numpy as np
import pytest

from elemtypes import B, D, DF, F, UB, UD, UW, W, binary_op, compare, convert, from_bits, promote, promote_unary, to_bits


def test_float_to_int_truncates_toward_zero():
    values = np.array([1.9, -1.9, 2.5, -0.5], dtype=np.float32)
    assert convert(values, D).tolist() == [1, -1, 2, 0]


def test_float_to_int_nan_and_inf_become_zero():
    values = np.array([np.nan, np.inf, -np.inf], dtype=np.float32)
    assert convert(values, D).tolist() == [0, 0, 0]


def test_float_to_narrow_int_wraps_after_truncation():
    assert convert(np.array([300.7], dtype=np.float32), UB).tolist() == [44]
    assert convert(np.array([-1.0], dtype=np.float32), UB).tolist() == [255]


def test_int_to_int_wraps():
    assert convert(np.array([0x1FF, -1], dtype=np.int32), UB).tolist() == [255, 255]
    assert convert(np.array([40000], dtype=np.int32), W).tolist() == [40000 - 65536]


def test_integer_add_wraps_to_result_type():
    r = binary_op("add", D, np.array([0x7FFFFFFF]), np.array([1]))
    assert r.tolist() == [-(1 << 31)]
    r = binary_op("mul", UD, np.array([0xFFFFFFFF], dtype=np.uint32), np.array([0xFFFFFFFF], dtype=np.uint32))
    assert r.tolist() == [1]


def test_division_truncates_and_zero_divisor_gives_zero():
    a = np.array([7, -7, 7, -7, 5])
    b = np.array([2, 2, -2, -2, 0])
    assert binary_op("div", D, a, b).tolist() == [3, -3, -3, 3, 0]
    assert binary_op("rem", D, a, b).tolist() == [1, -1, 1, -1, 0]


def test_shift_count_uses_low_five_bits():
    assert binary_op("shl", D, np.array([1]), np.array([33])).tolist() == [2]


def test_right_shift_is_arithmetic_for_signed_and_logical_for_unsigned():
    assert binary_op("shr", D, np.array([-8]), np.array([1])).tolist() == [-4]
    assert binary_op("shr", UD, np.array([0xFFFFFFF8], dtype=np.uint32), np.array([1], dtype=np.uint32)).tolist() == [0x7FFFFFFC]


def test_float_ops_reject_bitwise():
    with pytest.raises(ValueError):
        binary_op("and", F, np.array([1.0]), np.array([2.0]))


def test_compare_yields_ushort_flags():
    r = compare("lt", D, np.array([1, 5]), np.array([2, 2]))
    assert r.dtype == UW.dtype
    assert r.tolist() == [1, 0]


def test_promotion_follows_c_rules():
    assert promote(UB, W) == D
    assert promote(D, UD) == UD
    assert promote(UD, F) == F
    assert promote(F, DF) == DF
    assert promote_unary(B) == D
    assert promote_unary(UD) == UD


def test_bits_round_trip_through_immediates():
    assert to_bits(-1, D) == 0xFFFFFFFF
    assert to_bits(1.0, F) == 0x3F800000
    assert from_bits(0x3F800000, F) == np.float32(1.0)
    assert from_bits(0xFFFF, W) == -1
