from collections import Counter

import numpy as np
import pytest

from backend import parse_visa
from elemtypes import D
from emulator import memory
from emulator.dispatch import DispatchSpec, dispatch
from emulator.execute import jump_table, run_thread
from emulator.surfaces import Surface
from emulator.thread import ThreadState
from errors import EmulatorFault, SurfaceError

ADD_FIVE = """
.kernel add_five
.surface buf buffer
.grf 2
    oword_read (1|NM) @buf r0.0<1>:ub 0x0:d 0x0:uw 0x20:uw
    add (8|M0) r1.0<1>:d r0.0<8;8,1>:d 0x5:d
    oword_write (1|NM) @buf null 0x0:d 0x0:uw 0x20:uw r1.0<1;1,0>:ub
"""

BRANCHY = """
.kernel branchy
.surface buf buffer
.grf 2
    oword_read (1|NM) @buf r0.0<1>:ub 0x0:d 0x0:uw 0x20:uw
    cmp.lt (8|M0) r1.0<1>:uw r0.0<8;8,1>:d 0x4:d
    simd_if (8|M0) r1.0<8;8,1>:uw
    mov (8|M0) r0.0<1>:d 0x64:d
    simd_else (8|M0)
    mov (8|M0) r0.0<1>:d 0xFFFFFFFF:d
    simd_endif (8|M0)
    oword_write (1|NM) @buf null 0x0:d 0x0:uw 0x20:uw r0.0<1;1,0>:ub
"""

COUNT = """
.kernel count
.surface hist buffer
.grf 1
    mov (1|NM) r0.0<1>:ud 0x0:ud
    atomic.inc (1|NM) @hist null r0.0<0;1,0>:ud
"""

STAMP = """
.kernel stamp
.surface out buffer
.arg bias ud
.grf 1
    mul (1|NM) r0.0<1>:ud %thread_x:ud 0x4:ud
    add (1|NM) r0.4<1>:ud %thread_x:ud %arg.bias:ud
    scatter_write (1|NM) @out null 0x0:ud r0.0<0;1,0>:ud r0.4<0;1,0>:ud
"""


def _ints(values):
    return Surface.buffer("buf", 4 * len(values), np.array(values, dtype=np.int32))


def test_block_read_compute_write():
    buf = _ints(range(8))
    run_thread(parse_visa(ADD_FIVE), {"buf": buf})
    assert buf.as_array(np.int32).tolist() == list(range(5, 13))


def test_simd_if_runs_each_branch_on_its_lanes():
    buf = _ints(range(8))
    state = run_thread(parse_visa(BRANCHY), {"buf": buf})
    assert buf.as_array(np.int32).tolist() == [100] * 4 + [-1] * 4
    assert len(state.mask_stack) == 1
    assert state.frames == []


def test_empty_then_branch_is_skipped():
    buf = _ints(range(10, 18))
    stats = Counter()
    run_thread(parse_visa(BRANCHY), {"buf": buf}, stats=stats)
    assert buf.as_array(np.int32).tolist() == [-1] * 8
    assert stats["simd.skipped"] == 1
    # the then-branch mov never executes
    assert stats["instructions"] == 7


def test_jump_table_pairs_structured_markers():
    program = parse_visa(BRANCHY)
    assert jump_table(program.instructions) == {2: 4, 4: 6}


def test_mask_lanes_slice_the_mask_word():
    state = ThreadState()
    state.mask_stack.append(0b1010_0101)
    assert state.lanes(0, 4).tolist() == [True, False, True, False]
    assert state.lanes(4, 4).tolist() == [False, True, False, True]


def test_atomic_counts_are_independent_of_thread_order():
    program = parse_visa(COUNT)
    forward = Surface.buffer("hist", 16)
    _, stats = dispatch(program, DispatchSpec((3, 2), {"hist": forward}))
    backward = Surface.buffer("hist", 16)
    order = [(x, y) for y in reversed(range(2)) for x in reversed(range(3))]
    dispatch(program, DispatchSpec((3, 2), {"hist": backward}, order=order))
    assert forward.as_array(np.uint32)[0] == 6
    assert forward.tobytes() == backward.tobytes()
    assert stats["threads"] == 6
    assert stats["memory.atomics"] == 6


def test_threads_see_their_coordinates_and_arguments():
    out = Surface.buffer("out", 16)
    dispatch(parse_visa(STAMP), DispatchSpec((4, 1), {"out": out}, {"bias": 10}))
    assert out.as_array(np.uint32).tolist() == [10, 11, 12, 13]


def test_dispatch_rejects_bad_bindings():
    program = parse_visa(COUNT)
    with pytest.raises(SurfaceError, match="not bound"):
        dispatch(program, DispatchSpec((1, 1), {}))
    with pytest.raises(SurfaceError, match="image"):
        dispatch(program, DispatchSpec((1, 1), {"hist": Surface.image("hist", 4, 4)}))
    with pytest.raises(SurfaceError, match="not a parameter"):
        dispatch(program, DispatchSpec((1, 1), {"hist": Surface.buffer("hist", 16), "x": Surface.buffer("x", 16)}))
    with pytest.raises(SurfaceError, match="empty"):
        dispatch(program, DispatchSpec((0, 1), {"hist": Surface.buffer("hist", 16)}))


def test_register_overrun_faults_with_location():
    program = parse_visa(".kernel k\n.grf 128\n    mov (8|M0) r127.16<1>:d 0x1:d\n")
    with pytest.raises(EmulatorFault) as info:
        run_thread(program, {}, (2, 1))
    assert info.value.thread == (2, 1)
    assert info.value.index == 0
    assert "reaches past r127" in str(info.value)


def test_memory_faults_carry_the_thread():
    program = parse_visa(COUNT.replace("0x0:ud", "0x40:ud"))
    with pytest.raises(EmulatorFault, match=r"thread \(0,0\), instruction 1: lane 0"):
        run_thread(program, {"hist": Surface.buffer("hist", 16)})


def test_media_reads_clamp_to_the_edge():
    img = Surface.image("img", 4, 3, np.arange(12, dtype=np.uint8))
    block = memory.media_block_read(img, 2, 1, 4, 3)
    assert block.reshape(3, 4).tolist() == [[6, 7, 7, 7], [10, 11, 11, 11], [10, 11, 11, 11]]
    block = memory.media_block_read(img, -2, -1, 3, 1)
    assert block.tolist() == [0, 0, 0]


def test_media_writes_clip_to_the_image():
    img = Surface.image("img", 4, 3)
    memory.media_block_write(img, 2, 2, 4, 2, np.full(8, 9, dtype=np.uint8))
    assert img.data.tolist() == [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 9, 9]]


def test_media_block_limits():
    img = Surface.image("img", 128, 32)
    with pytest.raises(SurfaceError):
        memory.media_block_read(img, 0, 0, 65, 1)
    with pytest.raises(SurfaceError):
        memory.media_block_read(img, 0, 0, 8, 17)
    assert memory.media_read_rows(img, 0, 0, 8, 20).size == 160
    with pytest.raises(SurfaceError, match="image surface"):
        memory.media_block_read(Surface.buffer("b", 16), 0, 0, 4, 1)


def test_oword_accesses_are_aligned_and_in_bounds():
    buf = Surface.buffer("b", 64, np.arange(64, dtype=np.uint8))
    assert memory.oword_read(buf, 16, 16).tolist() == list(range(16, 32))
    with pytest.raises(SurfaceError, match="aligned"):
        memory.oword_read(buf, 8, 16)
    with pytest.raises(SurfaceError, match="outside"):
        memory.oword_read(buf, 48, 32)
    with pytest.raises(SurfaceError, match="sizes"):
        memory.oword_read(buf, 0, 24)
    assert list(memory.oword_pieces(48)) == [(0, 16), (16, 16), (32, 16)]
    assert list(memory.oword_pieces(160)) == [(0, 128), (128, 32)]


def test_scattered_reads_zero_inactive_lanes():
    buf = _ints([5, 6, 7, 8])
    got = memory.scatter_read(buf, 0, [12, 0, 400, 4], D, mask=[1, 1, 0, 1])
    assert got.tolist() == [8, 5, 0, 6]


def test_scattered_writes_resolve_in_lane_order():
    buf = _ints([0, 0])
    memory.scatter_write(buf, 4, [0, 0, -4], np.array([1, 2, 3], dtype=np.int32))
    assert buf.as_array(np.int32).tolist() == [3, 2]


def test_atomic_lanes_apply_in_ascending_order():
    buf = _ints([0, 5])
    assert memory.atomic(buf, "inc", [0] * 16).tolist() == list(range(16))
    assert memory.atomic(buf, "max", [4, 4], [3, 9]).tolist() == [5, 5]
    assert buf.as_array(np.int32).tolist() == [16, 9]


def test_atomic_operations_return_old_values():
    buf = _ints([5, -3, 7])
    old = memory.atomic(buf, "add", [0, 0, 0], 2)
    assert old.tolist() == [5, 7, 9]
    assert memory.atomic(buf, "imin", [4], -10).tolist() == [2**32 - 3]
    assert memory.atomic(buf, "cmpxchg", [8, 8], 7, 1).tolist() == [7, 1]
    assert memory.atomic(buf, "dec", [0], mask=[0]).tolist() == [0]
    assert buf.as_array(np.int32).tolist() == [11, -10, 1]
    with pytest.raises(SurfaceError, match="aligned"):
        memory.atomic(buf, "inc", [2])
    with pytest.raises(SurfaceError, match="unknown atomic"):
        memory.atomic(buf, "nand", [0])