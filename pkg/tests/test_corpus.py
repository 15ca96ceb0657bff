import numpy as np
import pytest

from corpus.cases import CASES, TRANSPOSE_SIZE, combine_chunks, get_case, linear_oracle, prefix_sum_oracle
from corpus.harness import build_case, check_case, compare_outputs, first_difference, run_case
from emulator.surfaces import Surface


@pytest.mark.parametrize("name", [case.name for case in CASES])
def test_case_matches_its_oracle_at_both_levels(name, corpus_dir):
    report = check_case(get_case(name), corpus_dir, seeds=2)
    assert report.passed, report.failure
    assert set(report.instructions) == {"O0", "O2"}
    assert report.executed["O2"] > 0


def test_every_kernel_file_belongs_to_a_case(corpus_dir):
    used = {kernel for case in CASES for kernel in case.kernels}
    assert used == {path.stem for path in corpus_dir.glob("*.cmk")}


def test_transpose2_tiles_come_out_transposed(corpus_dir):
    case = get_case("transpose2")
    src = np.arange(TRANSPOSE_SIZE * TRANSPOSE_SIZE, dtype=np.int32)
    inputs = {
        "src": Surface.image("src", TRANSPOSE_SIZE * 4, TRANSPOSE_SIZE, src),
        "dst": Surface.image("dst", TRANSPOSE_SIZE * 4, TRANSPOSE_SIZE),
    }
    outputs, counters = run_case(case, build_case(case, corpus_dir, "O2"), inputs)
    got = outputs["dst"].as_array(np.int32).reshape(TRANSPOSE_SIZE, TRANSPOSE_SIZE)
    assert np.array_equal(got, src.reshape(TRANSPOSE_SIZE, TRANSPOSE_SIZE).T)
    # the first tile [a,b;c,d] is stored as [a,c,b,d]
    assert got[:2, :2].reshape(-1).tolist() == [0, 16, 1, 17]
    assert counters["threads"] == (TRANSPOSE_SIZE // 2) ** 2


def test_linear_oracle_on_a_flat_image():
    flat = np.full((24, 48), 10, dtype=np.uint8)
    inputs = {"inBuf": Surface.image("inBuf", 48, 24, flat), "outBuf": Surface.image("outBuf", 48, 24)}
    # 90 * 0.1111 truncates to 9
    assert set(linear_oracle(inputs)["outBuf"]) == {9}


def test_combine_chunks():
    assert combine_chunks(np.array([1, 3, 6, 2, 5]), chunk=3).tolist() == [1, 3, 6, 8, 11]
    values = np.random.default_rng(3).integers(-1000, 1000, size=4096).astype(np.int32)
    chunked = np.frombuffer(prefix_sum_oracle({"data": Surface.buffer("data", values.size * 4, values)})["data"], dtype=np.int32)
    assert np.array_equal(combine_chunks(chunked), np.cumsum(values, dtype=np.int64).astype(np.int32))


def test_first_difference():
    assert first_difference(b"abc", b"abc") is None
    assert first_difference(b"abc", b"abd") == 2
    assert first_difference(b"abc", b"ab") == 2


def test_mismatches_name_surface_and_byte():
    case = get_case("histogram")
    actual = {"bins": Surface.buffer("bins", 8, np.array([0, 5], dtype=np.int32))}
    mismatch = compare_outputs(case, {"bins": bytes(8)}, actual, "the oracle")
    assert mismatch.offset == 4
    assert mismatch.describe() == "surface 'bins' differs from the oracle at byte 4: expected 0x00, got 0x05"
    assert compare_outputs(case, {"bins": actual["bins"].tobytes()}, actual, "the oracle") is None
