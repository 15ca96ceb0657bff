"""
Bundled corpus cases: which kernels to launch, how to build seeded inputs,
and a straight scalar oracle for the expected surface contents.

Oracles only use plain loops over numpy byte stores; they never touch the
compiler, the region-IR evaluator or the emulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np

from emulator.surfaces import Surface

Surfaces = Dict[str, Surface]


@dataclass(frozen=True)
class Launch:
    kernel: str
    grid: Tuple[int, int]
    args: Dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusCase:
    name: str
    launches: Tuple[Launch, ...]
    make_inputs: Callable[[np.random.Generator], Surfaces]
    oracle: Callable[[Surfaces], Dict[str, bytes]]
    outputs: Tuple[str, ...]

    @property
    def kernels(self) -> List[str]:
        return list(dict.fromkeys(launch.kernel for launch in self.launches))

    def inputs(self, seed: int) -> Surfaces:
        return self.make_inputs(np.random.default_rng(seed))

    def expected(self, inputs: Surfaces) -> Dict[str, bytes]:
        return self.oracle({name: s.copy() for name, s in inputs.items()})


def _wrap32(value: int) -> int:
    value &= 0xFFFFFFFF
    return value - (1 << 32) if value & 0x80000000 else value


def _ints(rng: np.random.Generator, n: int, low: int = -(1 << 31), high: int = 1 << 31) -> np.ndarray:
    return rng.integers(low, high, size=n, dtype=np.int64).astype(np.int32)


# -- linear filter -------------------------------------------------------------

LINEAR_WIDTH, LINEAR_HEIGHT = 48, 24
LINEAR_TAPS = ((1, 3), (0, 0), (0, 3), (0, 6), (1, 0), (1, 6), (2, 0), (2, 3), (2, 6))


def _linear_inputs(rng: np.random.Generator) -> Surfaces:
    pixels = rng.integers(0, 256, size=(LINEAR_HEIGHT, LINEAR_WIDTH), dtype=np.uint8)
    return {
        "inBuf": Surface.image("inBuf", LINEAR_WIDTH, LINEAR_HEIGHT, pixels),
        "outBuf": Surface.image("outBuf", LINEAR_WIDTH, LINEAR_HEIGHT),
    }


def linear_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    """3x3 box filter with edge clamping, float32 sums and truncation back to bytes."""
    src = surfaces["inBuf"].data
    height, width = src.shape
    out = np.zeros_like(src)
    weight = np.float32(0.1111)
    for y in range(height):
        for x in range(width):
            total = np.float32(0)
            for dy, dx in LINEAR_TAPS:
                yy = min(y + dy, height - 1)
                xx = min(x + dx, width - 1)
                total = np.float32(total + np.float32(src[yy, xx]))
            out[y, x] = int(np.float32(total * weight)) & 0xFF
    return {"outBuf": out.tobytes()}


# -- transpose -----------------------------------------------------------------

TRANSPOSE_SIZE = 16


def _transpose_inputs(rng: np.random.Generator) -> Surfaces:
    values = _ints(rng, TRANSPOSE_SIZE * TRANSPOSE_SIZE)
    width = TRANSPOSE_SIZE * 4
    return {
        "src": Surface.image("src", width, TRANSPOSE_SIZE, values),
        "dst": Surface.image("dst", width, TRANSPOSE_SIZE),
    }


def transpose_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    src = surfaces["src"].data.reshape(-1).view(np.int32).reshape(TRANSPOSE_SIZE, TRANSPOSE_SIZE)
    out = np.zeros_like(src)
    for r in range(TRANSPOSE_SIZE):
        for c in range(TRANSPOSE_SIZE):
            out[c, r] = src[r, c]
    return {"dst": out.tobytes()}


def _transpose_case(n: int) -> CorpusCase:
    tiles = TRANSPOSE_SIZE // n
    return CorpusCase(
        f"transpose{n}",
        (Launch(f"transpose{n}", (tiles, tiles)),),
        _transpose_inputs,
        transpose_oracle,
        ("dst",),
    )


# -- prefix sum ----------------------------------------------------------------

PREFIX_COUNT = 4096
PREFIX_CHUNK = 256


def _prefix_inputs(rng: np.random.Generator) -> Surfaces:
    return {"data": Surface.buffer("data", PREFIX_COUNT * 4, _ints(rng, PREFIX_COUNT))}


def prefix_sum_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    """Inclusive running sum restarted at every chunk boundary."""
    values = surfaces["data"].as_array(np.int32)
    out = np.zeros(PREFIX_COUNT, dtype=np.int32)
    for start in range(0, PREFIX_COUNT, PREFIX_CHUNK):
        running = 0
        for i in range(start, start + PREFIX_CHUNK):
            running = _wrap32(running + int(values[i]))
            out[i] = running
    return {"data": out.tobytes()}


def combine_chunks(chunked: np.ndarray, chunk: int = PREFIX_CHUNK) -> np.ndarray:
    """Host pass turning per-chunk inclusive scans into a scan of the whole array."""
    values = np.asarray(chunked, dtype=np.int32).reshape(-1)
    out = np.zeros_like(values)
    carry = 0
    for start in range(0, values.size, chunk):
        for i in range(start, min(start + chunk, values.size)):
            out[i] = _wrap32(int(values[i]) + carry)
        carry = int(out[min(start + chunk, values.size) - 1])
    return out


# -- bitonic sort --------------------------------------------------------------

BITONIC_COUNT = 1024
BITONIC_THREADS = (4, 1)

BITONIC_LAUNCHES = (
    Launch("bitonic_local_sort", BITONIC_THREADS),
    Launch("bitonic_global_merge", BITONIC_THREADS, {"k": 512, "j": 256}),
    Launch("bitonic_local_merge", BITONIC_THREADS, {"k": 512}),
    Launch("bitonic_global_merge", BITONIC_THREADS, {"k": 1024, "j": 512}),
    Launch("bitonic_global_merge", BITONIC_THREADS, {"k": 1024, "j": 256}),
    Launch("bitonic_local_merge", BITONIC_THREADS, {"k": 1024}),
)


def _bitonic_inputs(rng: np.random.Generator) -> Surfaces:
    return {"data": Surface.buffer("data", BITONIC_COUNT * 4, _ints(rng, BITONIC_COUNT))}


def bitonic_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    values = [int(v) for v in surfaces["data"].as_array(np.int32)]
    return {"data": np.array(sorted(values), dtype=np.int32).tobytes()}


# -- histogram -----------------------------------------------------------------

HISTOGRAM_SIZE = 64
HISTOGRAM_BINS = 256


def _histogram_inputs(rng: np.random.Generator) -> Surfaces:
    # skewed towards a few values so atomic lanes collide
    pixels = np.minimum(rng.geometric(0.05, size=(HISTOGRAM_SIZE, HISTOGRAM_SIZE)), 255).astype(np.uint8)
    return {
        "image": Surface.image("image", HISTOGRAM_SIZE, HISTOGRAM_SIZE, pixels),
        "bins": Surface.buffer("bins", HISTOGRAM_BINS * 4),
    }


def histogram_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    counts = surfaces["bins"].as_array(np.uint32).copy()
    for row in surfaces["image"].data:
        for value in row:
            counts[int(value)] += 1
    return {"bins": counts.tobytes()}


# -- simd divergence -----------------------------------------------------------

DIVERGENCE_THREADS = 4
DIVERGENCE_THRESHOLD = 5


def _divergence_inputs(rng: np.random.Generator) -> Surfaces:
    n = DIVERGENCE_THREADS * 16
    return {
        "data": Surface.buffer("data", n * 4, _ints(rng, n, -40, 41)),
        "marks": Surface.buffer("marks", n * 4, _ints(rng, n)),
        "flags": Surface.buffer("flags", DIVERGENCE_THREADS * 16),
    }


def simd_divergence_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    data = surfaces["data"].as_array(np.int32).copy()
    marks = surfaces["marks"].as_array(np.int32).copy()
    flags = np.zeros(DIVERGENCE_THREADS * 4, dtype=np.int32)
    for t in range(DIVERGENCE_THREADS):
        lanes = range(t * 16, t * 16 + 16)
        above = [int(data[i]) > DIVERGENCE_THRESHOLD for i in lanes]
        flags[t * 4] = int(any(above))
        flags[t * 4 + 1] = int(all(above))
        for i in lanes:
            v = int(data[i])
            if v > DIVERGENCE_THRESHOLD:
                if v & 1 == 0:
                    r = 2 * v + 1
                else:
                    r = 2 * v - 1
                    marks[i] = v
            else:
                r = -v
            data[i] = _wrap32(r)
    return {"data": data.tobytes(), "marks": marks.tobytes(), "flags": flags.tobytes()}


# -- region features -----------------------------------------------------------

FEATURE_THREADS = 4
FEATURE_MERGE_BITS = 0xA5A5


def _feature_inputs(rng: np.random.Generator) -> Surfaces:
    n = FEATURE_THREADS * 64
    return {
        "src": Surface.buffer("src", n, rng.integers(0, 256, size=n, dtype=np.uint8)),
        "dst": Surface.buffer("dst", n),
    }


def region_features_oracle(surfaces: Surfaces) -> Dict[str, bytes]:
    src = surfaces["src"].data
    out = np.zeros_like(src)
    for t in range(FEATURE_THREADS):
        chunk = src[t * 64 : t * 64 + 64]
        words = [int(w) for w in chunk.view(np.int32)]
        rep = [words[1 + 4 * (i // 4)] for i in range(16)]
        picked = [words[int(chunk[4 * i]) % 16] for i in range(16)]
        mixed = []
        for i in range(16):
            value = rep[i] if FEATURE_MERGE_BITS >> i & 1 else picked[i]
            if picked[i] > rep[i]:
                value = _wrap32(words[i] + 1)
            mixed.append(_wrap32(value + words[i % 4]))
        halves = np.array(mixed, dtype=np.int32).view(np.int16).copy()
        source = halves.copy()
        for m in range(8):
            halves[1 + 4 * m] = source[3 + 4 * m]
        out[t * 64 : t * 64 + 64] = halves.view(np.uint8)
    return {"dst": out.tobytes()}


CASES: Tuple[CorpusCase, ...] = (
    CorpusCase("linear", (Launch("linear", (2, 4)),), _linear_inputs, linear_oracle, ("outBuf",)),
    _transpose_case(2),
    _transpose_case(4),
    _transpose_case(8),
    _transpose_case(16),
    CorpusCase("prefix_sum", (Launch("prefix_sum", (PREFIX_COUNT // PREFIX_CHUNK, 1)),), _prefix_inputs, prefix_sum_oracle, ("data",)),
    CorpusCase("bitonic", BITONIC_LAUNCHES, _bitonic_inputs, bitonic_oracle, ("data",)),
    CorpusCase("histogram", (Launch("histogram", (1, 4)),), _histogram_inputs, histogram_oracle, ("bins",)),
    CorpusCase(
        "simd_divergence",
        (Launch("simd_divergence", (DIVERGENCE_THREADS, 1), {"threshold": DIVERGENCE_THRESHOLD}),),
        _divergence_inputs,
        simd_divergence_oracle,
        ("data", "marks", "flags"),
    ),
    CorpusCase(
        "region_features",
        (Launch("region_features", (FEATURE_THREADS, 1)),),
        _feature_inputs,
        region_features_oracle,
        ("dst",),
    ),
)


def get_case(name: str) -> CorpusCase:
    for case in CASES:
        if case.name == name:
            return case
    raise KeyError(f"no corpus case named '{name}'")
