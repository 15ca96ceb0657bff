from pathlib import Path

import numpy as np
import pytest

from emulator.surfaces import Surface, load_surface, parse_binding, save_surface
from errors import SurfaceError


@pytest.mark.parametrize(
    "text,expected",
    [
        ("in=data/x.png:image", ("in", Path("data/x.png"), None, "image")),
        ("img=a.raw:16x4:image", ("img", Path("a.raw"), (16, 4), "image")),
        ("buf=out.bin:64:buffer", ("buf", Path("out.bin"), (64, 1), "buffer")),
        ("buf=C:/tmp/out.bin:64:buffer", ("buf", Path("C:/tmp/out.bin"), (64, 1), "buffer")),
    ],
)
def test_parse_binding(text, expected):
    assert parse_binding(text) == expected


@pytest.mark.parametrize("text", ["nobinding", "x=f:12:texture", "x=f:abc:buffer", "x=f:4y4:image"])
def test_parse_binding_rejects(text):
    with pytest.raises(SurfaceError):
        parse_binding(text)


def test_surface_geometry_checks():
    with pytest.raises(SurfaceError, match="do not match"):
        Surface.buffer("b", 8, np.zeros(3, dtype=np.uint8))
    with pytest.raises(SurfaceError, match="empty"):
        Surface.image("i", 0, 4)
    with pytest.raises(SurfaceError, match="unknown kind"):
        Surface("s", "texture", np.zeros(4, dtype=np.uint8))
    assert Surface.image("i", 6, 2).geometry() == "6x2:image"
    assert Surface.buffer("b", 12).geometry() == "12:buffer"


def test_png_round_trip(tmp_path):
    img = Surface.image("img", 5, 3, np.arange(15, dtype=np.uint8) * 7)
    path = tmp_path / "img.png"
    save_surface(img, path)
    loaded = load_surface("img", path, None, "image")
    assert loaded.kind == "image"
    assert np.array_equal(loaded.data, img.data)
    with pytest.raises(SurfaceError, match="binding says"):
        load_surface("img", path, (3, 5), "image")


def test_raw_buffer_round_trip(tmp_path):
    buf = Surface.buffer("buf", 16, np.arange(4, dtype=np.int32))
    path = tmp_path / "buf.bin"
    save_surface(buf, path)
    assert path.read_bytes() == buf.tobytes()
    assert load_surface("buf", path, (16, 1), "buffer").tobytes() == buf.tobytes()


def test_missing_files(tmp_path):
    missing = tmp_path / "none.bin"
    with pytest.raises(SurfaceError, match="does not exist"):
        load_surface("buf", missing, (8, 1), "buffer")
    fresh = load_surface("buf", missing, (8, 1), "buffer", must_exist=False)
    assert fresh.tobytes() == bytes(8)
    with pytest.raises(SurfaceError, match="geometry is required"):
        load_surface("buf", missing, None, "buffer", must_exist=False)
