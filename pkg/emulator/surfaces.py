"""
Surfaces: the memory objects a kernel reads and writes.

An ``image`` surface is a 2-D row-major byte store (width in bytes x rows);
a ``buffer`` is a linear byte store. Files are raw little-endian bytes, or
PNG/PGM images for image surfaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from errors import SurfaceError

logger = logging.getLogger(__name__)

SURFACE_KINDS = ("image", "buffer")
IMAGE_SUFFIXES = {".png", ".pgm", ".bmp"}


@dataclass
class Surface:
    name: str
    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise SurfaceError(f"surface '{self.name}': unknown kind '{self.kind}'")
        if self.data.dtype != np.uint8:
            raise SurfaceError(f"surface '{self.name}': store must be bytes")
        if self.kind == "image" and self.data.ndim != 2:
            raise SurfaceError(f"surface '{self.name}': image store must be 2-D")
        if self.kind == "buffer" and self.data.ndim != 1:
            raise SurfaceError(f"surface '{self.name}': buffer store must be 1-D")

    @classmethod
    def image(cls, name: str, width_bytes: int, height: int, data=None) -> "Surface":
        if width_bytes < 1 or height < 1:
            raise SurfaceError(f"surface '{name}': image geometry {width_bytes}x{height} is empty")
        if data is None:
            store = np.zeros((height, width_bytes), dtype=np.uint8)
        else:
            raw = np.frombuffer(np.ascontiguousarray(data).tobytes(), dtype=np.uint8)
            if raw.size != width_bytes * height:
                raise SurfaceError(
                    f"surface '{name}': {raw.size} bytes do not match image geometry {width_bytes}x{height}"
                )
            store = raw.reshape(height, width_bytes).copy()
        return cls(name, "image", store)

    @classmethod
    def buffer(cls, name: str, nbytes: int, data=None) -> "Surface":
        if nbytes < 1:
            raise SurfaceError(f"surface '{name}': buffer of {nbytes} bytes")
        if data is None:
            store = np.zeros(nbytes, dtype=np.uint8)
        else:
            store = np.frombuffer(np.ascontiguousarray(data).tobytes(), dtype=np.uint8).copy()
            if store.size != nbytes:
                raise SurfaceError(f"surface '{name}': {store.size} bytes do not match buffer size {nbytes}")
        return cls(name, "buffer", store)

    @property
    def width_bytes(self) -> int:
        return int(self.data.shape[1]) if self.kind == "image" else int(self.data.size)

    @property
    def height(self) -> int:
        return int(self.data.shape[0]) if self.kind == "image" else 1

    @property
    def nbytes(self) -> int:
        return int(self.data.size)

    def geometry(self) -> str:
        if self.kind == "image":
            return f"{self.width_bytes}x{self.height}:image"
        return f"{self.nbytes}:buffer"

    def copy(self) -> "Surface":
        return Surface(self.name, self.kind, self.data.copy())

    def as_array(self, dtype) -> np.ndarray:
        return self.data.reshape(-1).view(dtype)

    def tobytes(self) -> bytes:
        return self.data.tobytes()


def parse_binding(text: str) -> tuple[str, Path, Optional[tuple[int, int]], str]:
    """Parse ``name=path:WxH:image`` or ``name=path:N:buffer``.

    The geometry may be omitted for image files Pillow can read.
    """
    if "=" not in text:
        raise SurfaceError(f"surface binding '{text}' must look like name=path:geometry:kind")
    name, _, rest = text.partition("=")
    parts = rest.rsplit(":", 2)
    if len(parts) == 3 and parts[2] in SURFACE_KINDS:
        path, geometry, kind = parts
    elif len(parts) >= 2 and parts[-1] in SURFACE_KINDS:
        path, geometry, kind = ":".join(parts[:-1]), "", parts[-1]
    else:
        raise SurfaceError(f"surface binding '{text}': kind must be one of {', '.join(SURFACE_KINDS)}")
    dims = None
    if geometry:
        try:
            if kind == "image":
                w, _, h = geometry.lower().partition("x")
                dims = (int(w), int(h))
            else:
                dims = (int(geometry), 1)
        except ValueError:
            raise SurfaceError(f"surface binding '{text}': bad geometry '{geometry}'") from None
    return name.strip(), Path(path), dims, kind


def load_surface(name: str, path: Path, dims: Optional[tuple[int, int]], kind: str, must_exist: bool = True) -> Surface:
    """Load a surface from disk; a missing file yields a zero surface when allowed."""
    path = Path(path)
    if kind == "image" and path.suffix.lower() in IMAGE_SUFFIXES and path.exists():
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("L") if img.mode not in ("L", "RGB", "RGBA") else img, dtype=np.uint8)
        store = pixels.reshape(pixels.shape[0], -1)
        if dims and (store.shape[1], store.shape[0]) != dims:
            raise SurfaceError(
                f"surface '{name}': image file is {store.shape[1]}x{store.shape[0]} bytes, binding says {dims[0]}x{dims[1]}"
            )
        logger.debug(f"Loaded image surface {name} from {path}")
        return Surface(name, "image", store.copy())
    if dims is None:
        raise SurfaceError(f"surface '{name}': geometry is required for {path}")
    if not path.exists():
        if must_exist:
            raise SurfaceError(f"surface '{name}': file {path} does not exist")
        raw = None
    else:
        raw = np.fromfile(path, dtype=np.uint8)
    if kind == "image":
        return Surface.image(name, dims[0], dims[1], raw)
    return Surface.buffer(name, dims[0], raw)


def save_surface(surface: Surface, path: Path) -> None:
    path = Path(path)
    if surface.kind == "image" and path.suffix.lower() in IMAGE_SUFFIXES:
        Image.fromarray(surface.data).save(path)
    else:
        path.write_bytes(surface.tobytes())
    logger.debug(f"Saved surface {surface.name} to {path}")
