"""Raster file I/O.

Two families of formats:

* 8-bit grayscale / RGB PNG and TIFF for stains and visualizations
  (via Pillow).
* A portable float raster ("FRAS") for parameter maps and score maps:

  ===========  =======================================
  bytes 0-3    magic ``b"FRAS"``
  byte 4       version, u8, currently 1
  byte 5       dtype code, u8: 1 = float32, 2 = float64
  bytes 6-9    height, u32 little-endian
  bytes 10-13  width, u32 little-endian
  bytes 14-17  channels, u32 little-endian
  rest         raw row-major (H, W, C) payload, little-endian
  ===========  =======================================

Single-channel files round-trip as 2-D arrays.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import RasterFormatError

_MAGIC = b"FRAS"
_VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}


def write_raster(path: str | Path, data: np.ndarray, dtype: str = "f64") -> None:
    """Write a float raster. dtype is "f32" or "f64"."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise RasterFormatError(f"raster must be 2-D or 3-D, got shape {a.shape}")
    if dtype not in ("f32", "f64"):
        raise RasterFormatError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    code = 1 if dtype == "f32" else 2
    out_dtype = _DTYPES[code]
    h, w, c = a.shape
    header = _MAGIC + struct.pack("<BBIII", _VERSION, code, h, w, c)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(a, dtype=out_dtype).tobytes())


def read_raster(path: str | Path) -> np.ndarray:
    """Read a FRAS float raster as float64, (H, W) or (H, W, C)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 18:
        raise RasterFormatError("file too short for a FRAS header")
    if blob[:4] != _MAGIC:
        raise RasterFormatError(f"bad magic {blob[:4]!r}, expected {_MAGIC!r}")
    version, code, h, w, c = struct.unpack("<BBIII", blob[4:18])
    if version != _VERSION:
        raise RasterFormatError(f"unsupported version {version}")
    if code not in _DTYPES:
        raise RasterFormatError(f"unknown dtype code {code}")
    if h < 1 or w < 1 or c < 1:
        raise RasterFormatError(f"invalid dimensions height={h} width={w} channels={c}")
    dt = _DTYPES[code]
    expected = h * w * c * dt.itemsize
    payload = blob[18:]
    if len(payload) != expected:
        raise RasterFormatError(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )
    a = np.frombuffer(payload, dtype=dt).reshape(h, w, c).astype(np.float64)
    return a[:, :, 0] if c == 1 else a


def write_image(path: str | Path, data: np.ndarray, scale: float | None = None) -> None:
    """Write an 8-bit PNG/TIFF (format from the file suffix).

    Float input is multiplied by ``scale`` (default 255 for data in [0, 1],
    1 otherwise), rounded and clipped to [0, 255].
    """
    a = np.asarray(data, dtype=np.float64)
    if scale is None:
        scale = 255.0 if a.size and np.nanmax(np.abs(a)) <= 1.0 + 1e-9 else 1.0
    a8 = np.clip(np.round(a * scale), 0, 255).astype(np.uint8)
    if a8.ndim == 3 and a8.shape[2] == 1:
        a8 = a8[:, :, 0]
    Image.fromarray(a8).save(path)


def read_image(path: str | Path) -> np.ndarray:
    """Read PNG/TIFF as float64 in its stored 0..255 range, grayscale or RGB."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:  # Pillow raises a mix of OSError subclasses
        raise RasterFormatError(f"cannot read image {path}: {exc}") from exc
    if img.mode not in ("L", "RGB", "I;16", "I"):
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.float64)


def write_label_png(path: str | Path, labels: np.ndarray) -> None:
    """Write an instance label mask as 16-bit grayscale PNG."""
    a = np.asarray(labels)
    if a.min() < 0 or a.max() > 65535:
        raise RasterFormatError("labels must fit in uint16")
    Image.fromarray(a.astype(np.uint16)).save(path)


def read_label_png(path: str | Path) -> np.ndarray:
    """Read a 16-bit (or 8-bit) label PNG as an integer array."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise RasterFormatError(f"cannot read label image {path}: {exc}") from exc
    return np.asarray(img).astype(np.int64)


def load_any(path: str | Path) -> np.ndarray:
    """Read either a FRAS raster or an 8-bit image, by sniffing the magic."""
    p = Path(path)
    with open(p, "rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return read_raster(p)
    return read_image(p)
