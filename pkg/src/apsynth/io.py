"""Raster I/O: grayscale PNG images and the CAFP binary tensor format.

CAFP layout (all little-endian):
    magic   4 bytes  b"CAFP"
    version u16      currently 1
    dtype   u8       1=f32  2=f64  3=c64  4=c128
    rank    u8
    dims    rank * u32
    payload row-major values, prod(dims) * itemsize bytes
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["load_png", "save_png", "read_tensor", "write_tensor"]

# PNG -----------------------------------------------------------------------

_LUMA = (0.299, 0.587, 0.114)


def load_png(path) -> np.ndarray:
    """Load a grayscale image scaled to [0, 1] float64.

    8- and 16-bit grayscale are read directly; color inputs are converted
    with luma weights 0.299/0.587/0.114. Other bit depths are rejected.
    """
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise IOError(f"cannot read image {path!r}: {exc}") from exc
    if img.mode == "P":
        img = img.convert("RGB")
    if img.mode in ("RGB", "RGBA"):
        arr = np.asarray(img, dtype=np.float64)[..., :3] / 255.0
        return arr @ np.array(_LUMA)
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    if img.mode in ("I;16", "I"):
        arr = np.asarray(img, dtype=np.float64)
        if arr.max(initial=0.0) > 65535:
            raise IOError(f"unsupported bit depth in {path!r} (mode {img.mode})")
        return arr / 65535.0
    raise IOError(f"unsupported image mode {img.mode!r} in {path!r}")


def save_png(image: np.ndarray, path, bit_depth: int = 8) -> None:
    """Save a [0, 1] image as 8- or 16-bit grayscale PNG."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("save_png expects a 2-D image")
    image = np.clip(image, 0.0, 1.0)
    if bit_depth == 8:
        pil = Image.fromarray(np.round(image * 255.0).astype(np.uint8), mode="L")
    elif bit_depth == 16:
        pil = Image.fromarray(np.round(image * 65535.0).astype(np.uint16))
    else:
        raise ValueError("bit_depth must be 8 or 16")
    pil.save(Path(path), format="PNG")


# CAFP ----------------------------------------------------------------------

_MAGIC = b"CAFP"
_VERSION = 1
_CODE_TO_DTYPE = {1: "<f4", 2: "<f8", 3: "<c8", 4: "<c16"}
_KIND_TO_CODE = {"<f4": 1, "<f8": 2, "<c8": 3, "<c16": 4}


class TensorFormatError(IOError):
    """Raised for malformed CAFP files or unsupported dtypes."""


def _dtype_code(dtype: np.dtype) -> int:
    key = np.dtype(dtype).newbyteorder("<").str
    if key not in _KIND_TO_CODE:
        raise TensorFormatError(f"dtype {dtype} not representable (f32/f64/c64/c128 only)")
    return _KIND_TO_CODE[key]


def write_tensor(tensor: np.ndarray, path) -> None:
    """Write an array as a CAFP file (byte-exact round trip)."""
    tensor = np.asarray(tensor)
    code = _dtype_code(tensor.dtype)
    dims = tensor.shape
    header = _MAGIC + struct.pack("<HBB", _VERSION, code, len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    payload = np.ascontiguousarray(tensor, dtype=_CODE_TO_DTYPE[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    """Read a CAFP file back into a numpy array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 or raw[:4] != _MAGIC:
        raise TensorFormatError(f"{path!r}: bad magic (not a CAFP file)")
    version, code, rank = struct.unpack_from("<HBB", raw, 4)
    if version != _VERSION:
        raise TensorFormatError(f"{path!r}: unsupported version {version}")
    if code not in _CODE_TO_DTYPE:
        raise TensorFormatError(f"{path!r}: unknown dtype code {code}")
    off = 8
    if len(raw) < off + 4 * rank:
        raise TensorFormatError(f"{path!r}: truncated header")
    dims = struct.unpack_from(f"<{rank}I", raw, off)
    off += 4 * rank
    dtype = np.dtype(_CODE_TO_DTYPE[code])
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    payload = raw[off:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path!r}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()
