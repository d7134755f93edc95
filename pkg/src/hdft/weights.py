"""Binary weight files: named float tensors behind a fixed little-endian
layout.

Layout: magic ``HDFT``, u32 format version (1), u32 tensor count, then per
tensor {u32 name length, utf-8 name, u8 dtype code (0 = f32, 1 = f64),
u8 rank, u32 dims, raw little-endian scalars in C order}.  Round trips are
byte-exact.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"HDFT"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_OF = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class FormatError(ValueError):
    """Malformed or truncated weight file."""


def save_params(params: dict, path) -> None:
    names = list(params)
    if len(set(names)) != len(names):
        raise FormatError("duplicate tensor names")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(names)))
        for name in names:
            arr = np.ascontiguousarray(params[name])
            dt = np.dtype(arr.dtype)
            if dt not in _CODE_OF:
                raise FormatError(f"tensor {name!r} has unsupported dtype {dt}")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<BB", _CODE_OF[dt], arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<I", d))
            f.write(arr.astype(_DTYPE_CODES[_CODE_OF[dt]], copy=False).tobytes())


def _read(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file while reading {what}")
    return buf


def load_params(path) -> dict:
    params: dict = {}
    with open(path, "rb") as f:
        if _read(f, 4, "magic") != MAGIC:
            raise FormatError("bad magic; not a weight file")
        version, count = struct.unpack("<II", _read(f, 8, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported format version {version}")
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read(f, 4, "name length"))
            name = _read(f, name_len, "name").decode("utf-8")
            if name in params:
                raise FormatError(f"duplicate tensor name {name!r}")
            code, rank = struct.unpack("<BB", _read(f, 2, "tensor header"))
            if code not in _DTYPE_CODES:
                raise FormatError(f"unknown dtype code {code}")
            dims = struct.unpack(f"<{rank}I", _read(f, 4 * rank, "dims")) if rank else ()
            dt = _DTYPE_CODES[code]
            n = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read(f, n * dt.itemsize, f"data of {name!r}")
            params[name] = np.frombuffer(raw, dtype=dt).reshape(dims).copy()
        if f.read(1):
            raise FormatError("trailing bytes after last tensor")
    return params
