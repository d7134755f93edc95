"""Image file I/O: binary PPM (P6, maxval 255) plus 8-bit RGB PNG.

Loaded images are float arrays in [0, 1]; the library computes in
channel-first [3, H, W], files store H x W x RGB.  Saving rounds half-up
to 8 bits, so a save/load round trip moves a channel value by at most
1/510.
"""

from __future__ import annotations

import os

import numpy as np

from . import config


class ImageFormatError(ValueError):
    pass


def to_chw(img_hwc: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img_hwc.transpose(2, 0, 1))


def to_hwc(img_chw: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img_chw.transpose(1, 2, 0))


def _ppm_tokens(data: bytes, count: int) -> tuple:
    """First header tokens, skipping whitespace and # comments; returns
    (tokens, offset just past the single whitespace after the last one)."""
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ImageFormatError("truncated header")
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or not data[i : i + 1].isspace():
        raise ImageFormatError("missing whitespace after maxval")
    return tokens, i + 1


def load_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P6":
        raise ImageFormatError(f"{path}: not a binary PPM (P6)")
    tokens, offset = _ppm_tokens(data, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise ImageFormatError(f"{path}: bad header field: {e}") from None
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval} (only 255)")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    need = width * height * 3
    raw = data[offset : offset + need]
    if len(raw) != need:
        raise ImageFormatError(f"{path}: truncated pixel data ({len(raw)} of {need} bytes)")
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    return (arr.astype(config.dtype()) / 255.0).clip(0.0, 1.0)


def save_ppm(img_hwc: np.ndarray, path) -> None:
    h, w, c = img_hwc.shape
    if c != 3:
        raise ImageFormatError(f"PPM writer needs 3 channels, got {c}")
    quant = np.floor(np.clip(img_hwc, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(quant.tobytes())


def _load_png(path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise ImageFormatError("PNG support requires Pillow") from None
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return (arr.astype(config.dtype()) / 255.0).clip(0.0, 1.0)


def _save_png(img_hwc: np.ndarray, path) -> None:
    try:
        from PIL import Image
    except ImportError:
        raise ImageFormatError("PNG support requires Pillow") from None
    quant = np.floor(np.clip(img_hwc, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(quant, mode="RGB").save(path, format="PNG")


def load_image(path) -> np.ndarray:
    """H x W x 3 float array in [0, 1]; dispatches on file content."""
    with open(path, "rb") as f:
        magic = f.read(8)
    if magic[:2] == b"P6":
        return load_ppm(path)
    if magic[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise ImageFormatError(f"{path}: unsupported image format")


def save_image(img_hwc: np.ndarray, path) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        _save_png(img_hwc, path)
    elif ext in (".ppm", ""):
        save_ppm(img_hwc, path)
    else:
        raise ImageFormatError(f"unsupported output extension {ext!r} (use .ppm or .png)")
