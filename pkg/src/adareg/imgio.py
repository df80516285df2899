"""Reading and writing grayscale images and Middlebury ``.flo`` files.

Images are normalized to [0, 1] on read. Binary PGM (P5) is handled
here directly; PNG goes through Pillow.
"""

from __future__ import annotations

import os
import struct

import numpy as np

__all__ = [
    "FLO_MAGIC",
    "FlowFormatError",
    "ImageFormatError",
    "flow_to_color",
    "make_colorwheel",
    "read_flo",
    "read_image",
    "write_color_image",
    "write_flo",
    "write_image",
]

FLO_MAGIC = b"PIEH"
MAX_DIM = 1 << 20


class ImageFormatError(ValueError):
    """Malformed or unsupported image file; ``offset`` is the failing byte."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class FlowFormatError(ValueError):
    pass


def _parse_pgm(buf):
    if buf[:2] != b"P5":
        raise ImageFormatError("not a binary PGM (P5) file", 0)
    pos = 2
    fields = []
    while len(fields) < 3:
        # whitespace and comments between header tokens
        while pos < len(buf) and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                nl = buf.find(b"\n", pos)
                pos = len(buf) if nl < 0 else nl + 1
            else:
                pos += 1
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise ImageFormatError("truncated or malformed PGM header", pos)
        fields.append(int(buf[start:pos]))
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ImageFormatError("truncated PGM header", pos)
    pos += 1
    w, h, maxval = fields
    if not (0 < w <= MAX_DIM and 0 < h <= MAX_DIM):
        raise ImageFormatError(f"unsupported PGM dimensions {w}x{h}", 2)
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"invalid PGM maxval {maxval}", pos - 1)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(buf) - pos < need:
        raise ImageFormatError(f"truncated PGM data: need {need} bytes, have {len(buf) - pos}", len(buf))
    data = np.frombuffer(buf, dtype=dtype, count=w * h, offset=pos)
    return data.reshape(h, w).astype(np.float64) / maxval


def read_image(path):
    """Read a grayscale image as floats in [0, 1].

    PGM (P5) is parsed directly. PNG is read with Pillow, and color images
    are converted with luma weights 0.299, 0.587, 0.114.
    """
    ext = os.path.splitext(str(path))[1].lower()
    with open(path, "rb") as fh:
        buf = fh.read()
    if ext == ".pgm" or buf[:2] == b"P5":
        return _parse_pgm(buf)
    if ext == ".png":
        from PIL import Image
        import io

        try:
            img = Image.open(io.BytesIO(buf))
            img.load()
        except Exception as exc:  # Pillow raises a variety of types
            raise ImageFormatError(f"cannot decode PNG: {exc}") from exc
        if img.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(img, dtype=np.float64)
            return arr / (65535.0 if arr.max() > 255 else 255.0)
        if img.mode in ("L", "LA", "1"):
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
        return arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    raise ImageFormatError(f"unsupported image format {ext!r}")


def _to_bytes(field):
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError("image must be 2-D")
    return np.round(np.clip(field, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_image(path, field):
    """Write a [0, 1] field as 8-bit PGM or PNG; values are clipped first."""
    ext = os.path.splitext(str(path))[1].lower()
    data = _to_bytes(field)
    if ext == ".pgm":
        h, w = data.shape
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(data.tobytes())
    elif ext == ".png":
        from PIL import Image

        Image.fromarray(data, mode="L").save(path, format="PNG")
    else:
        raise ImageFormatError(f"unsupported image format {ext!r}")


def write_color_image(path, rgb):
    """Write an ``(H, W, 3)`` uint8 array as an RGB PNG."""
    from PIL import Image

    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 array")
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def read_flo(path):
    """Read a Middlebury ``.flo`` file into a ``(2, H, W)`` float32 array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 12:
        raise FlowFormatError("file shorter than the 12-byte header")
    if buf[:4] != FLO_MAGIC:
        raise FlowFormatError(f"bad magic {buf[:4]!r}, expected {FLO_MAGIC!r}")
    w, h = struct.unpack("<ii", buf[4:12])
    if not (0 < w <= MAX_DIM and 0 < h <= MAX_DIM):
        raise FlowFormatError(f"invalid dimensions {w}x{h}")
    need = 12 + 8 * w * h
    if len(buf) != need:
        raise FlowFormatError(f"size mismatch: expected {need} bytes, got {len(buf)}")
    data = np.frombuffer(buf, dtype="<f4", offset=12).reshape(h, w, 2)
    return np.ascontiguousarray(data.transpose(2, 0, 1)).astype(np.float32)


def write_flo(path, flow):
    """Write a ``(2, H, W)`` flow as little-endian float32 ``.flo``."""
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[0] != 2:
        raise ValueError("flow must have shape (2, H, W)")
    _, h, w = flow.shape
    with open(path, "wb") as fh:
        fh.write(FLO_MAGIC)
        fh.write(struct.pack("<ii", w, h))
        fh.write(np.ascontiguousarray(flow.transpose(1, 2, 0), dtype="<f4").tobytes())


def make_colorwheel():
    """The 55-entry Middlebury color wheel (RY, YG, GC, CB, BM, MR)."""
    segments = [(15, (255, 0, 0), (255, 255, 0)), (6, (255, 255, 0), (0, 255, 0)),
                (4, (0, 255, 0), (0, 255, 255)), (11, (0, 255, 255), (0, 0, 255)),
                (13, (0, 0, 255), (255, 0, 255)), (6, (255, 0, 255), (255, 0, 0))]
    rows = []
    for n, start, end in segments:
        t = np.arange(n) / n
        seg = np.empty((n, 3))
        for ch in range(3):
            a, b = start[ch], end[ch]
            seg[:, ch] = a if a == b else (np.floor(255 * t) if b > a else 255 - np.floor(255 * t))
        rows.append(seg)
    return np.concatenate(rows)


def flow_to_color(flow, max_magnitude=None):
    """Color-code a flow field; returns an ``(H, W, 3)`` uint8 RGB image.

    Hue encodes direction, saturation the magnitude divided by
    ``max_magnitude`` (default: the 95th percentile of the known vectors).
    Zero flow is white; vectors beyond the normalization are darkened.
    """
    flow = np.asarray(flow, dtype=np.float64)
    u, v = flow[0].copy(), flow[1].copy()
    unknown = ~(np.isfinite(u) & np.isfinite(v)) | (np.abs(u) > 1e9) | (np.abs(v) > 1e9)
    u[unknown] = 0.0
    v[unknown] = 0.0
    rad = np.hypot(u, v)
    if max_magnitude is None:
        known = rad[~unknown]
        max_magnitude = float(np.percentile(known, 95)) if known.size else 0.0
    if not max_magnitude > 0:
        max_magnitude = 1.0
    u, v, rad = u / max_magnitude, v / max_magnitude, rad / max_magnitude

    wheel = make_colorwheel()
    ncols = wheel.shape[0]
    a = np.arctan2(-v, -u) / np.pi
    fk = (a + 1) / 2 * (ncols - 1)
    k0 = np.floor(fk).astype(int)
    k1 = (k0 + 1) % ncols
    frac = fk - k0
    img = np.empty(u.shape + (3,))
    for ch in range(3):
        col = ((1 - frac) * wheel[k0, ch] + frac * wheel[k1, ch]) / 255.0
        inside = rad <= 1
        col = np.where(inside, 1 - rad * (1 - col), col * 0.75)
        img[..., ch] = col
    img[unknown] = 0.0
    return np.floor(255 * img + 0.5).astype(np.uint8)
