"""Flow-field wire format and color-wheel visualization.

File layout: 4-byte magic "PIEH", then width and height as little-endian
int32, then row-major interleaved (u, v) little-endian float32 samples.
Invalid pixels are stored with the sentinel value 1e10 in both components
(any stored magnitude above 1e9 marks a pixel invalid) and are restored to
the validity mask on read.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from illusionflow.percept import FlowField

MAGIC = b"PIEH"
INVALID_SENTINEL = 1e10
INVALID_THRESHOLD = 1e9


class FlowFormatError(ValueError):
    """Malformed flow file or non-representable field."""


def write_flow(f: FlowField, path) -> None:
    """Serialize a flow field; finite values only, float32 on disk."""
    if not (np.isfinite(f.u).all() and np.isfinite(f.v).all()):
        raise FlowFormatError("flow contains non-finite values")
    if np.any(np.abs(f.u[f.valid]) > INVALID_THRESHOLD) or np.any(np.abs(f.v[f.valid]) > INVALID_THRESHOLD):
        raise FlowFormatError(f"valid flow values exceed the invalid-pixel threshold {INVALID_THRESHOLD:g}")
    h, w = f.u.shape
    body = np.empty((h, w, 2), dtype="<f4")
    body[:, :, 0] = f.u
    body[:, :, 1] = f.v
    body[~f.valid] = INVALID_SENTINEL
    with open(Path(path), "wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<ii", w, h))
        fp.write(body.tobytes())


def read_flow(path) -> FlowField:
    """Read a flow file back into a FlowField (invalid pixels zeroed)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FlowFormatError(f"file too short for header: {len(raw)} bytes")
    if raw[:4] != MAGIC:
        raise FlowFormatError(f"bad magic {raw[:4]!r}")
    w, h = struct.unpack("<ii", raw[4:12])
    if w < 0 or h < 0:
        raise FlowFormatError(f"negative dimensions {w}x{h}")
    expected = 12 + w * h * 2 * 4
    if len(raw) != expected:
        raise FlowFormatError(f"body length {len(raw) - 12} != expected {expected - 12}")
    body = np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w, 2)
    if not np.isfinite(body).all():
        raise FlowFormatError("flow file contains non-finite values")
    u = body[:, :, 0].astype(np.float64)
    v = body[:, :, 1].astype(np.float64)
    valid = (np.abs(u) <= INVALID_THRESHOLD) & (np.abs(v) <= INVALID_THRESHOLD)
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return FlowField(u, v, valid)


# ---------------------------------------------------------------------------
# Color-wheel visualization
# ---------------------------------------------------------------------------
# Standard flow color wheel (Baker et al. style segment counts); anchor fixed
# at 0 degrees = red, hue progressing counterclockwise in the displayed image.

_SEGMENT_STEPS = (15, 6, 4, 11, 13, 6)  # R-Y, Y-G, G-C, C-B, B-M, M-R


def _color_wheel() -> np.ndarray:
    ry, yg, gc, cb, bm, mr = _SEGMENT_STEPS
    total = sum(_SEGMENT_STEPS)
    wheel = np.zeros((total, 3))
    i = 0
    wheel[i : i + ry, 0] = 1.0
    wheel[i : i + ry, 1] = np.arange(ry) / ry
    i += ry
    wheel[i : i + yg, 0] = 1.0 - np.arange(yg) / yg
    wheel[i : i + yg, 1] = 1.0
    i += yg
    wheel[i : i + gc, 1] = 1.0
    wheel[i : i + gc, 2] = np.arange(gc) / gc
    i += gc
    wheel[i : i + cb, 1] = 1.0 - np.arange(cb) / cb
    wheel[i : i + cb, 2] = 1.0
    i += cb
    wheel[i : i + bm, 2] = 1.0
    wheel[i : i + bm, 0] = np.arange(bm) / bm
    i += bm
    wheel[i : i + mr, 2] = 1.0 - np.arange(mr) / mr
    wheel[i : i + mr, 0] = 1.0
    return wheel


_WHEEL = _color_wheel()


def flow_hue(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Hue RGB (float in [0,1]) for flow direction, ignoring magnitude."""
    angle = np.arctan2(-v, u)  # displayed-ccw angle, 0 = rightward
    n = len(_WHEEL)
    fk = (angle % (2.0 * np.pi)) / (2.0 * np.pi) * n
    k0 = np.floor(fk).astype(int) % n
    k1 = (k0 + 1) % n
    t = (fk - np.floor(fk))[..., None]
    return (1.0 - t) * _WHEEL[k0] + t * _WHEEL[k1]


def flow_to_png(f: FlowField, normalize: bool = True, scale: float | None = None) -> np.ndarray:
    """Render a flow field as an RGB image: hue = direction, brightness = magnitude.

    With normalize=True brightness is magnitude over the max valid magnitude
    (all-zero fields render black); otherwise ``scale`` maps magnitude to
    full brightness.  Invalid pixels are black.
    """
    if not f.valid.any():
        raise ValueError("all-invalid flow field")
    mag = f.magnitude()
    if normalize:
        denom = float(mag[f.valid].max())
        if denom == 0.0:
            denom = 1.0  # zero field renders all-black, no division blowup
    else:
        if scale is None or scale <= 0:
            raise ValueError("normalize=False requires a positive scale")
        denom = float(scale)
    brightness = np.clip(mag / denom, 0.0, 1.0)
    rgb = flow_hue(f.u, f.v) * brightness[..., None]
    rgb[~f.valid] = 0.0
    return (rgb * 255.0).round().astype(np.uint8)


def wheel_legend(size: int = 151) -> np.ndarray:
    """Disk legend of the color wheel for figure insets."""
    c = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    u = x - c
    v = y - c
    r = np.hypot(u, v)
    inside = r <= c
    brightness = np.where(inside, r / c, 0.0)
    rgb = flow_hue(u, v) * brightness[..., None]
    rgb[~inside] = 1.0  # white background
    return (rgb * 255.0).round().astype(np.uint8)
