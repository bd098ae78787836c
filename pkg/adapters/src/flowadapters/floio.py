"""Minimal reader/writer for the harness flow wire format.

Independent implementation of the documented interchange format: magic
"PIEH", little-endian int32 width and height, row-major interleaved (u, v)
little-endian float32.  Invalid pixels carry the sentinel 1e10; stored
magnitudes above 1e9 mark a pixel invalid.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PIEH"
INVALID_SENTINEL = 1e10
INVALID_THRESHOLD = 1e9


def write_flo(uv: np.ndarray, path, valid: np.ndarray | None = None) -> None:
    """Write an (H, W, 2) float flow array; invalid pixels get the sentinel."""
    uv = np.asarray(uv, dtype=np.float32)
    if uv.ndim != 3 or uv.shape[2] != 2:
        raise ValueError(f"expected (H, W, 2) flow, got {uv.shape}")
    if not np.isfinite(uv).all():
        raise ValueError("flow contains non-finite values")
    h, w = uv.shape[:2]
    body = uv.astype("<f4").copy()
    if valid is not None:
        body[~np.asarray(valid, dtype=bool)] = INVALID_SENTINEL
    with open(Path(path), "wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<ii", w, h))
        fp.write(body.tobytes())


def read_flo(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a flow file; returns ((H, W, 2) float32, (H, W) bool valid)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise ValueError(f"not a flow file: {path}")
    w, h = struct.unpack("<ii", raw[4:12])
    if len(raw) != 12 + w * h * 8:
        raise ValueError(f"truncated flow file: {path}")
    uv = np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w, 2).copy()
    valid = (np.abs(uv) <= INVALID_THRESHOLD).all(axis=2)
    uv[~valid] = 0.0
    return uv, valid
