"""Frame shaping, inference dispatch, and flow rescaling for one cell."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from flowadapters import floio
from flowadapters.profiles import MODEL_PROFILES, ModelProfile

WEIGHTS_ENV = "FLOWADAPTERS_WEIGHTS_DIR"


class AdapterError(RuntimeError):
    pass


class WeightsNotFoundError(AdapterError):
    pass


@dataclass
class Cell:
    """Paths and native geometry of one harness cell."""

    sequence_dir: Path
    n_frames: int
    events: list
    width: int
    height: int

    @property
    def cell_dir(self) -> Path:
        return self.sequence_dir.parent

    @property
    def target_path(self) -> Path:
        return self.cell_dir / "target.flo"


def read_cell(sequence_dir) -> Cell:
    """Parse the sequence manifest and frame geometry of a cell."""
    sequence_dir = Path(sequence_dir)
    manifest = sequence_dir / "manifest.txt"
    if not manifest.exists():
        raise AdapterError(f"no sequence manifest at {manifest}")
    entries = {}
    for raw in manifest.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line and "=" in line:
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    n_frames = int(entries["n_frames"])
    events = []
    ev = entries.get("events", "none")
    if ev not in ("", "none"):
        for item in ev.split(";"):
            f, dx, dy = item.strip().split(":")
            events.append((int(f), int(dx), int(dy)))
    with Image.open(sequence_dir / "frame_000.png") as im:
        width, height = im.size
    return Cell(sequence_dir=sequence_dir, n_frames=n_frames, events=events, width=width, height=height)


def load_frames(cell: Cell) -> np.ndarray:
    frames = []
    for i in range(cell.n_frames):
        with Image.open(cell.sequence_dir / f"frame_{i:03d}.png") as im:
            frames.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
    return np.stack(frames)


def select_window(n_frames: int, events: list, budget: int) -> tuple[int, int]:
    """Frame window [start, stop) of length <= budget containing the final
    shift event, centered on it as far as the sequence allows."""
    if budget >= n_frames:
        return 0, n_frames
    last_event = max((f for f, _, _ in events), default=n_frames - 1)
    start = min(max(last_event - budget // 2, 0), n_frames - budget)
    return start, start + budget


def shape_frames(frames: np.ndarray, profile: ModelProfile, events: list | None = None) -> np.ndarray:
    """Resize and window/pad frames to the profile's required input shape.

    Returns (input_frames, height, width, 3) uint8; two-frame models see the
    pair around the final displacement so the shift is visible to them.
    """
    events = events or []
    n = len(frames)
    start, stop = select_window(n, events, profile.input_frames)
    window = list(frames[start:stop])
    while len(window) < profile.input_frames:  # short sequence: pad at the end
        window.append(window[-1])
    out = []
    for frame in window:
        if profile.input_size is not None:
            w, h = profile.input_size
            frame = np.asarray(
                Image.fromarray(frame).resize((w, h), Image.BILINEAR), dtype=np.uint8
            )
        out.append(frame)
    shaped = np.stack(out)
    if profile.input_size is not None:
        expected = (profile.input_frames, profile.input_size[1], profile.input_size[0], 3)
        if shaped.shape != expected:
            raise AdapterError(f"shaped input {shaped.shape} != required {expected}")
    return shaped


def rescale_flow(uv: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resize a flow field to (height, width), rescaling the vectors by the
    per-axis resize ratios (direction is preserved when the ratios match)."""
    h_in, w_in = uv.shape[:2]
    if (h_in, w_in) == (height, width):
        return uv.astype(np.float32)
    sx = width / w_in
    sy = height / h_in
    u = Image.fromarray(uv[:, :, 0].astype(np.float32), mode="F").resize((width, height), Image.BILINEAR)
    v = Image.fromarray(uv[:, :, 1].astype(np.float32), mode="F").resize((width, height), Image.BILINEAR)
    out = np.stack([np.asarray(u) * sx, np.asarray(v) * sy], axis=2)
    return out.astype(np.float32)


# -- model runners -----------------------------------------------------------
# A runner maps (shaped_frames, cell) -> (H, W, 2) flow in px/frame at the
# model's own resolution.  Real networks are registered by the user; the
# built-in identity runner replays the cell's archived target field.

_RUNNERS = {}


def register_runner(name: str, fn) -> None:
    _RUNNERS[name] = fn


def _identity_runner(frames: np.ndarray, cell: Cell) -> np.ndarray:
    if not cell.target_path.exists():
        raise AdapterError(f"identity runner needs {cell.target_path}")
    uv, valid = floio.read_flo(cell.target_path)
    uv[~valid] = floio.INVALID_SENTINEL
    return uv


register_runner("identity", _identity_runner)


def _check_weights(profile: ModelProfile, weights_dir) -> None:
    if profile.weights_file is None:
        return
    root = Path(weights_dir) if weights_dir else Path(os.environ.get(WEIGHTS_ENV, ""))
    candidate = root / profile.weights_file
    if not root.name or not candidate.exists():
        raise WeightsNotFoundError(
            f"{profile.name} weights not found: expected {profile.weights_file} under "
            f"{root if root.name else '$' + WEIGHTS_ENV} (set {WEIGHTS_ENV} or pass weights_dir)"
        )


def adapt(model: str | ModelProfile, sequence_dir, out_path, weights_dir=None, runner=None) -> Path:
    """Run one model on one cell and write the harness flow file.

    Frames are resized to the profile's input size, windowed/padded to its
    frame budget (keeping the final shift event visible), passed to the
    model runner, and the predicted flow is rescaled back to the native
    resolution before writing.
    """
    profile = MODEL_PROFILES[model] if isinstance(model, str) else model
    cell = read_cell(sequence_dir)
    _check_weights(profile, weights_dir)
    fn = runner or _RUNNERS.get(profile.name)
    if fn is None:
        raise AdapterError(f"no runner registered for {profile.name}; call register_runner()")
    frames = load_frames(cell)
    shaped = shape_frames(frames, profile, cell.events)
    uv = np.asarray(fn(shaped, cell), dtype=np.float32)
    if uv.ndim != 3 or uv.shape[2] != 2:
        raise AdapterError(f"runner returned {uv.shape}, expected (H, W, 2)")
    if profile.flow_scale != 1.0:
        uv = uv * profile.flow_scale
    valid = (np.abs(uv) <= floio.INVALID_THRESHOLD).all(axis=2)
    uv = np.where(valid[:, :, None], uv, 0.0)
    uv = rescale_flow(uv, cell.width, cell.height)
    if valid.all():
        floio.write_flo(uv, out_path)
    else:
        # masks survive rescaling only at identical resolution; otherwise the
        # sentinel would be interpolated into neighboring pixels
        if uv.shape[:2] != valid.shape:
            raise AdapterError("masked model output requires native-resolution prediction")
        floio.write_flo(uv, out_path, valid=valid)
    return Path(out_path)
