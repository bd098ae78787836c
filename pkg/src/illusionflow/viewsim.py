"""Frame-sequence simulation of viewing conditions with displacement logs.

Kinds: static (identical frames), onset (blank white then stimulus), shift
(straight-trajectory integer-pixel translations at listed frames),
random_slip (seeded 1-3 shifts with random onset/direction/magnitude),
peripheral_shift (stimulus embedded off-center in a 2772x2772 field), and
veridical_rotation (physical rotation about the disk center).

Shift directions are multiples of 45 degrees measured in image coordinates
(x right, y down), so 225 moves the stimulus toward the top-left.  A shift of
magnitude delta displaces by delta along each nonzero axis of the direction
(diagonal steps are (+-delta, +-delta), matching displacement applied equally
in x and y).  Shift displacements are integer pixels so unmoved frames stay
byte-identical; veridical rotation resamples bilinearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from illusionflow import manifest as mf
from illusionflow import raster
from illusionflow.percept import GeometryError
from illusionflow.stimgen import ParameterError

KINDS = ("static", "onset", "shift", "random_slip", "peripheral_shift", "veridical_rotation")
STANDARD_DELTAS = (15, 30, 60, 90, 120)
DIRECTIONS = tuple(range(0, 360, 45))
MAX_SHIFTS = 3

PERIPHERAL_FIELD_PX = 2772
PERIPHERAL_STIMULUS_PX = 1386
PERIPHERAL_DEFAULT_OFFSET = (346, 346)

DEFAULT_FPS = 5.0  # nominal export rate; metrics are frame-based


@dataclass(frozen=True)
class ViewingCondition:
    kind: str = "static"
    n_frames: int = 15
    delta_px: int = 30
    direction_deg: int = 225
    shift_frames: tuple[int, ...] = ()
    onset_frame: int = 3
    omega: float = 0.0
    seed: int = 0
    allow_nonstandard_delta: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown viewing kind {self.kind!r}")
        if self.n_frames < 2:
            raise ParameterError(f"n_frames must be >= 2, got {self.n_frames}")
        object.__setattr__(self, "shift_frames", tuple(int(f) for f in self.shift_frames))
        if self.kind in ("shift", "peripheral_shift"):
            if not self.allow_nonstandard_delta and self.delta_px not in STANDARD_DELTAS:
                raise ParameterError(f"delta_px must be one of {STANDARD_DELTAS}, got {self.delta_px}")
            if self.direction_deg not in DIRECTIONS:
                raise ParameterError(f"direction_deg must be a multiple of 45 in [0, 315], got {self.direction_deg}")
            sf = self.shift_frames
            if len(sf) > MAX_SHIFTS:
                raise ParameterError(f"at most {MAX_SHIFTS} shifts per sequence, got {len(sf)}")
            if any(b <= a for a, b in zip(sf, sf[1:])):
                raise ParameterError(f"shift_frames must be strictly increasing, got {sf}")
            if sf and not (1 <= sf[0] and sf[-1] <= self.n_frames - 1):
                raise ParameterError(f"shift_frames must lie in [1, {self.n_frames - 1}], got {sf}")
        if self.kind == "onset" and not (1 <= self.onset_frame <= self.n_frames - 1):
            raise ParameterError(f"onset_frame must lie in [1, {self.n_frames - 1}], got {self.onset_frame}")
        if self.kind == "veridical_rotation":
            if self.omega == 0.0:
                raise ParameterError("veridical rotation requires omega != 0")
            if abs(self.omega) >= 180.0:
                raise ParameterError(f"|omega| must be < 180 deg/frame, got {self.omega}")

    def condition_id(self) -> str:
        if self.kind == "static":
            return "static"
        if self.kind == "onset":
            return f"onset-f{self.onset_frame}"
        if self.kind == "shift":
            frames = "_".join(str(f) for f in self.shift_frames)
            return f"shift-d{self.delta_px}-a{self.direction_deg}-f{frames}"
        if self.kind == "random_slip":
            return f"rslip-s{self.seed}"
        if self.kind == "peripheral_shift":
            frames = "_".join(str(f) for f in self.shift_frames)
            return f"peri-d{self.delta_px}-a{self.direction_deg}-f{frames}"
        return f"rot-w{self.omega:g}"

    def to_manifest(self) -> dict:
        return {
            "kind": self.kind,
            "n_frames": self.n_frames,
            "delta_px": self.delta_px,
            "direction_deg": self.direction_deg,
            "shift_frames": list(self.shift_frames) if self.shift_frames else "none",
            "onset_frame": self.onset_frame,
            "omega": self.omega,
            "seed": self.seed,
        }

    @classmethod
    def from_manifest(cls, entries: dict) -> "ViewingCondition":
        sf = entries.get("shift_frames", "none")
        return cls(
            kind=entries["kind"],
            n_frames=int(entries["n_frames"]),
            delta_px=int(entries.get("delta_px", 30)),
            direction_deg=int(entries.get("direction_deg", 225)),
            shift_frames=() if sf == "none" else tuple(int(v) for v in mf.parse_list(sf)),
            onset_frame=int(entries.get("onset_frame", 3)),
            omega=float(entries.get("omega", 0.0)),
            seed=int(entries.get("seed", 0)),
            allow_nonstandard_delta=True,
        )


@dataclass
class FrameSequence:
    """Ordered raster frames plus the displacement-event log."""

    frames: list
    events: list
    condition: ViewingCondition
    px_per_degree: float = 50.0
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if len(self.frames) != self.condition.n_frames:
            raise ValueError(f"{len(self.frames)} frames != n_frames {self.condition.n_frames}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape[:2]

    def total_displacement(self) -> tuple[int, int]:
        dx = sum(e[1] for e in self.events)
        dy = sum(e[2] for e in self.events)
        return dx, dy

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(self.frames):
            raster.save_png(frame, directory / f"frame_{i:03d}.png")
        entries = self.condition.to_manifest()
        entries["px_per_degree"] = self.px_per_degree
        entries["origin"] = list(self.origin)
        entries["events"] = "; ".join(f"{f}:{dx}:{dy}" for f, dx, dy in self.events) or "none"
        mf.write_manifest(directory / "manifest.txt", entries)

    @classmethod
    def load(cls, directory) -> "FrameSequence":
        directory = Path(directory)
        entries = mf.read_manifest(directory / "manifest.txt")
        condition = ViewingCondition.from_manifest(entries)
        frames = [raster.load_png(directory / f"frame_{i:03d}.png") for i in range(condition.n_frames)]
        events_str = entries.get("events", "none")
        events = []
        if events_str != "none":
            for item in events_str.split(";"):
                f, dx, dy = item.strip().split(":")
                events.append((int(f), int(dx), int(dy)))
        origin = tuple(int(v) for v in mf.parse_list(entries.get("origin", "0, 0")))
        return cls(
            frames=frames,
            events=events,
            condition=condition,
            px_per_degree=float(entries.get("px_per_degree", 50.0)),
            origin=origin,  # type: ignore[arg-type]
        )

    def to_gif(self, path, fps: float = DEFAULT_FPS, fixation_cross: bool = False) -> None:
        """Animated export for demos (nominal 5 Hz)."""
        frames = []
        for frame in self.frames:
            img = frame.copy()
            if fixation_cross:
                _draw_fixation_cross(img)
            frames.append(Image.fromarray(img))
        frames[0].save(
            Path(path),
            save_all=True,
            append_images=frames[1:],
            duration=int(round(1000.0 / fps)),
            loop=0,
        )


def _draw_fixation_cross(img: np.ndarray, arm: int = 20, thickness: int = 3) -> None:
    h, w = img.shape[:2]
    cx, cy = w - 4 * arm, h - 4 * arm
    img[cy - thickness // 2 : cy + thickness // 2 + 1, cx - arm : cx + arm + 1] = 0
    img[cy - arm : cy + arm + 1, cx - thickness // 2 : cx + thickness // 2 + 1] = 0


def shift_vector(delta_px: int, direction_deg: int) -> tuple[int, int]:
    """Integer displacement for one shift event (delta per nonzero axis)."""
    ux = int(round(math.cos(math.radians(direction_deg))))
    uy = int(round(math.sin(math.radians(direction_deg))))
    return delta_px * ux, delta_px * uy


def default_shift_frames(n_frames: int, n_shifts: int) -> tuple[int, ...]:
    """Evenly spaced shift placement: round(j*n/(k+1)) for j=1..k."""
    if not 1 <= n_shifts <= MAX_SHIFTS:
        raise ParameterError(f"n_shifts must be in [1, {MAX_SHIFTS}], got {n_shifts}")
    frames = tuple(int(round(j * n_frames / (n_shifts + 1))) for j in range(1, n_shifts + 1))
    return tuple(min(max(f, 1), n_frames - 1) for f in frames)


def _content_bbox(image: np.ndarray) -> tuple[int, int, int, int]:
    """Bounding box (x0, y0, x1, y1) of non-white content, exclusive ends."""
    nonwhite = np.any(image != 255, axis=2)
    if not nonwhite.any():
        return 0, 0, image.shape[1], image.shape[0]
    ys, xs = np.nonzero(nonwhite)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def _paste(canvas_shape: tuple[int, int], image: np.ndarray, offset: tuple[int, int]) -> np.ndarray:
    """White canvas with ``image`` pasted at integer offset (clipped)."""
    h, w = canvas_shape
    ih, iw = image.shape[:2]
    ox, oy = offset
    frame = np.full((h, w, 3), 255, dtype=np.uint8)
    x0, y0 = max(ox, 0), max(oy, 0)
    x1, y1 = min(ox + iw, w), min(oy + ih, h)
    if x1 > x0 and y1 > y0:
        frame[y0:y1, x0:x1] = image[y0 - oy : y1 - oy, x0 - ox : x1 - ox]
    return frame


def _check_on_canvas(canvas_shape: tuple[int, int], bbox, offset: tuple[int, int]) -> None:
    x0, y0, x1, y1 = bbox
    ox, oy = offset
    h, w = canvas_shape
    if x1 + ox <= 0 or x0 + ox >= w or y1 + oy <= 0 or y0 + oy >= h:
        raise GeometryError(f"cumulative displacement {offset} pushes the stimulus fully off-canvas")


def _shift_frames_from_events(
    image: np.ndarray,
    canvas_shape: tuple[int, int],
    base_offset: tuple[int, int],
    n_frames: int,
    events: list,
) -> list:
    bbox = _content_bbox(image)
    per_frame = {f: (dx, dy) for f, dx, dy in events}
    frames = []
    ox, oy = base_offset
    current = _paste(canvas_shape, image, (ox, oy))
    for i in range(n_frames):
        if i in per_frame:
            dx, dy = per_frame[i]
            ox, oy = ox + dx, oy + dy
            _check_on_canvas(canvas_shape, bbox, (ox, oy))
            current = _paste(canvas_shape, image, (ox, oy))
        frames.append(current)
    return frames


def make_static(image: np.ndarray, n_frames: int) -> FrameSequence:
    """Identical frames across time; empty event log."""
    if n_frames < 2:
        raise ParameterError(f"n_frames must be >= 2, got {n_frames}")
    image = raster.as_rgb_u8(image)
    condition = ViewingCondition(kind="static", n_frames=n_frames)
    return FrameSequence(frames=[image] * n_frames, events=[], condition=condition)


def make_onset(image: np.ndarray, n_frames: int, onset_frame: int = 3) -> FrameSequence:
    """Blank white frames, then the stimulus; one logged zero-displacement event."""
    image = raster.as_rgb_u8(image)
    condition = ViewingCondition(kind="onset", n_frames=n_frames, onset_frame=onset_frame)
    white = np.full_like(image, 255)
    frames = [white] * onset_frame + [image] * (n_frames - onset_frame)
    return FrameSequence(frames=frames, events=[(onset_frame, 0, 0)], condition=condition)


def make_shift(image: np.ndarray, condition: ViewingCondition) -> FrameSequence:
    """Straight-trajectory translation at each listed shift frame."""
    if condition.kind != "shift":
        raise ParameterError(f"make_shift requires kind=shift, got {condition.kind}")
    image = raster.as_rgb_u8(image)
    step = shift_vector(condition.delta_px, condition.direction_deg)
    events = [(f, step[0], step[1]) for f in condition.shift_frames]
    frames = _shift_frames_from_events(image, image.shape[:2], (0, 0), condition.n_frames, events)
    return FrameSequence(frames=frames, events=events, condition=condition)


def sample_slip_events(n_frames: int, seed: int) -> list:
    """Seeded random event log: 1-3 shifts, each with onset frame uniform over
    [1, n_frames-1], direction uniform over the 8 orientations, and magnitude
    uniform over the standard displacement set."""
    rng = np.random.default_rng(seed)
    n_shifts = int(rng.integers(1, MAX_SHIFTS + 1))
    onset_frames = sorted(int(f) for f in rng.choice(np.arange(1, n_frames), size=n_shifts, replace=False))
    events = []
    for f in onset_frames:
        direction = int(rng.choice(DIRECTIONS))
        delta = int(rng.choice(STANDARD_DELTAS))
        dx, dy = shift_vector(delta, direction)
        events.append((f, dx, dy))
    return events


def make_random_slip(image: np.ndarray, n_frames: int, seed: int) -> FrameSequence:
    """1-3 shifts with seeded random onset frame, direction, and magnitude."""
    image = raster.as_rgb_u8(image)
    events = sample_slip_events(n_frames, seed)
    condition = ViewingCondition(kind="random_slip", n_frames=n_frames, seed=seed)
    frames = _shift_frames_from_events(image, image.shape[:2], (0, 0), n_frames, events)
    return FrameSequence(frames=frames, events=events, condition=condition)


def make_peripheral(
    image: np.ndarray,
    condition: ViewingCondition,
    embed_offset: tuple[int, int] = PERIPHERAL_DEFAULT_OFFSET,
) -> FrameSequence:
    """Embed the stimulus off-center in a large uniform field and shift it.

    The stimulus is resized to 1386x1386 and placed in a 2772x2772 white
    field at ``embed_offset`` (top-left corner of the resized stimulus).
    """
    if condition.kind != "peripheral_shift":
        raise ParameterError(f"make_peripheral requires kind=peripheral_shift, got {condition.kind}")
    image = raster.as_rgb_u8(image)
    small = raster.resize_rgb(image, PERIPHERAL_STIMULUS_PX, PERIPHERAL_STIMULUS_PX)
    step = shift_vector(condition.delta_px, condition.direction_deg)
    events = [(f, step[0], step[1]) for f in condition.shift_frames]
    canvas = (PERIPHERAL_FIELD_PX, PERIPHERAL_FIELD_PX)
    frames = _shift_frames_from_events(small, canvas, embed_offset, condition.n_frames, events)
    return FrameSequence(frames=frames, events=events, condition=condition, origin=embed_offset)


def rotate_about_center(image: np.ndarray, angle_deg: float) -> np.ndarray:
    """Bilinear rotation (displayed-ccw for positive angles) about the center.

    Out-of-bounds samples read as white; pixels outside the content radius
    are forced back to white so the margin stays untouched.
    """
    img = raster.as_rgb_u8(image).astype(np.float64)
    h, w = img.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = xx - cx
    dy = yy - cy
    a = math.radians(angle_deg)
    # inverse map of a displayed-ccw rotation (y down)
    sx = dx * math.cos(a) - dy * math.sin(a) + cx
    sy = dx * math.sin(a) + dy * math.cos(a) + cy

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    out = np.zeros_like(img)
    for (ix, iy), weight in (
        ((x0, y0), (1 - fx) * (1 - fy)),
        ((x0 + 1, y0), fx * (1 - fy)),
        ((x0, y0 + 1), (1 - fx) * fy),
        ((x0 + 1, y0 + 1), fx * fy),
    ):
        inb = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        cix = np.clip(ix, 0, w - 1)
        ciy = np.clip(iy, 0, h - 1)
        sample = np.where(inb[:, :, None], img[ciy, cix], 255.0)
        out += weight[:, :, None] * sample

    nonwhite = np.any(image != 255, axis=2)
    if nonwhite.any():
        r_content = np.hypot(xx - cx, yy - cy)[nonwhite].max()
        out[np.hypot(xx - cx, yy - cy) > r_content + 1.0] = 255.0
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def make_veridical_rotation(image: np.ndarray, omega: float, n_frames: int) -> FrameSequence:
    """Physically rotate the stimulus by omega deg/frame (ccw for positive omega)."""
    condition = ViewingCondition(kind="veridical_rotation", n_frames=n_frames, omega=omega)
    image = raster.as_rgb_u8(image)
    frames = [image]
    for k in range(1, n_frames):
        # sample the source frame at the cumulative angle to avoid compounding
        # interpolation loss over the sequence
        frames.append(rotate_about_center(image, omega * k))
    return FrameSequence(frames=frames, events=[], condition=condition)
