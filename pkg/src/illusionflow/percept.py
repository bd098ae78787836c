"""Human-percept target flow fields.

Coordinate convention used across the whole package: image coordinates with
x right and y down; "counterclockwise" (ccw) means counterclockwise as seen
in the displayed image.  For a ccw rotation the flow at a point right of the
center therefore points up (negative v).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Stimulus/target geometry does not fit the requested canvas."""


@dataclass
class FlowField:
    """Dense per-pixel 2D motion in px/frame with a validity mask.

    u is the horizontal component (positive right), v the vertical component
    (positive down).  Invalid pixels carry zero vectors.
    """

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if not (self.u.shape == self.v.shape == self.valid.shape):
            raise ValueError(f"component shapes differ: {self.u.shape}, {self.v.shape}, {self.valid.shape}")
        if self.u.ndim != 2:
            raise ValueError("flow components must be 2-D arrays")
        if not (np.isfinite(self.u[self.valid]).all() and np.isfinite(self.v[self.valid]).all()):
            raise ValueError("non-finite flow values inside the valid mask")

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @classmethod
    def zeros(cls, height: int, width: int, valid: bool = True) -> "FlowField":
        u = np.zeros((height, width))
        v = np.zeros((height, width))
        mask = np.full((height, width), valid, dtype=bool)
        return cls(u, v, mask)

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def scaled(self, factor: float) -> "FlowField":
        return FlowField(self.u * factor, self.v * factor, self.valid.copy())


@dataclass
class PerceptTarget:
    """Parameters of the expected human-percept rotational flow.

    Flow is tangential around ``center`` with magnitude (r/R)^gamma * M inside
    the disk of radius R, zero (and invalid) outside.
    """

    center: tuple[float, float]
    radius: float
    boundary_speed: float = 1.0
    gamma: float = 1.0
    sense: str = "ccw"
    width: int = 0
    height: int = 0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.boundary_speed <= 0:
            raise ValueError(f"boundary_speed must be positive, got {self.boundary_speed}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.sense not in ("ccw", "cw"):
            raise ValueError(f"sense must be 'ccw' or 'cw', got {self.sense!r}")


def target_flow(t: PerceptTarget) -> FlowField:
    """Synthesize the tangential percept flow field for a target.

    Inside the disk the flow rotates every pixel around the center with
    speed (r/R)^gamma * M; outside the disk the flow is zero and masked
    invalid.  There is no translational component.
    """
    if t.width <= 0 or t.height <= 0:
        raise ValueError("target width/height must be positive")
    cx, cy = t.center
    if not (0 <= cx < t.width and 0 <= cy < t.height):
        raise GeometryError(f"center {t.center} outside canvas {t.width}x{t.height}")
    if t.radius > max(t.width, t.height):
        raise GeometryError(f"radius {t.radius} larger than canvas {t.width}x{t.height}")

    y, x = np.mgrid[0 : t.height, 0 : t.width].astype(np.float64)
    dx = x - cx
    dy = y - cy
    r = np.hypot(dx, dy)
    inside = r <= t.radius

    # ccw in the displayed image (y down): tangent direction is (dy, -dx)/r.
    with np.errstate(invalid="ignore", divide="ignore"):
        speed_over_r = t.boundary_speed * (r / t.radius) ** t.gamma / r
    speed_over_r[r == 0] = 0.0
    sign = 1.0 if t.sense == "ccw" else -1.0
    u = np.where(inside, sign * speed_over_r * dy, 0.0)
    v = np.where(inside, -sign * speed_over_r * dx, 0.0)
    return FlowField(u, v, inside)


def behavioral_target(direction_report: str, t: PerceptTarget) -> FlowField:
    """Target flow for a reported percept direction: cw, unclear, or ccw.

    "unclear" reports map to the all-valid zero field (no perceived motion).
    """
    if direction_report not in ("cw", "unclear", "ccw"):
        raise ValueError(f"direction_report must be cw/unclear/ccw, got {direction_report!r}")
    if direction_report == "unclear":
        if t.width <= 0 or t.height <= 0:
            raise ValueError("target width/height must be positive")
        return FlowField.zeros(t.height, t.width, valid=True)
    spec = PerceptTarget(
        center=t.center,
        radius=t.radius,
        boundary_speed=t.boundary_speed,
        gamma=t.gamma,
        sense=direction_report,
        width=t.width,
        height=t.height,
    )
    return target_flow(spec)
