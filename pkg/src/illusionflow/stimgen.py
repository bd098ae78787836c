"""Parametric rendering of anomalous-motion illusion and control images.

Families: rotating_snakes (concentric rings of repeating four-level
micropatterns), peripheral_drift (the same ring geometry with a monotone
luminance staircase), central_drift (radial sectors with an angular
luminance ramp), and ouchi (center/surround checks in orthogonal
orientations).

Geometry: the stimulus disk is centered on a square canvas and surrounded by
a uniform white margin; disk diameter + 2 * margin_px = canvas_px.  Angles
are measured counterclockwise in the displayed image (y down).  Each ring of
the snakes/drift families holds ``elements_per_ring`` repeating elements, one
full micropattern per element, so the pattern is invariant under rotation by
360/elements_per_ring degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from illusionflow import manifest as mf
from illusionflow import raster
from illusionflow.percept import GeometryError

FAMILIES = ("rotating_snakes", "peripheral_drift", "central_drift", "ouchi")
COLOR_SCHEMES = ("grayscale", "blue_yellow", "red_green")
SENSES = ("ccw", "cw")

MICROPATTERN_LEN = 4
DEFAULT_CONTROL_PERMUTATION = (0, 2, 1, 3)

# 8-bit color anchors for the chromatic schemes; intermediates are placed in
# the g1 (dark) and g2 (light) slots of the grayscale unit and rescaled in
# intensity toward the slot's luma (approximate, clipped to gamut).
_SCHEME_PAIRS = {
    "blue_yellow": ((0, 0, 255), (255, 255, 0)),
    "red_green": ((255, 0, 0), (0, 128, 0)),
}

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
MARGIN_COLOR = np.array([1.0, 1.0, 1.0])
CENTER_GRAY = np.array([128, 128, 128], dtype=np.uint8)


class ParameterError(ValueError):
    """Stimulus parameters violate an invariant."""


@dataclass(frozen=True)
class StimulusSpec:
    """Full parametric description of one illusion or control image."""

    family: str = "rotating_snakes"
    color_scheme: str = "grayscale"
    rings: int = 6
    elements_per_ring: int = 24
    g1: float = 0.25
    g2: float = 0.75
    sense: str = "ccw"
    canvas_px: int = 1506
    margin_px: int = 120
    control_permutation: tuple[int, ...] | None = None
    seed: int = 0
    # extensions (defaults chosen to visually match published exemplars)
    inner_radius_frac: float = 0.08
    supersample: int = 1
    cdi_sectors: int = 24
    ouchi_check_long: int = 48
    ouchi_check_short: int = 12
    ouchi_patch_frac: float = 0.42

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.color_scheme not in COLOR_SCHEMES:
            raise ParameterError(f"unknown color scheme {self.color_scheme!r}")
        if self.sense not in SENSES:
            raise ParameterError(f"sense must be ccw or cw, got {self.sense!r}")
        if self.rings < 1:
            raise ParameterError(f"rings must be >= 1, got {self.rings}")
        if self.elements_per_ring < 4 or self.elements_per_ring % MICROPATTERN_LEN:
            raise ParameterError(
                f"elements_per_ring must be >= 4 and divisible by {MICROPATTERN_LEN}, got {self.elements_per_ring}"
            )
        if not (0.0 < self.g1 < self.g2 < 1.0):
            raise ParameterError(f"need 0 < g1 < g2 < 1, got g1={self.g1}, g2={self.g2}")
        if self.canvas_px <= 2 * self.margin_px:
            raise GeometryError(f"canvas {self.canvas_px} too small for margin {self.margin_px}")
        if self.supersample < 1:
            raise ParameterError("supersample must be >= 1")
        if self.control_permutation is not None:
            perm = tuple(self.control_permutation)
            if sorted(perm) != list(range(MICROPATTERN_LEN)):
                raise ParameterError(f"control_permutation must be a bijection on 0..3, got {perm}")
            object.__setattr__(self, "control_permutation", perm)

    @property
    def disk_radius(self) -> float:
        return (self.canvas_px - 2 * self.margin_px) / 2.0

    @property
    def center(self) -> tuple[float, float]:
        c = (self.canvas_px - 1) / 2.0
        return (c, c)

    def stimulus_id(self, control: bool = False) -> str:
        scheme = {"grayscale": "g", "blue_yellow": "by", "red_green": "rg"}[self.color_scheme]
        fam = {"rotating_snakes": "snakes", "peripheral_drift": "pdi", "central_drift": "cdi", "ouchi": "ouchi"}[
            self.family
        ]
        base = f"{fam}-{scheme}-{self.sense}-g1_{self.g1:g}-g2_{self.g2:g}"
        return base + ("-ctrl" if control else "")

    def to_manifest(self) -> dict:
        perm = self.control_permutation
        return {
            "family": self.family,
            "color_scheme": self.color_scheme,
            "rings": self.rings,
            "elements_per_ring": self.elements_per_ring,
            "g1": self.g1,
            "g2": self.g2,
            "sense": self.sense,
            "canvas_px": self.canvas_px,
            "margin_px": self.margin_px,
            "control_permutation": "none" if perm is None else list(perm),
            "seed": self.seed,
            "inner_radius_frac": self.inner_radius_frac,
            "supersample": self.supersample,
            "cdi_sectors": self.cdi_sectors,
            "ouchi_check_long": self.ouchi_check_long,
            "ouchi_check_short": self.ouchi_check_short,
            "ouchi_patch_frac": self.ouchi_patch_frac,
        }

    @classmethod
    def from_manifest(cls, entries: dict) -> "StimulusSpec":
        perm = entries.get("control_permutation", "none")
        return cls(
            family=entries["family"],
            color_scheme=entries["color_scheme"],
            rings=int(entries["rings"]),
            elements_per_ring=int(entries["elements_per_ring"]),
            g1=float(entries["g1"]),
            g2=float(entries["g2"]),
            sense=entries["sense"],
            canvas_px=int(entries["canvas_px"]),
            margin_px=int(entries["margin_px"]),
            control_permutation=None if perm == "none" else tuple(int(p) for p in mf.parse_list(perm)),
            seed=int(entries.get("seed", 0)),
            inner_radius_frac=float(entries.get("inner_radius_frac", 0.08)),
            supersample=int(entries.get("supersample", 1)),
            cdi_sectors=int(entries.get("cdi_sectors", 24)),
            ouchi_check_long=int(entries.get("ouchi_check_long", 48)),
            ouchi_check_short=int(entries.get("ouchi_check_short", 12)),
            ouchi_patch_frac=float(entries.get("ouchi_patch_frac", 0.42)),
        )


def _luma_scaled(rgb255, target_luma: float) -> np.ndarray:
    base = np.asarray(rgb255, dtype=np.float64) / 255.0
    base_luma = float(_LUMA_WEIGHTS @ base)
    return np.clip(base * (target_luma / base_luma), 0.0, 1.0)


def micropattern(spec: StimulusSpec) -> np.ndarray:
    """The repeating 4-color unit in angular order, as (4, 3) RGB in [0, 1].

    Counterclockwise sense in grayscale is (black, g1, white, g2); clockwise
    is the reversed list.  Chromatic schemes substitute the two intermediate
    levels with the scheme's color pair.  The peripheral-drift family uses
    the monotone staircase (black, g1, g2, white) instead of the alternating
    snakes order.
    """
    if spec.family == "peripheral_drift":
        levels = [0.0, spec.g1, spec.g2, 1.0]
        chroma_slots = (1, 2)
    else:
        levels = [0.0, spec.g1, 1.0, spec.g2]
        chroma_slots = (1, 3)
    colors = np.array([[lv, lv, lv] for lv in levels])
    if spec.color_scheme != "grayscale":
        dark, light = _SCHEME_PAIRS[spec.color_scheme]
        colors[chroma_slots[0]] = _luma_scaled(dark, spec.g1)
        colors[chroma_slots[1]] = _luma_scaled(light, spec.g2)
    if spec.sense == "cw":
        colors = colors[::-1].copy()
    return colors


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _render_grids(spec: StimulusSpec):
    """Pixel-center polar coordinates at the (super)sampling resolution."""
    s = spec.supersample
    n = spec.canvas_px * s
    cx, cy = spec.center
    idx = (np.arange(n) + 0.5) / s - 0.5
    x = idx[None, :] - cx
    y = idx[:, None] - cy
    r = np.hypot(x, y)
    phi = np.arctan2(-y, x) % (2.0 * np.pi)  # ccw in the displayed image
    return r, phi


def _finalize(spec: StimulusSpec, rgb: np.ndarray) -> np.ndarray:
    """Average supersamples, quantize, and force the margin outside the disk."""
    s = spec.supersample
    if s > 1:
        n = spec.canvas_px
        rgb = rgb.reshape(n, s, n, s, 3).mean(axis=(1, 3))
    img = np.round(rgb * 255.0).astype(np.uint8)
    # margin stays exact regardless of supersampling
    cx, cy = spec.center
    idx = np.arange(spec.canvas_px, dtype=np.float64)
    r_full = np.hypot(idx[None, :] - cx, idx[:, None] - cy)
    img[r_full > spec.disk_radius] = 255
    return img


def _ring_layout(spec: StimulusSpec):
    radius = spec.disk_radius
    inner = spec.inner_radius_frac * radius
    thickness = (radius - inner) / spec.rings
    if thickness < 1.0:
        raise GeometryError(
            f"canvas {spec.canvas_px} too small for {spec.rings} rings (annulus thickness {thickness:.2f} px)"
        )
    return inner, thickness


def _render_rings(spec: StimulusSpec, colors: np.ndarray) -> np.ndarray:
    """Concentric annuli of repeated 4-color elements, shared by snakes/PDI."""
    inner, _ = _ring_layout(spec)
    r, phi = _render_grids(spec)
    radius = spec.disk_radius

    n_sub = MICROPATTERN_LEN * spec.elements_per_ring
    sub = np.minimum((phi / (2.0 * np.pi) * n_sub).astype(np.int64), n_sub - 1)
    k = sub % MICROPATTERN_LEN

    rgb = np.ones(r.shape + (3,))
    ring_zone = (r >= inner) & (r <= radius)
    rgb[ring_zone] = colors[k[ring_zone]]
    rgb[r < inner] = CENTER_GRAY / 255.0
    return _finalize(spec, rgb)


def render_snakes(spec: StimulusSpec) -> np.ndarray:
    """Render the rotating-snakes illusion image for a spec."""
    if spec.family != "rotating_snakes":
        raise ParameterError(f"render_snakes requires family=rotating_snakes, got {spec.family}")
    return _render_rings(spec, micropattern(spec))


def render_control(spec: StimulusSpec) -> np.ndarray:
    """Render the control image: identical geometry, permuted unit colors."""
    if spec.family not in ("rotating_snakes", "peripheral_drift"):
        raise ParameterError(f"controls are defined for ring families, got {spec.family}")
    perm = spec.control_permutation or DEFAULT_CONTROL_PERMUTATION
    colors = micropattern(spec)[list(perm)]
    return _render_rings(spec, colors)


def _render_cdi(spec: StimulusSpec) -> np.ndarray:
    if spec.color_scheme != "grayscale":
        raise ParameterError("central_drift supports the grayscale scheme only")
    inner, _ = _ring_layout(spec)
    r, phi = _render_grids(spec)
    radius = spec.disk_radius
    frac = (phi / (2.0 * np.pi) * spec.cdi_sectors) % 1.0
    if spec.sense == "cw":
        frac = 1.0 - frac
    rgb = np.ones(r.shape + (3,))
    zone = (r >= inner) & (r <= radius)
    rgb[zone] = frac[zone, None]
    rgb[r < inner] = CENTER_GRAY / 255.0
    return _finalize(spec, rgb)


def _render_ouchi(spec: StimulusSpec) -> np.ndarray:
    if spec.color_scheme != "grayscale":
        raise ParameterError("ouchi supports the grayscale scheme only")
    r, _ = _render_grids(spec)
    s = spec.supersample
    n = spec.canvas_px * s
    cx, cy = spec.center
    idx = (np.arange(n) + 0.5) / s - 0.5
    x = np.broadcast_to(idx[None, :] - cx, (n, n))
    y = np.broadcast_to(idx[:, None] - cy, (n, n))

    long_px, short_px = spec.ouchi_check_long, spec.ouchi_check_short
    surround = (np.floor(x / long_px) + np.floor(y / short_px)) % 2
    patch = (np.floor(x / short_px) + np.floor(y / long_px)) % 2
    half = spec.ouchi_patch_frac * spec.disk_radius
    in_patch = (np.abs(x) <= half) & (np.abs(y) <= half)
    checks = np.where(in_patch, patch, surround)

    rgb = np.ones(r.shape + (3,))
    inside = r <= spec.disk_radius
    rgb[inside] = checks[inside, None]
    return _finalize(spec, rgb)


def render_related(spec: StimulusSpec) -> np.ndarray:
    """Render the non-snakes families: peripheral drift, central drift, ouchi."""
    if spec.family == "peripheral_drift":
        return _render_rings(spec, micropattern(spec))
    if spec.family == "central_drift":
        return _render_cdi(spec)
    if spec.family == "ouchi":
        return _render_ouchi(spec)
    raise ParameterError(f"render_related does not handle family {spec.family!r}")


def seeded_control_permutation(seed: int) -> tuple[int, ...]:
    """Seeded alternative to the default control permutation.

    Draws until the permuted unit, under every cyclic rotation, differs from
    both the illusion unit order and its reverse, so the directed luminance
    staircase is destroyed while the color multiset is kept.
    """
    rng = np.random.default_rng(seed)
    base = list(range(MICROPATTERN_LEN))
    while True:
        perm = tuple(int(v) for v in rng.permutation(MICROPATTERN_LEN))
        rotations = {tuple(perm[i:] + perm[:i]) for i in range(MICROPATTERN_LEN)}
        if tuple(base) not in rotations and tuple(reversed(base)) not in rotations:
            return perm


def render(spec: StimulusSpec, control: bool = False) -> np.ndarray:
    """Dispatch to the family renderer; control=True permutes unit colors."""
    if control:
        return render_control(spec)
    if spec.family == "rotating_snakes":
        return render_snakes(spec)
    return render_related(spec)


def save_stimulus(img: np.ndarray, spec: StimulusSpec, png_path, control: bool = False) -> None:
    """Write the PNG plus its provenance sidecar manifest."""
    png_path = Path(png_path)
    raster.save_png(img, png_path)
    entries = spec.to_manifest()
    entries["control"] = "true" if control else "false"
    mf.write_manifest(png_path.with_suffix(".txt"), entries)


def unit_regions(spec: StimulusSpec):
    """Yield (ring, element, boolean mask) for every repeating unit.

    Masks are computed on the final pixel grid (centers), matching the hard
    default rendering.
    """
    inner, thickness = _ring_layout(spec)
    cx, cy = spec.center
    idx = np.arange(spec.canvas_px, dtype=np.float64)
    x = idx[None, :] - cx
    y = idx[:, None] - cy
    r = np.hypot(x, y)
    phi = np.arctan2(-y, x) % (2.0 * np.pi)
    n_sub = MICROPATTERN_LEN * spec.elements_per_ring
    sub = np.minimum((phi / (2.0 * np.pi) * n_sub).astype(np.int64), n_sub - 1)
    element = sub // MICROPATTERN_LEN
    ring = np.floor((r - inner) / thickness).astype(np.int64)
    zone = (r >= inner) & (r <= spec.disk_radius)
    ring = np.clip(ring, 0, spec.rings - 1)
    for ri in range(spec.rings):
        for ei in range(spec.elements_per_ring):
            yield ri, ei, zone & (ring == ri) & (element == ei)
