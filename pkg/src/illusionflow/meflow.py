"""First-order motion-energy optical-flow estimator and unit-level analysis.

A bank of spatiotemporally separable Gabor units covers 12 drift directions
and an 8x8 log-spaced grid of spatial and temporal frequencies.  Spatial
filtering runs in the frequency domain: each unit's quadrature pair is the
real/imaginary part of one complex response obtained by multiplying the frame
spectrum with a one-sided Gaussian gain centered at the unit's frequency
vector (DC gain removed, so uniform fields produce zero response).  Temporal
filtering uses small windowed cos/sin kernel pairs, and per-unit energy is
the sum of squared direction-selective quadrature combinations, averaged over
the valid temporal samples.

Flow decoding is an opponent-energy-weighted vector sum over units (direction
unit vector scaled by the unit's tf/sf speed), followed by Gaussian spatial
pooling and upsampling back to frame resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from illusionflow import raster
from illusionflow.percept import FlowField
from illusionflow.stimgen import ParameterError
from illusionflow.viewsim import FrameSequence

DEFAULT_DIRECTIONS = 12
DEFAULT_SPATIAL_FREQS = tuple(np.geomspace(0.02, 0.25, 8))
DEFAULT_TEMPORAL_FREQS = tuple(np.geomspace(0.10, 0.40, 8))
DEFAULT_TEMPORAL_SUPPORT = 11
DEFAULT_WORKING_WIDTH = 448  # a 1506-px canvas maps to a ~376-px disk
DEFAULT_STRIDE = 4

SIGMA_PER_CYCLE = 0.5  # spatial envelope sigma = 0.5 / frequency
TEMPORAL_SIGMA = 3.0  # frames


@dataclass
class GaborBank:
    """Immutable filter bank; units indexed as (direction, sf, tf) triples."""

    directions_deg: np.ndarray
    spatial_freqs: np.ndarray
    temporal_freqs: np.ndarray
    temporal_support: int
    spatial_support: int

    def __post_init__(self):
        self.directions_deg = np.asarray(self.directions_deg, dtype=np.float64)
        self.spatial_freqs = np.asarray(self.spatial_freqs, dtype=np.float64)
        self.temporal_freqs = np.asarray(self.temporal_freqs, dtype=np.float64)
        self._gain_cache: dict = {}
        n_dir = len(self.directions_deg)
        n_sf = len(self.spatial_freqs)
        n_tf = len(self.temporal_freqs)
        self.unit_dir_idx = np.repeat(np.arange(n_dir), n_sf * n_tf)
        self.unit_sf_idx = np.tile(np.repeat(np.arange(n_sf), n_tf), n_dir)
        self.unit_tf_idx = np.tile(np.arange(n_tf), n_dir * n_sf)

    @property
    def n_units(self) -> int:
        return len(self.directions_deg) * len(self.spatial_freqs) * len(self.temporal_freqs)

    def unit_triple(self, unit_id: int) -> tuple[float, float, float]:
        """(direction_deg, spatial_freq, temporal_freq) of one unit."""
        return (
            float(self.directions_deg[self.unit_dir_idx[unit_id]]),
            float(self.spatial_freqs[self.unit_sf_idx[unit_id]]),
            float(self.temporal_freqs[self.unit_tf_idx[unit_id]]),
        )

    def spatial_sigma(self, sf_idx: int) -> float:
        return SIGMA_PER_CYCLE / float(self.spatial_freqs[sf_idx])

    def fingerprint(self) -> str:
        parts = (
            tuple(self.directions_deg),
            tuple(self.spatial_freqs),
            tuple(self.temporal_freqs),
            self.temporal_support,
            self.spatial_support,
        )
        return format(abs(hash(parts)), "x")

    # -- spatial filters ----------------------------------------------------

    def spatial_gain(self, shape: tuple[int, int], dir_idx: int, sf_idx: int) -> np.ndarray:
        """One-sided spectral gain on the fft2 grid of ``shape`` (real array).

        The gain is a Gaussian centered at the unit's +frequency vector with a
        subtracted envelope-shaped lobe at the origin so the DC gain is
        exactly zero.
        """
        key = (shape, dir_idx, sf_idx)
        cached = self._gain_cache.get(key)
        if cached is not None:
            return cached
        h, w = shape
        f = float(self.spatial_freqs[sf_idx])
        theta = math.radians(float(self.directions_deg[dir_idx]))
        f0x, f0y = f * math.cos(theta), f * math.sin(theta)
        sigma = self.spatial_sigma(sf_idx)
        vy = np.fft.fftfreq(h)[:, None]
        vx = np.fft.fftfreq(w)[None, :]
        k = 2.0 * math.pi**2 * sigma**2
        main = np.exp(-k * ((vx - f0x) ** 2 + (vy - f0y) ** 2))
        dc = math.exp(-k * (f0x**2 + f0y**2))
        gain = main - dc * np.exp(-k * (vx**2 + vy**2))
        # unit L2 energy across scales so broadband input drives all spatial
        # frequencies equally (analytic main-lobe norm)
        gain *= math.sqrt(2.0 * k / math.pi)
        gain = gain.astype(np.float32)
        self._gain_cache[key] = gain
        return gain

    def spatial_kernel(self, dir_idx: int, sf_idx: int, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Materialized (even, odd) spatial kernels, for inspection and tests."""
        if size is None:
            size = self.spatial_support
        gain = self.spatial_gain((size, size), dir_idx, sf_idx)
        kernel = np.fft.ifft2(gain)
        kernel = np.fft.fftshift(kernel)
        return kernel.real.copy(), kernel.imag.copy()

    # -- temporal filters ---------------------------------------------------

    def temporal_kernels(self, tf_idx: int) -> tuple[np.ndarray, np.ndarray]:
        """Windowed quadrature pair (even, odd), zero-mean under the window."""
        ft = float(self.temporal_freqs[tf_idx])
        length = self.temporal_support
        t = np.arange(length) - (length - 1) / 2.0
        env = np.exp(-(t**2) / (2.0 * TEMPORAL_SIGMA**2))
        te = env * np.cos(2.0 * math.pi * ft * t)
        to = env * np.sin(2.0 * math.pi * ft * t)
        te -= env * (te.sum() / env.sum())  # envelope-weighted DC removal
        norm = math.sqrt((np.sum(te**2) + np.sum(to**2)) / 2.0)  # joint pair norm
        return te / norm, to / norm


def build_bank(
    n_directions: int = DEFAULT_DIRECTIONS,
    spatial_freqs=DEFAULT_SPATIAL_FREQS,
    temporal_freqs=DEFAULT_TEMPORAL_FREQS,
    temporal_support: int = DEFAULT_TEMPORAL_SUPPORT,
    spatial_support: int | None = None,
) -> GaborBank:
    """Build a deterministic bank; defaults give 12 x 8 x 8 = 768 units."""
    if n_directions < 2:
        raise ParameterError(f"need at least 2 directions, got {n_directions}")
    spatial_freqs = np.asarray(spatial_freqs, dtype=np.float64)
    temporal_freqs = np.asarray(temporal_freqs, dtype=np.float64)
    if len(spatial_freqs) == 0 or (spatial_freqs <= 0).any():
        raise ParameterError("spatial frequencies must be positive")
    if len(temporal_freqs) == 0 or (temporal_freqs <= 0).any():
        raise ParameterError("temporal frequencies must be positive")
    if temporal_support < 3:
        raise ParameterError(f"temporal support must be >= 3 frames, got {temporal_support}")
    if spatial_support is None:
        spatial_support = int(2 * math.ceil(2.5 * SIGMA_PER_CYCLE / spatial_freqs.min()) + 1)
    if spatial_support < 3:
        raise ParameterError(f"spatial support must be >= 3 px, got {spatial_support}")
    directions = np.arange(n_directions) * (360.0 / n_directions)
    return GaborBank(
        directions_deg=directions,
        spatial_freqs=spatial_freqs,
        temporal_freqs=temporal_freqs,
        temporal_support=temporal_support,
        spatial_support=spatial_support,
    )


@dataclass
class EnergyMaps:
    """Per-unit nonnegative activation maps at a fixed stride."""

    energies: np.ndarray  # (n_units, h, w) float32
    stride: int
    offset: int
    frame_shape: tuple[int, int]
    bank_fingerprint: str
    opponent: bool = False

    def mean_activation(self) -> np.ndarray:
        """Spatial mean per unit."""
        return self.energies.mean(axis=(1, 2))

    def peak_activation(self) -> np.ndarray:
        return self.energies.max(axis=(1, 2))


@dataclass
class UnitTuning:
    unit_id: int
    direction_deg: float
    spatial_freq: float
    temporal_freq: float
    response_std: float


def _as_gray_volume(seq) -> np.ndarray:
    if isinstance(seq, FrameSequence):
        return np.stack([raster.luma(f) for f in seq.frames])
    vol = np.asarray(seq, dtype=np.float64)
    if vol.ndim == 4:  # RGB frames
        return np.stack([raster.luma(f.astype(np.uint8)) for f in vol])
    if vol.ndim != 3:
        raise ValueError(f"expected (T, H, W) gray volume, got shape {vol.shape}")
    return vol


def _temporal_conv(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode correlation along axis 0 of a (T, h, w) volume."""
    windows = np.lib.stride_tricks.sliding_window_view(x, len(kernel), axis=0)
    return np.tensordot(windows, kernel.astype(x.dtype), axes=([3], [0]))


def motion_energy(
    seq,
    bank: GaborBank,
    stride: int = DEFAULT_STRIDE,
    opponent: bool = False,
    normalize: bool = False,
) -> EnergyMaps:
    """Per-unit motion-energy maps for a frame sequence.

    Energy is (even response)^2 + (odd response)^2 of the direction-selective
    quadrature combinations, averaged over valid temporal samples.  With
    ``opponent`` the anti-preferred unit's energy is subtracted (maps may then
    be negative).  ``normalize`` applies divisive normalization across units
    at each location with a saturation constant of 1% of the peak response.
    """
    gray = _as_gray_volume(seq)
    n_frames = gray.shape[0]
    if n_frames < bank.temporal_support:
        raise ParameterError(
            f"sequence length {n_frames} shorter than temporal support {bank.temporal_support}"
        )
    h_full, w_full = gray.shape[1:]
    offset = stride // 2
    hs = len(range(offset, h_full, stride))
    ws = len(range(offset, w_full, stride))

    # frame spectra, de-duplicated for sequences with repeated frames
    distinct: dict[bytes, int] = {}
    frame_to_distinct = np.empty(n_frames, dtype=np.int64)
    spectra = []
    for t in range(n_frames):
        key = gray[t].tobytes()
        if key not in distinct:
            distinct[key] = len(spectra)
            spectra.append(np.fft.fft2(gray[t]))
        frame_to_distinct[t] = distinct[key]

    n_dir = len(bank.directions_deg)
    n_sf = len(bank.spatial_freqs)
    n_tf = len(bank.temporal_freqs)
    kernels = [bank.temporal_kernels(i) for i in range(n_tf)]
    energies = np.empty((bank.n_units, hs, ws), dtype=np.float32)

    for d_idx, s_idx in product(range(n_dir), range(n_sf)):
        gain = bank.spatial_gain((h_full, w_full), d_idx, s_idx)
        resp_distinct = [
            np.fft.ifft2(spec * gain)[offset::stride, offset::stride].astype(np.complex64) for spec in spectra
        ]
        resp = np.stack([resp_distinct[frame_to_distinct[t]] for t in range(n_frames)])
        re, im = resp.real.astype(np.float32), resp.imag.astype(np.float32)
        for t_idx in range(n_tf):
            te, to = kernels[t_idx]
            a = _temporal_conv(re, te)
            b = _temporal_conv(im, to)
            c = _temporal_conv(re, to)
            d = _temporal_conv(im, te)
            e_pref = (a - b) ** 2 + (c + d) ** 2
            unit = (d_idx * n_sf + s_idx) * n_tf + t_idx
            energies[unit] = e_pref.mean(axis=0)

    if opponent:
        energies = energies - _opponent_partner(bank, energies)
    if normalize:
        sat = 0.01 * float(np.abs(energies).max()) + 1e-30
        denom = sat + np.abs(energies).sum(axis=0, keepdims=True)
        energies = (energies / denom).astype(np.float32)

    return EnergyMaps(
        energies=energies,
        stride=stride,
        offset=offset,
        frame_shape=(h_full, w_full),
        bank_fingerprint=bank.fingerprint(),
        opponent=opponent,
    )


def _opponent_partner(bank: GaborBank, energies: np.ndarray) -> np.ndarray:
    n_dir = len(bank.directions_deg)
    if n_dir % 2:
        raise ParameterError("opponent energy requires an even direction count")
    n_sf = len(bank.spatial_freqs)
    n_tf = len(bank.temporal_freqs)
    per_dir = n_sf * n_tf
    blocks = energies.reshape(n_dir, per_dir, *energies.shape[1:])
    partner = np.roll(blocks, n_dir // 2, axis=0)
    return partner.reshape(energies.shape)


def decode_flow(
    energy: EnergyMaps,
    bank: GaborBank,
    pool_sigma: float = 1.5,
    weight_exponent: float = 1.0,
    min_energy: float = 1e-10,
) -> FlowField:
    """Energy-weighted vector-sum decoding to a dense flow field.

    Per location, opponent-rectified unit energies weight each unit's
    direction vector scaled by its tf/sf speed; the weighted average is then
    Gaussian-pooled over space and bilinearly upsampled to frame resolution.
    Locations whose total energy is zero (below ``min_energy``, the float
    noise floor for unit-range luma input) are flagged invalid.
    """
    if energy.bank_fingerprint != bank.fingerprint():
        raise ParameterError("energy maps were computed with a different bank")
    e = energy.energies
    if not energy.opponent:
        e = e - _opponent_partner(bank, e)
    w = np.maximum(e, 0.0).astype(np.float64)
    if weight_exponent != 1.0:
        w = w**weight_exponent

    speeds = bank.temporal_freqs[bank.unit_tf_idx] / bank.spatial_freqs[bank.unit_sf_idx]
    theta = np.radians(bank.directions_deg[bank.unit_dir_idx])
    vx = speeds * np.cos(theta)
    vy = speeds * np.sin(theta)

    num_u = np.tensordot(vx, w, axes=([0], [0]))
    num_v = np.tensordot(vy, w, axes=([0], [0]))
    den = w.sum(axis=0)

    num_u = _gaussian_blur(num_u, pool_sigma)
    num_v = _gaussian_blur(num_v, pool_sigma)
    den = _gaussian_blur(den, pool_sigma)

    eps = max(1e-12 * float(den.max()), min_energy)
    valid_cells = den > eps
    with np.errstate(invalid="ignore", divide="ignore"):
        u_cells = np.where(valid_cells, num_u / den, 0.0)
        v_cells = np.where(valid_cells, num_v / den, 0.0)

    h_full, w_full = energy.frame_shape
    u = _upsample_cells(u_cells, energy, h_full, w_full)
    v = _upsample_cells(v_cells, energy, h_full, w_full)
    mask = _upsample_cells(valid_cells.astype(np.float64), energy, h_full, w_full) > 0.5
    u = np.where(mask, u, 0.0)
    v = np.where(mask, v, 0.0)
    return FlowField(u, v, mask)


def _gaussian_blur(x: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return x
    radius = max(1, int(math.ceil(3.0 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t**2) / (2.0 * sigma**2))
    k /= k.sum()
    pad_y = np.pad(x, ((radius, radius), (0, 0)), mode="edge")
    out = np.apply_along_axis(lambda col: np.convolve(col, k, mode="valid"), 0, pad_y)
    pad_x = np.pad(out, ((0, 0), (radius, radius)), mode="edge")
    return np.apply_along_axis(lambda row: np.convolve(row, k, mode="valid"), 1, pad_x)


def _upsample_cells(cells: np.ndarray, energy: EnergyMaps, h_full: int, w_full: int) -> np.ndarray:
    """Bilinear upsampling from the strided cell grid to frame resolution."""
    hs, ws = cells.shape
    ys = (np.arange(h_full) - energy.offset) / energy.stride
    xs = (np.arange(w_full) - energy.offset) / energy.stride
    ys = np.clip(ys, 0.0, hs - 1.0)
    xs = np.clip(xs, 0.0, ws - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, hs - 1)
    x1 = np.minimum(x0 + 1, ws - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = cells[np.ix_(y0, x0)] * (1 - fx) + cells[np.ix_(y0, x1)] * fx
    bottom = cells[np.ix_(y1, x0)] * (1 - fx) + cells[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def estimate_flow(
    frames,
    bank: GaborBank | None = None,
    working_width: int = DEFAULT_WORKING_WIDTH,
    stride: int = DEFAULT_STRIDE,
    pool_sigma: float = 1.5,
) -> FlowField:
    """End-to-end estimate: downsample, filter, decode, upsample, rescale.

    ``frames`` is a FrameSequence or list of HxWx3 uint8 frames.  The output
    field is at the original frame resolution in original px/frame units.
    """
    if isinstance(frames, FrameSequence):
        frames = frames.frames
    h_orig, w_orig = frames[0].shape[:2]
    if bank is None:
        bank = build_bank()
    if working_width and working_width < w_orig:
        h_work = int(round(h_orig * working_width / w_orig))
        small = [raster.resize_rgb(f, working_width, h_work) for f in frames]
        scale = w_orig / working_width
    else:
        small = list(frames)
        scale = 1.0
    gray = np.stack([raster.luma(f) for f in small])
    energy = motion_energy(gray, bank, stride=stride)
    flow_small = decode_flow(energy, bank, pool_sigma=pool_sigma)

    if scale == 1.0:
        return flow_small
    u = _resize_float(flow_small.u, w_orig, h_orig) * scale
    v = _resize_float(flow_small.v, w_orig, h_orig) * scale
    mask = _resize_float(flow_small.valid.astype(np.float64), w_orig, h_orig) > 0.5
    return FlowField(np.where(mask, u, 0.0), np.where(mask, v, 0.0), mask)


def _resize_float(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    from PIL import Image

    im = Image.fromarray(arr.astype(np.float32), mode="F")
    return np.asarray(im.resize((width, height), Image.BILINEAR), dtype=np.float64)


# ---------------------------------------------------------------------------
# Unit-level analysis
# ---------------------------------------------------------------------------


def probe_unit_tuning(bank: GaborBank, probe_frames: int = 48) -> list[UnitTuning]:
    """Tuning of every unit from drifting-grating probes on the bank's grid.

    Probes cover all (direction, sf, tf) grid combinations; the tuning triple
    is the probe maximizing the standard deviation over time of the unit's
    direction-selective even response.  Computed in closed form from the
    units' spectral gains and the temporal kernels' responses to sinusoids.
    """
    n_dir = len(bank.directions_deg)
    n_sf = len(bank.spatial_freqs)
    n_tf = len(bank.temporal_freqs)
    theta = np.radians(bank.directions_deg)

    # spatial gains of every unit-spatial filter at every probe frequency
    # vector (+k and -k): shapes (n_dir, n_sf) x (n_dir, n_sf)
    fx = bank.spatial_freqs[None, :] * np.cos(theta)[:, None]  # (dir, sf)
    fy = bank.spatial_freqs[None, :] * np.sin(theta)[:, None]
    sigma = SIGMA_PER_CYCLE / bank.spatial_freqs  # per sf
    k = 2.0 * math.pi**2 * sigma**2  # (sf,)

    def gain(unit_fx, unit_fy, k_unit, probe_fx, probe_fy):
        d2 = (probe_fx - unit_fx) ** 2 + (probe_fy - unit_fy) ** 2
        dc = np.exp(-k_unit * (unit_fx**2 + unit_fy**2))
        raw = np.exp(-k_unit * d2) - dc * np.exp(-k_unit * (probe_fx**2 + probe_fy**2))
        return raw * np.sqrt(2.0 * k_unit / math.pi)

    u_fx = fx[:, :, None, None]
    u_fy = fy[:, :, None, None]
    k_u = k[None, :, None, None]
    p_fx = fx[None, None, :, :]
    p_fy = fy[None, None, :, :]
    g_plus = gain(u_fx, u_fy, k_u, p_fx, p_fy)  # (ud, us, pd, ps)
    g_minus = gain(u_fx, u_fy, k_u, -p_fx, -p_fy)
    alpha = 0.5 * (g_plus + g_minus)
    beta = 0.5 * (g_plus - g_minus)

    # temporal statistics: variance/covariance over time of the kernels'
    # valid-mode responses to cos/sin time courses at each probe tf
    t = np.arange(probe_frames, dtype=np.float64)
    var_a = np.empty((n_tf, n_tf))
    var_b = np.empty((n_tf, n_tf))
    cov_ab = np.empty((n_tf, n_tf))
    for p_idx in range(n_tf):
        w = 2.0 * math.pi * float(bank.temporal_freqs[p_idx])
        c_seq = np.cos(w * t)
        s_seq = np.sin(w * t)
        for u_idx in range(n_tf):
            te, to = bank.temporal_kernels(u_idx)
            a_seq = np.convolve(c_seq, te[::-1], mode="valid")  # correlation
            b_seq = np.convolve(s_seq, to[::-1], mode="valid")
            var_a[u_idx, p_idx] = a_seq.var()
            var_b[u_idx, p_idx] = b_seq.var()
            cov_ab[u_idx, p_idx] = ((a_seq - a_seq.mean()) * (b_seq - b_seq.mean())).mean()

    # std stat per (unit spatial, unit tf, probe spatial, probe tf)
    a2 = (alpha**2)[:, :, None, :, :, None]
    b2 = (beta**2)[:, :, None, :, :, None]
    ab = (alpha * beta)[:, :, None, :, :, None]
    va = var_a[None, None, :, None, None, :]
    vb = var_b[None, None, :, None, None, :]
    cab = cov_ab[None, None, :, None, None, :]
    stat = np.sqrt(np.maximum(a2 * va + b2 * vb + 2.0 * ab * cab, 0.0))
    # axes: (unit_dir, unit_sf, unit_tf, probe_dir, probe_sf, probe_tf)

    tunings = []
    flat = stat.reshape(n_dir, n_sf, n_tf, -1)
    for d_idx, s_idx, t_idx in product(range(n_dir), range(n_sf), range(n_tf)):
        best = int(np.argmax(flat[d_idx, s_idx, t_idx]))
        pd, ps, pt = np.unravel_index(best, (n_dir, n_sf, n_tf))
        unit_id = (d_idx * n_sf + s_idx) * n_tf + t_idx
        tunings.append(
            UnitTuning(
                unit_id=unit_id,
                direction_deg=float(bank.directions_deg[pd]),
                spatial_freq=float(bank.spatial_freqs[ps]),
                temporal_freq=float(bank.temporal_freqs[pt]),
                response_std=float(flat[d_idx, s_idx, t_idx][best]),
            )
        )
    return tunings


def rank_rotation_units(
    e_rot: EnergyMaps,
    e_static: EnergyMaps,
    top_frac: float = 0.25,
    use_peak: bool = False,
) -> list[int]:
    """Units most sensitive to rotation: top 25% by |activation difference|
    between veridical rotation and static control, keeping only those more
    strongly activated by rotation.  Returns sorted unit ids."""
    if e_rot.bank_fingerprint != e_static.bank_fingerprint:
        raise ParameterError("energy maps come from different banks")
    if e_rot.energies.shape != e_static.energies.shape:
        raise ParameterError("energy map shapes differ")
    act_rot = e_rot.peak_activation() if use_peak else e_rot.mean_activation()
    act_static = e_static.peak_activation() if use_peak else e_static.mean_activation()
    diff = act_rot.astype(np.float64) - act_static.astype(np.float64)
    n_top = int(math.ceil(top_frac * len(diff)))
    order = np.argsort(-np.abs(diff), kind="stable")
    top = order[:n_top]
    retained = [int(u) for u in top if diff[u] > 0.0]
    return sorted(retained)


def tunings_to_csv(tunings: list[UnitTuning], path) -> None:
    lines = ["unit,direction_deg,spatial_freq,temporal_freq,response_std"]
    for t in tunings:
        lines.append(
            f"{t.unit_id},{t.direction_deg:g},{t.spatial_freq:.8g},{t.temporal_freq:.8g},{t.response_std:.8g}"
        )
    from pathlib import Path

    Path(path).write_text("\n".join(lines) + "\n")


def rankings_to_csv(unit_ids: list[int], bank: GaborBank, e_rot: EnergyMaps, e_static: EnergyMaps, path) -> None:
    """Retained rotation-sensitive units with their tuning and activations."""
    rot_mean = e_rot.mean_activation()
    static_mean = e_static.mean_activation()
    lines = ["unit,direction_deg,spatial_freq,temporal_freq,rotation_activation,static_activation"]
    for u in unit_ids:
        d, sf, tf = bank.unit_triple(u)
        lines.append(f"{u},{d:g},{sf:.8g},{tf:.8g},{rot_mean[u]:.8g},{static_mean[u]:.8g}")
    from pathlib import Path

    Path(path).write_text("\n".join(lines) + "\n")
