import numpy as np
import pytest

from illusionflow.flowio import (
    INVALID_SENTINEL,
    FlowFormatError,
    flow_to_png,
    read_flow,
    wheel_legend,
    write_flow,
)
from illusionflow.percept import FlowField, PerceptTarget, target_flow

from helpers import random_field


def test_round_trip_bytes(tmp_path):
    rng = np.random.default_rng(0)
    f = random_field(rng, 13, 9, with_invalid=True)
    p1 = tmp_path / "a.flo"
    p2 = tmp_path / "b.flo"
    write_flow(f, p1)
    back = read_flow(p1)
    write_flow(back, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(back.valid, f.valid)
    # float32 quantization only
    assert np.allclose(back.u, f.u, atol=1e-5, rtol=1e-6)


def test_round_trip_exact_for_float32_values(tmp_path):
    rng = np.random.default_rng(1)
    f = random_field(rng, 8, 8, with_invalid=True)
    f32 = FlowField(f.u.astype(np.float32).astype(np.float64), f.v.astype(np.float32).astype(np.float64), f.valid)
    path = tmp_path / "f.flo"
    write_flow(f32, path)
    back = read_flow(path)
    assert np.array_equal(back.u, f32.u)
    assert np.array_equal(back.v, f32.v)
    assert np.array_equal(back.valid, f32.valid)


def test_empty_field(tmp_path):
    f = FlowField(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0), bool))
    path = tmp_path / "empty.flo"
    write_flow(f, path)
    assert path.stat().st_size == 12
    back = read_flow(path)
    assert back.width == 0 and back.height == 0


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.flo"
    path.write_bytes(b"XXXX" + b"\x00" * 8)
    with pytest.raises(FlowFormatError):
        read_flow(path)


def test_truncated_body(tmp_path):
    rng = np.random.default_rng(2)
    path = tmp_path / "t.flo"
    write_flow(random_field(rng, 4, 4), path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FlowFormatError):
        read_flow(path)


def test_non_finite_rejected(tmp_path):
    u = np.zeros((2, 2))
    mask = np.ones((2, 2), bool)
    mask[0, 0] = False
    u[0, 0] = np.nan
    f = FlowField(u, np.zeros((2, 2)), mask)
    with pytest.raises(FlowFormatError):
        write_flow(f, tmp_path / "nan.flo")

    import struct

    path = tmp_path / "inf.flo"
    body = np.full((1, 1, 2), np.inf, dtype="<f4")
    path.write_bytes(b"PIEH" + struct.pack("<ii", 1, 1) + body.tobytes())
    with pytest.raises(FlowFormatError):
        read_flow(path)


def test_sentinel_restores_mask(tmp_path):
    f = FlowField(np.ones((3, 3)), np.ones((3, 3)), np.ones((3, 3), bool))
    f.valid[1, 1] = False
    f.u[1, 1] = 0.0
    f.v[1, 1] = 0.0
    path = tmp_path / "s.flo"
    write_flow(f, path)
    raw = np.frombuffer(path.read_bytes()[12:], dtype="<f4").reshape(3, 3, 2)
    assert raw[1, 1, 0] == np.float32(INVALID_SENTINEL)
    back = read_flow(path)
    assert not back.valid[1, 1]
    assert back.u[1, 1] == 0.0


# ---------------------------------------------------------------------------
# Visualization
# ---------------------------------------------------------------------------


def test_uniform_flow_single_hue_full_brightness():
    f = FlowField(np.full((16, 16), 2.0), np.zeros((16, 16)), np.ones((16, 16), bool))
    img = flow_to_png(f, normalize=True)
    assert (img == img[0, 0]).all()
    # rightward flow anchors at red, full brightness
    assert img[0, 0, 0] == 255 and img[0, 0, 2] == 0


def test_ccw_target_hue_completes_wheel_cycle():
    from illusionflow.flowio import _WHEEL

    t = PerceptTarget(center=(63.5, 63.5), radius=50.0, width=128, height=128)
    f = target_flow(t)
    img = flow_to_png(f, normalize=True)
    # sample rendered colors around a circle and map each back to its nearest
    # wheel entry; the indices must progress monotonically through one full
    # cycle of the wheel
    n_wheel = len(_WHEEL)
    angles = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    xs = (63.5 + 40 * np.cos(angles)).round().astype(int)
    ys = (63.5 - 40 * np.sin(angles)).round().astype(int)
    indices = []
    for x, y in zip(xs, ys):
        color = img[y, x].astype(float)
        color /= max(color.max(), 1.0)  # undo brightness scaling
        indices.append(int(np.argmin(np.linalg.norm(_WHEEL - color, axis=1))))
    steps = np.diff(indices + [indices[0]]) % n_wheel
    # monotone cyclic progression: every step advances forward a little
    assert (steps < n_wheel // 2).all()
    assert steps.sum() == n_wheel


def test_zero_field_normalized_is_black():
    f = FlowField.zeros(8, 8)
    img = flow_to_png(f, normalize=True)
    assert (img == 0).all()


def test_scale_invariance_normalized():
    rng = np.random.default_rng(3)
    f = random_field(rng, 12, 12)
    base = flow_to_png(f, normalize=True)
    for a in (2.0, 0.5, 4.0):  # power-of-two scalings are exact in float
        scaled = FlowField(a * f.u, a * f.v, f.valid)
        assert np.array_equal(flow_to_png(scaled, normalize=True), base)


def test_invalid_pixels_black_and_all_invalid_error():
    f = FlowField(np.ones((4, 4)), np.zeros((4, 4)), np.ones((4, 4), bool))
    f.valid[2, 2] = False
    img = flow_to_png(f, normalize=True)
    assert (img[2, 2] == 0).all()
    with pytest.raises(ValueError):
        flow_to_png(FlowField.zeros(4, 4, valid=False))


def test_unnormalized_requires_scale():
    f = FlowField(np.ones((4, 4)), np.zeros((4, 4)), np.ones((4, 4), bool))
    with pytest.raises(ValueError):
        flow_to_png(f, normalize=False)
    img = flow_to_png(f, normalize=False, scale=2.0)
    assert img.max() <= 128


def test_wheel_legend():
    img = wheel_legend(101)
    assert img.shape == (101, 101, 3)
    assert (img[0, 0] == 255).all()  # white corners
    assert (img[50, 50] == 0).all()  # zero magnitude at center
