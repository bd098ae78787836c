"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Tolerances are pinned here and not loosened elsewhere.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import shutil
import time
from contextlib import contextmanager

import numpy as np
import pytest

from illusionflow.flowio import read_flow, write_flow
from illusionflow.harness import SuiteConfig, build_sequence, cell_target, condition_grid, score_external, stimulus_grid
from illusionflow.meflow import build_bank, decode_flow, estimate_flow, motion_energy, probe_unit_tuning
from illusionflow.metrics import ae, correlation, correlation_with_flag, epe, wilcoxon_one_sided
from illusionflow.percept import FlowField, PerceptTarget, target_flow
from illusionflow.stimgen import StimulusSpec, micropattern, render_control, render_snakes, unit_regions
from illusionflow.viewsim import (
    ViewingCondition,
    make_onset,
    make_shift,
    make_static,
    make_veridical_rotation,
    rotate_about_center,
    sample_slip_events,
)

from helpers import random_field


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


def _naive_all_metrics(p, r):
    """Single-pass scalar-loop oracle for corr, mean EPE, and mean AE."""
    pu, pv = p.u.tolist(), p.v.tolist()
    ru, rv = r.u.tolist(), r.v.tolist()
    pm = (p.valid & r.valid).tolist()
    inner = np2 = nr2 = epe_sum = ae_sum = 0.0
    n = 0
    for i in range(len(pu)):
        prow_u, prow_v, rrow_u, rrow_v, mrow = pu[i], pv[i], ru[i], rv[i], pm[i]
        for j in range(len(prow_u)):
            if not mrow[j]:
                continue
            a, b = prow_u[j], prow_v[j]
            c, d = rrow_u[j], rrow_v[j]
            inner += a * c + b * d
            np2 += a * a + b * b
            nr2 += c * c + d * d
            epe_sum += math.sqrt((a - c) ** 2 + (b - d) ** 2)
            num = 1.0 + a * c + b * d
            den = math.sqrt(1.0 + a * a + b * b) * math.sqrt(1.0 + c * c + d * d)
            ae_sum += math.acos(min(1.0, max(-1.0, num / den)))
            n += 1
    denom = math.sqrt(np2) * math.sqrt(nr2)
    rho = 0.0 if denom < 1e-12 else inner / denom
    return rho, epe_sum / n, ae_sum / n


def test_metric_oracle_equivalence():
    with criterion("metric oracle equivalence (1000 random pairs, corr/EPE 1e-12, AE 1e-10, <10 s)"):
        rng = np.random.default_rng(2024)
        t0 = time.time()
        for _ in range(1000):
            h, w = rng.integers(8, 65, size=2)
            p = random_field(rng, h, w, with_invalid=True)
            r = random_field(rng, h, w, with_invalid=True)
            rho_o, epe_o, ae_o = _naive_all_metrics(p, r)
            assert abs(correlation(p, r) - rho_o) <= 1e-12
            assert abs(epe(p, r) - epe_o) <= 1e-12
            assert abs(ae(p, r) - ae_o) <= 1e-10
        elapsed = time.time() - t0
        assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f}s"


def test_correlation_endpoints():
    with criterion("normalized-correlation endpoints (+1, -1, 0 within 1e-12)"):
        rng = np.random.default_rng(7)
        p = random_field(rng, 32, 32)
        assert abs(correlation(p, p) - 1.0) <= 1e-12
        assert abs(correlation(p, FlowField(-p.u, -p.v, p.valid)) + 1.0) <= 1e-12
        a = FlowField(np.ones((16, 16)), np.zeros((16, 16)), np.ones((16, 16), bool))
        b = FlowField(np.zeros((16, 16)), np.ones((16, 16)), np.ones((16, 16), bool))
        assert abs(correlation(a, b)) <= 1e-12


def test_percept_target_rigidity():
    with criterion("percept target rigidity (radial <= 1e-9 M, divergence <= 1e-6 M/px)"):
        m = 2.0
        t = PerceptTarget(center=(511.5, 511.5), radius=420.0, boundary_speed=m, width=1024, height=1024)
        f = target_flow(t)
        y, x = np.mgrid[0:1024, 0:1024].astype(float)
        dx, dy = x - 511.5, y - 511.5
        r = np.hypot(dx, dy)
        with np.errstate(invalid="ignore"):
            radial = (f.u * dx + f.v * dy) / np.where(r == 0, 1.0, r)
        assert np.abs(radial[f.valid]).max() <= 1e-9 * m
        div = np.zeros_like(f.u)
        div[1:-1, 1:-1] = (f.u[1:-1, 2:] - f.u[1:-1, :-2]) / 2.0 + (f.v[2:, 1:-1] - f.v[:-2, 1:-1]) / 2.0
        interior = r <= t.radius - 2.0
        assert np.abs(div[interior]).max() <= 1e-6 * m


def test_stimulus_invariants():
    with criterion("stimulus invariants (histograms exact, rotation/mirror <= 2/255, < 60 s)"):
        t0 = time.time()
        for scheme in ("grayscale", "blue_yellow", "red_green"):
            spec = StimulusSpec(color_scheme=scheme)
            ill = render_snakes(spec)
            ctrl = render_control(spec)

            # per-unit histogram equality, exact: same color set in each unit
            for _, _, mask in unit_regions(spec):
                vi = np.unique(ill[mask].reshape(-1, 3), axis=0)
                vc = np.unique(ctrl[mask].reshape(-1, 3), axis=0)
                assert np.array_equal(vi, vc)

            # rotation by one element period matches within raster tolerance
            rot = rotate_about_center(ill, 360.0 / spec.elements_per_ring)
            assert np.abs(rot.astype(float) - ill.astype(float)).mean() / 255.0 <= 2.0 / 255.0

            # cw render mirrors the ccw render
            cw = render_snakes(StimulusSpec(color_scheme=scheme, sense="cw"))
            assert np.abs(cw.astype(float) - ill[:, ::-1].astype(float)).mean() / 255.0 <= 2.0 / 255.0
        elapsed = time.time() - t0
        assert elapsed < 60.0, f"stimulus grid took {elapsed:.1f}s"


def test_sequence_contracts():
    with criterion("sequence contracts (static/onset/shift events, slip uniformity 3 sigma)"):
        spec = StimulusSpec(canvas_px=362, margin_px=60)
        img = render_snakes(spec)

        static = make_static(img, 15)
        assert all(np.array_equal(f, img) for f in static.frames)

        onset = make_onset(img, 15, 3)
        transitions = sum(
            1 for a, b in zip(onset.frames, onset.frames[1:]) if not np.array_equal(a, b)
        )
        assert transitions == 1

        cond = ViewingCondition(kind="shift", n_frames=15, delta_px=15, direction_deg=225, shift_frames=(4, 8, 12))
        seq = make_shift(img, cond)
        assert len(seq.events) <= 3

        def origin(frame):
            ys, xs = np.nonzero(np.any(frame != 255, axis=2))
            return int(xs.min()), int(ys.min())

        x0, y0 = origin(seq.frames[0])
        x1, y1 = origin(seq.frames[-1])
        assert (x1 - x0, y1 - y0) == seq.total_displacement()

        counts = {d: 0 for d in range(0, 360, 45)}
        n_events = 0
        for seed in range(1000):
            for _, dx, dy in sample_slip_events(15, seed):
                angle = int(round(math.degrees(math.atan2(np.sign(dy), np.sign(dx))))) % 360
                counts[angle] += 1
                n_events += 1
        p = 1.0 / 8.0
        sigma = math.sqrt(n_events * p * (1 - p))
        for d, count in counts.items():
            assert abs(count - n_events * p) <= 3 * sigma, (d, count, n_events)


def test_builtin_estimator_sanity():
    with criterion("built-in estimator (translation <= 15 deg / 30%, rotation rho >= 0.5, static |rho| <= 0.1)"):
        bank = build_bank()

        # synthetic translation of textured noise at 2 px/frame
        rng = np.random.default_rng(0)
        big = rng.random((200, 320))
        k = np.exp(-np.arange(-6, 7) ** 2 / (2 * 2.0**2))
        k /= k.sum()
        big = np.apply_along_axis(lambda r: np.convolve(r, k, "same"), 1, big)
        big = np.apply_along_axis(lambda c: np.convolve(c, k, "same"), 0, big)
        big = (big - big.min()) / (big.max() - big.min())
        frames = np.stack([big[30:158, 40 + 2 * t : 168 + 2 * t] for t in range(15)])  # content moves left
        em = motion_energy(frames, bank, stride=4)
        flow = decode_flow(em, bank)
        c = flow.valid.copy()
        c[:16] = False
        c[-16:] = False
        c[:, :16] = False
        c[:, -16:] = False
        mu, mv = flow.u[c].mean(), flow.v[c].mean()
        direction_error = abs((math.degrees(math.atan2(mv, mu)) - 180.0 + 180.0) % 360.0 - 180.0)
        speed = math.hypot(mu, mv)
        assert direction_error <= 15.0, f"direction error {direction_error:.1f} deg"
        assert abs(speed - 2.0) <= 0.3 * 2.0, f"speed {speed:.2f} px/frame"

        # veridical rotation of the full-size stimulus, boundary speed ~2 px/frame
        spec = StimulusSpec()
        img = render_snakes(spec)
        omega = math.degrees(2.0 / spec.disk_radius)
        t0 = time.time()
        seq = make_veridical_rotation(img, omega, 15)
        flow_rot = estimate_flow(seq, bank)
        per_sequence = time.time() - t0
        target = target_flow(
            PerceptTarget(
                center=spec.center,
                radius=spec.disk_radius,
                boundary_speed=2.0,
                width=spec.canvas_px,
                height=spec.canvas_px,
            )
        )
        rho_rot, _ = correlation_with_flag(flow_rot, target)
        assert rho_rot >= 0.5, f"veridical rho {rho_rot:.3f}"
        assert per_sequence <= 120.0, f"sequence pipeline took {per_sequence:.0f}s"

        flow_static = estimate_flow(make_static(img, 15), bank)
        rho_static, _ = correlation_with_flag(flow_static, target)
        assert abs(rho_static) <= 0.1, f"static rho {rho_static:.3f}"


def test_unit_probe_round_trip():
    with criterion("unit probe round trip (>= 95% recover their grid triple)"):
        bank = build_bank()
        tunings = probe_unit_tuning(bank)
        hits = sum(
            1
            for t in tunings
            if (t.direction_deg, t.spatial_freq, t.temporal_freq) == bank.unit_triple(t.unit_id)
        )
        assert hits >= 0.95 * bank.n_units, f"{hits}/{bank.n_units}"


def _enumerate_signed_rank(samples, alternative):
    d = [x for x in samples if x != 0.0]
    n = len(d)
    absd = [abs(x) for x in d]
    order = sorted(range(n), key=lambda i: absd[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and absd[order[j + 1]] == absd[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = 0.5 * (i + j) + 1.0
        i = j + 1
    w_obs = sum(ranks[i] for i in range(n) if d[i] > 0)
    count = 0
    for mask in range(2**n):
        w = sum(ranks[i] for i in range(n) if mask & (1 << i))
        if alternative == "greater" and w >= w_obs - 1e-9:
            count += 1
        elif alternative == "less" and w <= w_obs + 1e-9:
            count += 1
    return count / 2**n


def test_wilcoxon_exactness():
    with criterion("signed-rank exactness (n <= 10 enumeration equality, all-positive n=10 -> 1/1024)"):
        rng = np.random.default_rng(11)
        for n in range(5, 11):
            for trial in range(25):
                samples = rng.normal(0.2, 1.0, n)
                if trial % 3 == 0:  # inject ties in |d|
                    samples[0] = -samples[1]
                for alt in ("greater", "less"):
                    assert wilcoxon_one_sided(samples, alt) == _enumerate_signed_rank(samples, alt)
        assert wilcoxon_one_sided(np.arange(1.0, 11.0), "greater") == 1.0 / 1024.0


def test_flow_file_round_trip(tmp_path):
    with criterion("flow file round trip (100 random fields, bit-exact, sentinel masks)"):
        rng = np.random.default_rng(5)
        for i in range(100):
            h, w = rng.integers(4, 40, size=2)
            f = random_field(rng, h, w, with_invalid=True)
            p1 = tmp_path / f"f{i}.flo"
            p2 = tmp_path / f"g{i}.flo"
            write_flow(f, p1)
            back = read_flow(p1)
            write_flow(back, p2)
            assert p1.read_bytes() == p2.read_bytes()
            assert np.array_equal(back.valid, f.valid)


def test_external_rescoring_not_desk_scale_reproduction(tmp_path):
    # The published model grids (trained-network correlations, ablations, and
    # their significance tests) need pretrained weights and are out of scope;
    # the harness instead proves deterministic re-scoring of archived flow
    # files, so those grids regenerate whenever predictions are supplied.
    with criterion("external re-scoring determinism (self-scoring rho = 1)"):
        cfg = SuiteConfig(
            canvas=302,
            margin=24,
            n_frames=12,
            conditions=("static", "onset"),
            include_controls=True,
        )
        from illusionflow import stimgen as sg

        flow_dir = tmp_path / "flows"
        for spec, is_control in stimulus_grid(cfg):
            stim_id = spec.stimulus_id(control=is_control)
            image = sg.render(spec, control=is_control)
            for condition in condition_grid(cfg):
                seq = build_sequence(image, condition)
                target = cell_target(spec, condition, seq, cfg)
                cell = flow_dir / stim_id / condition.condition_id()
                cell.mkdir(parents=True)
                write_flow(target, cell / "flow.flo")
        first = score_external(flow_dir, cfg)
        second = score_external(flow_dir, cfg)
        assert first and all(hasattr(r, "rho") for r in first)
        for r in first:
            assert abs(r.rho - 1.0) <= 1e-12
            assert r.mean_epe == 0.0
            assert r.mean_ae == 0.0
        assert [r.csv_row() for r in first] == [r.csv_row() for r in second]
