"""Command-line interface.

Exit codes: 0 success, 1 configuration/usage error, 2 run completed with
partial per-cell failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from illusionflow import flowio, raster, stimgen
from illusionflow.harness import (
    BUILTIN_MODEL,
    ConfigError,
    SuiteConfig,
    build_sequence,
    run_gsweep,
    run_suite,
    score_cell,
)
from illusionflow.meflow import (
    build_bank,
    estimate_flow,
    motion_energy,
    probe_unit_tuning,
    rank_rotation_units,
    rankings_to_csv,
    tunings_to_csv,
)
from illusionflow.metrics import ScoreReport
from illusionflow.percept import PerceptTarget, target_flow
from illusionflow.stimgen import StimulusSpec
from illusionflow.viewsim import FrameSequence, ViewingCondition, default_shift_frames


def _add_stimulus_args(p):
    p.add_argument("--family", default="rotating_snakes", choices=stimgen.FAMILIES)
    p.add_argument("--scheme", default="grayscale", choices=stimgen.COLOR_SCHEMES)
    p.add_argument("--sense", default="ccw", choices=stimgen.SENSES)
    p.add_argument("--g1", type=float, default=0.25)
    p.add_argument("--g2", type=float, default=0.75)
    p.add_argument("--rings", type=int, default=6)
    p.add_argument("--elements", type=int, default=24)
    p.add_argument("--canvas", type=int, default=1506)
    p.add_argument("--margin", type=int, default=120)
    p.add_argument("--supersample", type=int, default=1)
    p.add_argument("--permutation", default=None, help="control permutation, e.g. 0,2,1,3")


def _spec_from_args(args) -> StimulusSpec:
    perm = None
    if args.permutation:
        perm = tuple(int(v) for v in args.permutation.split(","))
    return StimulusSpec(
        family=args.family,
        color_scheme=args.scheme,
        sense=args.sense,
        g1=args.g1,
        g2=args.g2,
        rings=args.rings,
        elements_per_ring=args.elements,
        canvas_px=args.canvas,
        margin_px=args.margin,
        supersample=args.supersample,
        control_permutation=perm,
    )


def cmd_gen_stimulus(args) -> int:
    spec = _spec_from_args(args)
    img = stimgen.render(spec, control=args.control)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stimgen.save_stimulus(img, spec, out, control=args.control)
    print(f"wrote {out} ({spec.stimulus_id(control=args.control)})")
    return 0


def cmd_gen_sequence(args) -> int:
    image = raster.load_png(args.image)
    shift_frames = ()
    if args.shift_frames:
        shift_frames = tuple(int(v) for v in args.shift_frames.split(","))
    elif args.n_shifts:
        shift_frames = default_shift_frames(args.n_frames, args.n_shifts)
    condition = ViewingCondition(
        kind=args.kind,
        n_frames=args.n_frames,
        delta_px=args.delta,
        direction_deg=args.direction,
        shift_frames=shift_frames,
        onset_frame=args.onset_frame,
        omega=args.omega,
        seed=args.seed,
    )
    seq = build_sequence(image, condition)
    seq.save(args.out)
    if args.gif:
        seq.to_gif(args.gif, fixation_cross=args.fixation_cross)
    print(f"wrote {args.out} ({condition.condition_id()}, {len(seq.events)} events)")
    return 0


def cmd_gen_target(args) -> int:
    center = None
    if args.center:
        cx, cy = args.center.split(",")
        center = (float(cx), float(cy))
    else:
        center = ((args.width - 1) / 2.0, (args.height - 1) / 2.0)
    radius = args.radius if args.radius else (min(args.width, args.height) - 2 * args.margin) / 2.0
    target = PerceptTarget(
        center=center,
        radius=radius,
        boundary_speed=args.m,
        gamma=args.gamma,
        sense=args.sense,
        width=args.width,
        height=args.height,
    )
    flowio.write_flow(target_flow(target), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_estimate(args) -> int:
    seq = FrameSequence.load(args.frames)
    bank = build_bank()
    flow = estimate_flow(seq, bank, working_width=args.working_width, stride=args.stride)
    flowio.write_flow(flow, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_score(args) -> int:
    flow = flowio.read_flow(args.flow)
    target = flowio.read_flow(args.target)
    report = score_cell(flow, target, args.model, args.stimulus, args.condition)
    print(f"rho={report.rho:.6f} degenerate={report.degenerate} epe={report.mean_epe:.6f} ae={report.mean_ae:.6f}")
    if args.csv:
        path = Path(args.csv)
        new = not path.exists()
        with open(path, "a") as fp:
            if new:
                fp.write(ScoreReport.CSV_HEADER + "\n")
            fp.write(report.csv_row() + "\n")
    return 0


def cmd_run_suite(args) -> int:
    cfg = SuiteConfig.from_file(args.config)
    store = run_suite(cfg, args.out)
    print(f"{len(store.reports)} cells scored, {len(store.errors)} errors -> {args.out}")
    return 2 if store.had_errors else 0


def cmd_run_gsweep(args) -> int:
    cfg = SuiteConfig.from_file(args.config)
    store = run_gsweep(cfg, args.out)
    print(f"{len(store.reports)} cells scored, {len(store.errors)} errors -> {args.out}")
    return 2 if store.had_errors else 0


def cmd_probe_units(args) -> int:
    bank = build_bank(n_directions=args.directions)
    tunings = probe_unit_tuning(bank)
    tunings_to_csv(tunings, args.out)
    print(f"wrote {args.out} ({len(tunings)} units)")
    return 0


def cmd_rank_units(args) -> int:
    from illusionflow import raster as rst

    bank = build_bank()

    def gray_volume(seq_dir):
        seq = FrameSequence.load(seq_dir)
        frames = seq.frames
        h, w = frames[0].shape[:2]
        if args.working_width and args.working_width < w:
            hw = int(round(h * args.working_width / w))
            frames = [rst.resize_rgb(f, args.working_width, hw) for f in frames]
        import numpy as np

        return np.stack([rst.luma(f) for f in frames])

    e_rot = motion_energy(gray_volume(args.rot_frames), bank, stride=args.stride)
    e_static = motion_energy(gray_volume(args.static_frames), bank, stride=args.stride)
    retained = rank_rotation_units(e_rot, e_static, use_peak=args.peak)
    rankings_to_csv(retained, bank, e_rot, e_static, args.out)
    print(f"wrote {args.out} ({len(retained)} rotation-sensitive units)")
    return 0


def cmd_viz_flow(args) -> int:
    flow = flowio.read_flow(args.flow)
    img = flowio.flow_to_png(flow, normalize=not args.scale, scale=args.scale)
    raster.save_png(img, args.out)
    if args.legend:
        raster.save_png(flowio.wheel_legend(), args.legend)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="illusionflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-stimulus", help="render an illusion or control image plus manifest")
    _add_stimulus_args(p)
    p.add_argument("--control", action="store_true", help="render the permuted control")
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=cmd_gen_stimulus)

    p = sub.add_parser("gen-sequence", help="simulate a viewing condition as a frame sequence")
    p.add_argument("--image", required=True)
    p.add_argument("--kind", default="static", choices=("static", "onset", "shift", "random_slip", "peripheral_shift", "veridical_rotation"))
    p.add_argument("--n-frames", type=int, default=15)
    p.add_argument("--delta", type=int, default=30)
    p.add_argument("--direction", type=int, default=225)
    p.add_argument("--shift-frames", default="", help="comma list of frame indices")
    p.add_argument("--n-shifts", type=int, default=0, help="evenly place this many shifts")
    p.add_argument("--onset-frame", type=int, default=3)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gif", default=None, help="also export an animated demo")
    p.add_argument("--fixation-cross", action="store_true")
    p.add_argument("--out", required=True, help="output sequence directory")
    p.set_defaults(func=cmd_gen_sequence)

    p = sub.add_parser("gen-target", help="write the rotational percept target flow")
    p.add_argument("--width", type=int, default=1506)
    p.add_argument("--height", type=int, default=1506)
    p.add_argument("--center", default=None, help="cx,cy (default canvas center)")
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--margin", type=int, default=120, help="used when radius is unset")
    p.add_argument("--m", type=float, default=1.0, help="boundary flow magnitude px/frame")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--sense", default="ccw", choices=("ccw", "cw"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_target)

    p = sub.add_parser("estimate", help="run the built-in motion-energy estimator on a sequence")
    p.add_argument("--frames", required=True, help="sequence directory (frame_*.png + manifest)")
    p.add_argument("--working-width", type=int, default=448)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--out", required=True, help="output flow file")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("score", help="score a predicted flow file against a target flow file")
    p.add_argument("--flow", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--model", default="external")
    p.add_argument("--stimulus", default="stimulus")
    p.add_argument("--condition", default="condition")
    p.add_argument("--csv", default=None, help="append the report row to this CSV")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run-suite", help="run the configured evaluation grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_suite)

    p = sub.add_parser("run-gsweep", help="run the luminance sweep against behavioral reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_gsweep)

    p = sub.add_parser("probe-units", help="probe unit tunings and write them as CSV")
    p.add_argument("--directions", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe_units)

    p = sub.add_parser("rank-units", help="rank units by rotation vs static activation difference")
    p.add_argument("--rot-frames", required=True, help="veridical-rotation sequence directory")
    p.add_argument("--static-frames", required=True, help="static sequence directory")
    p.add_argument("--working-width", type=int, default=448)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--peak", action="store_true", help="rank by peak instead of mean activation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_units)

    p = sub.add_parser("viz-flow", help="render a flow file with the color wheel")
    p.add_argument("--flow", required=True)
    p.add_argument("--scale", type=float, default=None, help="fixed magnitude scale (default: normalize)")
    p.add_argument("--legend", default=None, help="also write the wheel legend PNG")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_viz_flow)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (stimgen.ParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
