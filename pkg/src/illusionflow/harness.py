"""Config-driven experiment runner: stimulus/condition grids, scoring, stats.

A suite expands a declarative config into (stimulus, condition, model) cells,
obtains flow per model (built-in estimator or external flow files laid out as
``<flow_dir>/<stimulus_id>/<condition_id>/flow.flo``), scores each prediction
against the percept target, and persists reports plus heatmap tables.

The percept target for a cell is the rotational field centered on the disk at
its final position (after all logged shifts): the illusory rotation is scored
where the stimulus ends up, with no translational component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from illusionflow import __version__
from illusionflow import manifest as mf
from illusionflow import stimgen
from illusionflow.flowio import read_flow, write_flow
from illusionflow.meflow import DEFAULT_STRIDE, DEFAULT_WORKING_WIDTH, build_bank, estimate_flow
from illusionflow.metrics import ScoreReport, score_fields, wilcoxon_one_sided
from illusionflow.percept import FlowField, PerceptTarget, behavioral_target, target_flow
from illusionflow.stimgen import StimulusSpec
from illusionflow.viewsim import (
    PERIPHERAL_DEFAULT_OFFSET,
    PERIPHERAL_STIMULUS_PX,
    FrameSequence,
    ViewingCondition,
    default_shift_frames,
    make_onset,
    make_peripheral,
    make_random_slip,
    make_shift,
    make_static,
    make_veridical_rotation,
)

BUILTIN_MODEL = "builtin"


class ConfigError(ValueError):
    """Invalid or inconsistent suite configuration."""


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


@dataclass
class SuiteConfig:
    """Expanded-grid description of one evaluation run."""

    families: tuple = ("rotating_snakes",)
    schemes: tuple = ("grayscale",)
    senses: tuple = ("ccw",)
    g1: float = 0.25
    g2: float = 0.75
    rings: int = 6
    elements: int = 24
    canvas: int = 1506
    margin: int = 120
    include_controls: bool = True
    control_permutation: tuple = (0, 2, 1, 3)

    conditions: tuple = ("static", "onset", "shift")
    deltas: tuple = (15, 30, 60, 90, 120)
    directions: tuple = (225,)
    n_frames: int = 15
    onset_blank: int = 3
    n_shifts: int = 1
    omega: float = 0.0  # 0 -> derived from target_m at the disk boundary
    n_random_seeds: int = 100

    target_m: float = 1.0
    target_gamma: float = 1.0

    models: tuple = (BUILTIN_MODEL,)
    external_flow_dirs: dict = field(default_factory=dict)

    working_width: int = DEFAULT_WORKING_WIDTH
    stride: int = DEFAULT_STRIDE

    seed: int = 0
    figures: bool = False
    export_cells: bool = False
    max_workers: int = 1
    allow_nonstandard_delta: bool = False

    gsweep_points: tuple = ()  # (g1, g2, report) triples

    def __post_init__(self):
        for fam in self.families:
            if fam not in stimgen.FAMILIES:
                raise ConfigError(f"unknown family {fam!r}")
        for scheme in self.schemes:
            if scheme not in stimgen.COLOR_SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}")
        for kind in self.conditions:
            if kind not in ("static", "onset", "shift", "random_slip", "peripheral_shift", "veridical_rotation"):
                raise ConfigError(f"unknown condition kind {kind!r}")
        for model in self.models:
            if model != BUILTIN_MODEL and model not in self.external_flow_dirs:
                raise ConfigError(f"model {model!r} has no external flow directory")
        if not self.models:
            raise ConfigError("at least one model required")

    @classmethod
    def from_file(cls, path) -> "SuiteConfig":
        try:
            entries = mf.read_manifest(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(entries)

    @classmethod
    def from_dict(cls, entries: dict) -> "SuiteConfig":
        kw = {}
        try:
            for key, value in entries.items():
                if key in ("families", "schemes", "senses", "conditions", "models"):
                    kw[key] = tuple(mf.parse_list(value))
                elif key in ("deltas", "directions", "control_permutation"):
                    kw[key] = tuple(int(v) for v in mf.parse_list(value))
                elif key in ("g1", "g2", "omega", "target_m", "target_gamma"):
                    kw[key] = float(value)
                elif key in (
                    "rings",
                    "elements",
                    "canvas",
                    "margin",
                    "n_frames",
                    "onset_blank",
                    "n_shifts",
                    "n_random_seeds",
                    "working_width",
                    "stride",
                    "seed",
                    "max_workers",
                ):
                    kw[key] = int(value)
                elif key in ("include_controls", "figures", "export_cells", "allow_nonstandard_delta"):
                    kw[key] = _parse_bool(value)
                elif key == "external_flow_dirs":
                    dirs = {}
                    if value.strip():
                        for item in value.split(";"):
                            name, _, p = item.strip().partition("=")
                            if not p:
                                raise ConfigError(f"malformed external_flow_dirs entry {item!r}")
                            dirs[name.strip()] = p.strip()
                    kw[key] = dirs
                elif key == "gsweep_points":
                    points = []
                    if value.strip():
                        for item in value.split(";"):
                            parts = [p.strip() for p in item.split(":")]
                            if len(parts) != 3:
                                raise ConfigError(f"malformed gsweep point {item!r}; want g1:g2:report")
                            points.append((float(parts[0]), float(parts[1]), parts[2]))
                    kw[key] = tuple(points)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        return cls(**kw)

    def to_manifest(self) -> dict:
        ext = "; ".join(f"{k}={v}" for k, v in self.external_flow_dirs.items())
        gs = "; ".join(f"{a:g}:{b:g}:{r}" for a, b, r in self.gsweep_points)
        out = {
            "families": list(self.families),
            "schemes": list(self.schemes),
            "senses": list(self.senses),
            "g1": self.g1,
            "g2": self.g2,
            "rings": self.rings,
            "elements": self.elements,
            "canvas": self.canvas,
            "margin": self.margin,
            "include_controls": self.include_controls,
            "control_permutation": list(self.control_permutation),
            "conditions": list(self.conditions),
            "deltas": list(self.deltas),
            "directions": list(self.directions),
            "n_frames": self.n_frames,
            "onset_blank": self.onset_blank,
            "n_shifts": self.n_shifts,
            "omega": self.omega,
            "n_random_seeds": self.n_random_seeds,
            "target_m": self.target_m,
            "target_gamma": self.target_gamma,
            "models": list(self.models),
            "external_flow_dirs": ext if ext else "",
            "working_width": self.working_width,
            "stride": self.stride,
            "seed": self.seed,
            "figures": self.figures,
            "export_cells": self.export_cells,
            "max_workers": self.max_workers,
            "allow_nonstandard_delta": self.allow_nonstandard_delta,
            "gsweep_points": gs if gs else "",
        }
        return out


# ---------------------------------------------------------------------------
# Grid expansion
# ---------------------------------------------------------------------------


def stimulus_grid(cfg: SuiteConfig) -> list:
    """(spec, is_control) cells in deterministic order."""
    cells = []
    for family in cfg.families:
        schemes = cfg.schemes if family not in ("central_drift", "ouchi") else ("grayscale",)
        for scheme in schemes:
            for sense in cfg.senses:
                spec = StimulusSpec(
                    family=family,
                    color_scheme=scheme,
                    sense=sense,
                    g1=cfg.g1,
                    g2=cfg.g2,
                    rings=cfg.rings,
                    elements_per_ring=cfg.elements,
                    canvas_px=cfg.canvas,
                    margin_px=cfg.margin,
                    control_permutation=cfg.control_permutation,
                )
                cells.append((spec, False))
                if cfg.include_controls and family in ("rotating_snakes", "peripheral_drift"):
                    cells.append((spec, True))
    return cells


def condition_grid(cfg: SuiteConfig) -> list:
    conditions = []
    for kind in cfg.conditions:
        if kind == "static":
            conditions.append(ViewingCondition(kind="static", n_frames=cfg.n_frames))
        elif kind == "onset":
            conditions.append(ViewingCondition(kind="onset", n_frames=cfg.n_frames, onset_frame=cfg.onset_blank))
        elif kind in ("shift", "peripheral_shift"):
            frames = default_shift_frames(cfg.n_frames, cfg.n_shifts)
            for delta in cfg.deltas:
                for direction in cfg.directions:
                    conditions.append(
                        ViewingCondition(
                            kind=kind,
                            n_frames=cfg.n_frames,
                            delta_px=delta,
                            direction_deg=direction,
                            shift_frames=frames,
                            allow_nonstandard_delta=cfg.allow_nonstandard_delta,
                        )
                    )
        elif kind == "veridical_rotation":
            omega = cfg.omega
            if omega == 0.0:
                # boundary speed target_m px/frame at the disk radius
                radius = (cfg.canvas - 2 * cfg.margin) / 2.0
                omega = math.degrees(cfg.target_m / radius)
            conditions.append(ViewingCondition(kind="veridical_rotation", n_frames=cfg.n_frames, omega=omega))
        elif kind == "random_slip":
            for seed in range(cfg.n_random_seeds):
                conditions.append(ViewingCondition(kind="random_slip", n_frames=cfg.n_frames, seed=seed))
    return conditions


def build_sequence(image: np.ndarray, condition: ViewingCondition) -> FrameSequence:
    if condition.kind == "static":
        return make_static(image, condition.n_frames)
    if condition.kind == "onset":
        return make_onset(image, condition.n_frames, condition.onset_frame)
    if condition.kind == "shift":
        return make_shift(image, condition)
    if condition.kind == "random_slip":
        return make_random_slip(image, condition.n_frames, condition.seed)
    if condition.kind == "peripheral_shift":
        return make_peripheral(image, condition)
    return make_veridical_rotation(image, condition.omega, condition.n_frames)


def cell_target(spec: StimulusSpec, condition: ViewingCondition, seq: FrameSequence, cfg: SuiteConfig) -> FlowField:
    """Rotational percept target at the disk's final position."""
    dx, dy = seq.total_displacement()
    if condition.kind == "peripheral_shift":
        scale = PERIPHERAL_STIMULUS_PX / spec.canvas_px
        cx = seq.origin[0] + spec.center[0] * scale + dx
        cy = seq.origin[1] + spec.center[1] * scale + dy
        radius = spec.disk_radius * scale
        h = w = seq.shape[0]
    else:
        cx = spec.center[0] + dx
        cy = spec.center[1] + dy
        radius = spec.disk_radius
        h, w = seq.shape
    sense = spec.sense
    boundary_speed = cfg.target_m
    if condition.kind == "veridical_rotation":
        sense = "ccw" if condition.omega > 0 else "cw"
        boundary_speed = abs(math.radians(condition.omega)) * radius
    target = PerceptTarget(
        center=(cx, cy),
        radius=radius,
        boundary_speed=boundary_speed,
        gamma=cfg.target_gamma,
        sense=sense,
        width=w,
        height=h,
    )
    return target_flow(target)


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------


@dataclass
class ResultsStore:
    out_dir: Path
    reports: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (model, stimulus, condition, message)

    def write(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        rows = [ScoreReport.CSV_HEADER]
        rows += [r.csv_row() for r in sorted(self.reports, key=lambda r: (r.model_id, r.stimulus_id, r.condition_id))]
        (self.out_dir / "results.csv").write_text("\n".join(rows) + "\n")
        if self.errors:
            lines = ["model,stimulus,condition,error"]
            for model, stim, cond, message in sorted(self.errors):
                clean = str(message).replace("\n", " ").replace(",", ";")
                lines.append(f"{model},{stim},{cond},{clean}")
            (self.out_dir / "errors.csv").write_text("\n".join(lines) + "\n")

    @property
    def had_errors(self) -> bool:
        return bool(self.errors)


def _external_flow_path(root, stimulus_id: str, condition_id: str) -> Path:
    return Path(root) / stimulus_id / condition_id / "flow.flo"


def _wire_precision(f: FlowField) -> FlowField:
    """Round a field through the flow file's float32 representation.

    All harness scoring happens at wire precision so a run and a re-score of
    its archived flow files produce identical metric values.
    """
    return FlowField(
        f.u.astype(np.float32).astype(np.float64),
        f.v.astype(np.float32).astype(np.float64),
        f.valid,
    )


def score_cell(flow: FlowField, target: FlowField, model: str, stim_id: str, cond_id: str) -> ScoreReport:
    """Wire-precision cell scoring; an empty joint-valid set (e.g. a fully
    masked-out prediction) scores as a flagged zero correlation with
    undefined point errors."""
    flow = _wire_precision(flow)
    target = _wire_precision(target)
    if not (flow.valid & target.valid).any():
        return ScoreReport(model, stim_id, cond_id, rho=0.0, mean_epe=float("nan"),
                           mean_ae=float("nan"), n_valid=0, degenerate=True)
    return score_fields(flow, target, model, stim_id, cond_id)


def _export_cell(cell_dir: Path, seq: FrameSequence, target: FlowField, flow: FlowField | None, report) -> None:
    cell_dir.mkdir(parents=True, exist_ok=True)
    seq.save(cell_dir / "frames")
    write_flow(target, cell_dir / "target.flo")
    if flow is not None:
        write_flow(flow, cell_dir / "flow.flo")
    if report is not None:
        (cell_dir / "report.csv").write_text(ScoreReport.CSV_HEADER + "\n" + report.csv_row() + "\n")


def _run_cell(cfg: SuiteConfig, bank, out_dir: Path, spec, is_control, image, condition):
    """Score one (stimulus, condition) cell for every model.

    Returns (reports, errors); pure apart from optional cell export to a
    cell-unique directory, so cells can run on any worker schedule.
    """
    stim_id = spec.stimulus_id(control=is_control)
    cond_id = condition.condition_id()
    reports = []
    errors = []
    try:
        seq = build_sequence(image, condition)
        target = cell_target(spec, condition, seq, cfg)
    except Exception as exc:  # geometry/parameter failures recorded per cell
        return [], [(model, stim_id, cond_id, str(exc)) for model in cfg.models]
    flow_b = None
    for model in cfg.models:
        try:
            if model == BUILTIN_MODEL:
                flow = estimate_flow(seq, bank, working_width=cfg.working_width, stride=cfg.stride)
                flow_b = flow
            else:
                path = _external_flow_path(cfg.external_flow_dirs[model], stim_id, cond_id)
                if not path.exists():
                    raise FileNotFoundError(f"missing flow file {path}")
                flow = read_flow(path)
                if (flow.height, flow.width) != (target.height, target.width):
                    raise ValueError(
                        f"flow dims {flow.width}x{flow.height} != target {target.width}x{target.height}"
                    )
            reports.append(score_cell(flow, target, model, stim_id, cond_id))
        except Exception as exc:
            errors.append((model, stim_id, cond_id, str(exc)))
    if cfg.export_cells:
        rep = next((r for r in reports if r.stimulus_id == stim_id and r.condition_id == cond_id), None)
        _export_cell(out_dir / "cells" / stim_id / cond_id, seq, target, flow_b, rep)
    return reports, errors


def run_suite(cfg: SuiteConfig, out_dir) -> ResultsStore:
    """Run the full (stimulus x condition x model) grid and persist results.

    Cells are independent jobs; with max_workers > 1 they run on a bounded
    thread pool, and results are collected in cell order so output files are
    identical regardless of worker count.
    """
    out_dir = Path(out_dir)
    store = ResultsStore(out_dir=out_dir)
    bank = build_bank() if BUILTIN_MODEL in cfg.models else None

    conditions = condition_grid(cfg)
    cells = []
    for spec, is_control in stimulus_grid(cfg):
        image = stimgen.render(spec, control=is_control)
        for condition in conditions:
            cells.append((spec, is_control, image, condition))

    if cfg.max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            outcomes = list(pool.map(lambda c: _run_cell(cfg, bank, out_dir, *c), cells))
    else:
        outcomes = [_run_cell(cfg, bank, out_dir, *c) for c in cells]
    for reports, errors in outcomes:
        store.reports.extend(reports)
        store.errors.extend(errors)

    store.write()
    _write_run_meta(cfg, out_dir)
    from illusionflow import reports as report_mod

    report_mod.write_heatmaps(store.reports, cfg, out_dir)
    if "random_slip" in cfg.conditions:
        _write_random_study_stats(store, cfg, out_dir)
    return store


def _write_run_meta(cfg: SuiteConfig, out_dir: Path) -> None:
    entries = {"tool_version": __version__}
    entries.update(cfg.to_manifest())
    mf.write_manifest(out_dir / "run_meta.txt", entries)


def _write_random_study_stats(store: ResultsStore, cfg: SuiteConfig, out_dir: Path) -> None:
    """Per-variant correlation distributions plus one-sided signed-rank tests:
    illusion > 0, control > 0, and illusion > control (paired by seed)."""
    by_cell: dict = {}
    for r in store.reports:
        if r.condition_id.startswith("rslip-"):
            by_cell[(r.model_id, r.stimulus_id, r.condition_id)] = r.rho
    lines = ["model,stimulus,test,n,p_value"]
    hist_data = {}
    models = sorted({k[0] for k in by_cell})
    stim_ids = sorted({k[1] for k in by_cell})
    for model in models:
        for stim_id in (s for s in stim_ids if not s.endswith("-ctrl")):
            ctrl_id = stim_id + "-ctrl"
            ill = [v for (m, s, c), v in sorted(by_cell.items()) if m == model and s == stim_id]
            ctrl = [v for (m, s, c), v in sorted(by_cell.items()) if m == model and s == ctrl_id]
            if not ill:
                continue
            hist_data[(model, stim_id)] = (ill, ctrl)
            for name, samples in (("illusion_gt_zero", ill), ("control_gt_zero", ctrl)):
                try:
                    p = wilcoxon_one_sided(samples, "greater")
                    lines.append(f"{model},{stim_id},{name},{len(samples)},{repr(p)}")
                except ValueError as exc:
                    lines.append(f"{model},{stim_id},{name},{len(samples)},error: {exc}")
            if ctrl and len(ctrl) == len(ill):
                diffs = [a - b for a, b in zip(ill, ctrl)]
                try:
                    p = wilcoxon_one_sided(diffs, "greater")
                    lines.append(f"{model},{stim_id},illusion_gt_control,{len(diffs)},{repr(p)}")
                except ValueError as exc:
                    lines.append(f"{model},{stim_id},illusion_gt_control,{len(diffs)},error: {exc}")
    (out_dir / "random_study_stats.csv").write_text("\n".join(lines) + "\n")
    if cfg.figures and hist_data:
        from illusionflow import reports as report_mod

        report_mod.write_histograms(hist_data, out_dir / "random_study_hist.png")


def score_external(flow_dir, cfg: SuiteConfig, model_id: str = "external") -> list:
    """Score archived flow files laid out in the manifest convention."""
    sub = replace(cfg, models=(model_id,), external_flow_dirs={model_id: str(flow_dir)}, conditions=cfg.conditions)
    reports = []
    conditions = condition_grid(sub)
    for spec, is_control in stimulus_grid(sub):
        stim_id = spec.stimulus_id(control=is_control)
        image = stimgen.render(spec, control=is_control)
        for condition in conditions:
            cond_id = condition.condition_id()
            seq = build_sequence(image, condition)
            target = cell_target(spec, condition, seq, sub)
            path = _external_flow_path(flow_dir, stim_id, cond_id)
            if not path.exists():
                reports.append((model_id, stim_id, cond_id, f"missing flow file {path}"))
                continue
            flow = read_flow(path)
            if (flow.height, flow.width) != (target.height, target.width):
                reports.append((model_id, stim_id, cond_id, "dimension mismatch"))
                continue
            reports.append(score_cell(flow, target, model_id, stim_id, cond_id))
    return reports


def run_gsweep(cfg: SuiteConfig, out_dir) -> ResultsStore:
    """Score a g1/g2 sweep against behavioral-report targets.

    Each sweep point renders its stimulus, runs every model under the
    configured conditions, and scores against behavioral_target(report):
    cw/ccw rotational fields or the zero field for 'unclear'.
    """
    if not cfg.gsweep_points:
        raise ConfigError("gsweep requires gsweep_points")
    out_dir = Path(out_dir)
    store = ResultsStore(out_dir=out_dir)
    bank = build_bank() if BUILTIN_MODEL in cfg.models else None
    conditions = condition_grid(cfg)
    family = cfg.families[0]
    scheme = cfg.schemes[0]
    for g1, g2, report_label in cfg.gsweep_points:
        spec = StimulusSpec(
            family=family,
            color_scheme=scheme,
            sense=cfg.senses[0],
            g1=g1,
            g2=g2,
            rings=cfg.rings,
            elements_per_ring=cfg.elements,
            canvas_px=cfg.canvas,
            margin_px=cfg.margin,
        )
        stim_id = f"{spec.stimulus_id()}-rep_{report_label}"
        image = stimgen.render(spec)
        for condition in conditions:
            cond_id = condition.condition_id()
            try:
                seq = build_sequence(image, condition)
                rot_target = cell_target(spec, condition, seq, cfg)
                dx, dy = seq.total_displacement()
                base = PerceptTarget(
                    center=(spec.center[0] + dx, spec.center[1] + dy),
                    radius=spec.disk_radius,
                    boundary_speed=cfg.target_m,
                    gamma=cfg.target_gamma,
                    sense="ccw",
                    width=seq.shape[1],
                    height=seq.shape[0],
                )
                target = behavioral_target(report_label, base)
            except Exception as exc:
                for model in cfg.models:
                    store.errors.append((model, stim_id, cond_id, str(exc)))
                continue
            for model in cfg.models:
                try:
                    if model == BUILTIN_MODEL:
                        flow = estimate_flow(seq, bank, working_width=cfg.working_width, stride=cfg.stride)
                    else:
                        path = _external_flow_path(cfg.external_flow_dirs[model], stim_id, cond_id)
                        flow = read_flow(path)
                    store.reports.append(score_cell(flow, target, model, stim_id, cond_id))
                except Exception as exc:
                    store.errors.append((model, stim_id, cond_id, str(exc)))
    store.write()
    _write_run_meta(cfg, out_dir)
    return store
