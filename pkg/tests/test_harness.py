import shutil
from pathlib import Path

import numpy as np
import pytest

from illusionflow.flowio import read_flow, write_flow
from illusionflow.harness import (
    ConfigError,
    SuiteConfig,
    build_sequence,
    cell_target,
    condition_grid,
    run_gsweep,
    run_suite,
    score_external,
    stimulus_grid,
)
from illusionflow.metrics import ScoreReport
from illusionflow.percept import FlowField

FAST = dict(
    canvas=302,
    margin=24,
    n_frames=12,
    working_width=96,
    stride=4,
)


def fast_config(**kw):
    base = dict(FAST)
    base.update(kw)
    return SuiteConfig(**base)


def test_config_round_trip(tmp_path):
    cfg = fast_config(schemes=("grayscale", "blue_yellow"), deltas=(15, 30), figures=True)
    from illusionflow.manifest import write_manifest

    write_manifest(tmp_path / "cfg.txt", cfg.to_manifest())
    back = SuiteConfig.from_file(tmp_path / "cfg.txt")
    assert back == cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        SuiteConfig(families=("spiral",))
    with pytest.raises(ConfigError):
        SuiteConfig(models=("dual",))  # no flow dir registered
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict({"frobnicate": "1"})
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict({"figures": "maybe"})


def test_stimulus_grid_pairs_controls():
    cfg = fast_config(schemes=("grayscale", "blue_yellow"))
    cells = stimulus_grid(cfg)
    ids = [spec.stimulus_id(control=c) for spec, c in cells]
    for stim_id in ids:
        if not stim_id.endswith("-ctrl"):
            assert stim_id + "-ctrl" in ids


def test_condition_grid_expansion():
    cfg = fast_config(conditions=("static", "onset", "shift"), deltas=(15, 30), directions=(45, 225))
    conds = condition_grid(cfg)
    ids = [c.condition_id() for c in conds]
    assert "static" in ids and "onset-f3" in ids
    assert sum(1 for i in ids if i.startswith("shift-")) == 4


def test_run_suite_veridical_builtin(tmp_path):
    cfg = fast_config(conditions=("veridical_rotation",), omega=1.5)
    store = run_suite(cfg, tmp_path / "run")
    assert not store.errors
    # every configured cell appears once with a finite rho
    assert len(store.reports) == len(stimulus_grid(cfg)) * 1
    for r in store.reports:
        assert np.isfinite(r.rho)
    # illusion cell scores positive rotation alignment
    ill = [r for r in store.reports if not r.stimulus_id.endswith("-ctrl")]
    assert ill[0].rho > 0.3
    assert (tmp_path / "run" / "results.csv").exists()
    assert (tmp_path / "run" / "run_meta.txt").exists()
    assert (tmp_path / "run" / "heatmap_rho_illusion.csv").exists()


def test_run_suite_deterministic_rerun(tmp_path):
    cfg = fast_config(conditions=("static",), include_controls=False)
    run_suite(cfg, tmp_path / "a")
    run_suite(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_run_suite_missing_external_flow_records_error(tmp_path):
    flow_dir = tmp_path / "flows"
    flow_dir.mkdir()
    cfg = fast_config(
        conditions=("static",),
        models=("archived",),
        external_flow_dirs={"archived": str(flow_dir)},
        include_controls=False,
    )
    store = run_suite(cfg, tmp_path / "run")
    assert not store.reports
    assert len(store.errors) == 1
    assert "missing flow file" in store.errors[0][3]
    assert (tmp_path / "run" / "errors.csv").exists()


def _archive_targets(cfg, flow_dir, transform=None):
    """Write each cell's target as its archived 'prediction'."""
    from illusionflow import stimgen

    flow_dir = Path(flow_dir)
    for spec, is_control in stimulus_grid(cfg):
        stim_id = spec.stimulus_id(control=is_control)
        image = stimgen.render(spec, control=is_control)
        for condition in condition_grid(cfg):
            cond_id = condition.condition_id()
            seq = build_sequence(image, condition)
            target = cell_target(spec, condition, seq, cfg)
            if transform is not None:
                target = transform(target)
            cell = flow_dir / stim_id / cond_id
            cell.mkdir(parents=True)
            write_flow(target, cell / "flow.flo")


def test_score_external_self_scoring(tmp_path):
    cfg = fast_config(conditions=("static", "onset"), include_controls=False)
    _archive_targets(cfg, tmp_path / "flows")
    reports = score_external(tmp_path / "flows", cfg)
    assert reports and all(isinstance(r, ScoreReport) for r in reports)
    for r in reports:
        assert r.rho == pytest.approx(1.0, abs=1e-12)
        assert r.mean_epe == 0.0
        assert r.mean_ae == 0.0
    # negated predictions score exactly -1
    _archive_targets(cfg, tmp_path / "neg", transform=lambda f: FlowField(-f.u, -f.v, f.valid))
    for r in score_external(tmp_path / "neg", cfg):
        assert r.rho == pytest.approx(-1.0, abs=1e-12)


def test_score_external_rescoring_identical(tmp_path):
    cfg = fast_config(conditions=("static",), include_controls=False)
    _archive_targets(cfg, tmp_path / "flows")
    a = score_external(tmp_path / "flows", cfg)
    b = score_external(tmp_path / "flows", cfg)
    assert [r.csv_row() for r in a] == [r.csv_row() for r in b]


def test_heatmap_regenerates_identically_from_archive(tmp_path):
    # run the builtin estimator with exported cells, then re-score the
    # archived flow files: the heatmap tables must match cell for cell
    from illusionflow import reports as report_mod

    cfg = fast_config(conditions=("veridical_rotation",), omega=1.5, export_cells=True, working_width=64)
    store = run_suite(cfg, tmp_path / "run")
    assert not store.errors
    archive = tmp_path / "archive"
    for r in store.reports:
        src = tmp_path / "run" / "cells" / r.stimulus_id / r.condition_id / "flow.flo"
        dst = archive / r.stimulus_id / r.condition_id / "flow.flo"
        dst.parent.mkdir(parents=True)
        shutil.copy(src, dst)
    rescored = score_external(archive, cfg, model_id="builtin")
    a = report_mod.build_table(store.reports, "rho")
    b = report_mod.build_table(rescored, "rho")
    assert a[0] == b[0] and a[1] == b[1]
    # wire-precision scoring makes run and re-score agree exactly
    assert np.array_equal(a[2], b[2], equal_nan=True)


def test_random_study_stats(tmp_path):
    cfg = fast_config(conditions=("random_slip",), n_random_seeds=6, working_width=64)
    store = run_suite(cfg, tmp_path / "run")
    stats = (tmp_path / "run" / "random_study_stats.csv").read_text().splitlines()
    names = [line.split(",")[2] for line in stats[1:]]
    assert "illusion_gt_zero" in names
    assert "control_gt_zero" in names
    assert "illusion_gt_control" in names


def test_run_gsweep_counts_and_labels(tmp_path):
    points = []
    labels = ("cw", "unclear", "ccw")
    for i, g1 in enumerate((0.1, 0.2, 0.3, 0.35, 0.4)):
        for j, g2 in enumerate((0.55, 0.65, 0.75, 0.85, 0.95)):
            points.append((g1, g2, labels[(i + j) % 3]))
    cfg = fast_config(conditions=("static",), gsweep_points=tuple(points), working_width=64)
    store = run_gsweep(cfg, tmp_path / "gs")
    assert len(store.reports) == 25
    assert not store.errors
    # static + builtin decodes to a degenerate field, so every cell is the
    # flagged zero correlation; unclear targets are degenerate by definition
    for r in store.reports:
        assert np.isfinite(r.rho)
    unclear = [r for r in store.reports if "rep_unclear" in r.stimulus_id]
    assert unclear and all(r.degenerate for r in unclear)


def test_run_gsweep_sign_flip(tmp_path):
    # archived constant prediction scored against cw vs ccw reports flips sign
    cfg_ccw = fast_config(
        conditions=("static",),
        gsweep_points=((0.25, 0.75, "ccw"),),
        models=("archived",),
        external_flow_dirs={"archived": str(tmp_path / "flows")},
    )
    cfg_cw = fast_config(
        conditions=("static",),
        gsweep_points=((0.25, 0.75, "cw"),),
        models=("archived",),
        external_flow_dirs={"archived": str(tmp_path / "flows")},
    )
    # build the archived prediction: the ccw target itself
    from illusionflow import stimgen
    from illusionflow.percept import PerceptTarget, target_flow
    from illusionflow.stimgen import StimulusSpec

    spec = StimulusSpec(canvas_px=302, margin_px=24)
    target = target_flow(
        PerceptTarget(center=spec.center, radius=spec.disk_radius, width=302, height=302)
    )
    stim_id = f"{spec.stimulus_id()}-rep_ccw"
    cell = tmp_path / "flows" / stim_id / "static"
    cell.mkdir(parents=True)
    write_flow(target, cell / "flow.flo")
    # same file served for the cw-report stimulus id
    cell2 = tmp_path / "flows" / f"{spec.stimulus_id()}-rep_cw" / "static"
    cell2.mkdir(parents=True)
    shutil.copy(cell / "flow.flo", cell2 / "flow.flo")

    r_ccw = run_gsweep(cfg_ccw, tmp_path / "g1").reports[0]
    r_cw = run_gsweep(cfg_cw, tmp_path / "g2").reports[0]
    assert r_ccw.rho == pytest.approx(1.0, abs=1e-6)
    assert r_cw.rho == pytest.approx(-1.0, abs=1e-6)


def test_gsweep_requires_points(tmp_path):
    with pytest.raises(ConfigError):
        run_gsweep(fast_config(), tmp_path / "x")


def test_worker_count_does_not_change_output(tmp_path):
    cfg1 = fast_config(conditions=("veridical_rotation",), omega=1.5, working_width=64)
    cfg2 = fast_config(conditions=("veridical_rotation",), omega=1.5, working_width=64, max_workers=3)
    run_suite(cfg1, tmp_path / "a")
    run_suite(cfg2, tmp_path / "b")
    a = (tmp_path / "a" / "results.csv").read_bytes()
    b = (tmp_path / "b" / "results.csv").read_bytes()
    assert a == b


def test_seeded_control_permutation():
    from illusionflow.stimgen import seeded_control_permutation

    for seed in range(20):
        perm = seeded_control_permutation(seed)
        assert sorted(perm) == [0, 1, 2, 3]
        rotations = {tuple(perm[i:] + perm[:i]) for i in range(4)}
        assert (0, 1, 2, 3) not in rotations
        assert (3, 2, 1, 0) not in rotations
    assert seeded_control_permutation(7) == seeded_control_permutation(7)


def test_cell_completeness(tmp_path):
    # every configured (model, stimulus, condition) appears exactly once in
    # the results, as a value or a recorded error
    flow_dir = tmp_path / "flows"
    flow_dir.mkdir()
    cfg = fast_config(
        conditions=("static", "veridical_rotation"),
        omega=1.5,
        working_width=64,
        models=("builtin", "archived"),
        external_flow_dirs={"archived": str(flow_dir)},
    )
    store = run_suite(cfg, tmp_path / "run")
    expected = {
        (model, spec.stimulus_id(control=c), cond.condition_id())
        for spec, c in stimulus_grid(cfg)
        for cond in condition_grid(cfg)
        for model in cfg.models
    }
    seen = [(r.model_id, r.stimulus_id, r.condition_id) for r in store.reports]
    seen += [(m, s, c) for m, s, c, _ in store.errors]
    assert sorted(seen) == sorted(expected)


def test_figures_rendered_alongside_csv(tmp_path):
    cfg = fast_config(
        conditions=("random_slip",),
        n_random_seeds=5,
        working_width=64,
        figures=True,
    )
    run_suite(cfg, tmp_path / "run")
    out = tmp_path / "run"
    assert (out / "heatmap_rho_illusion.csv").exists()
    assert (out / "heatmap_rho_illusion.png").exists()
    assert (out / "heatmap_mean_epe_control.png").exists()
    assert (out / "random_study_hist.png").exists()
