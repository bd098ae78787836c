"""Result tables and figures: heatmap CSVs (always) and PNG renders (optional).

Heatmaps mirror the evaluation layout: one row per (model, stimulus), one
column per condition, separate tables for illusion and control stimuli and
for each metric.  Shift columns additionally aggregate into microsaccade
(displacement < 1 degree, i.e. < 50 px at 50 px/deg) and saccade means; both
the per-displacement and aggregated views are emitted because either reading
of "all shift magnitudes included" may be wanted.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from illusionflow.metrics import ScoreReport

MICROSACCADE_MAX_PX = 50  # 1 degree at 50 px/deg


def _condition_sort_key(cond_id: str):
    order = {"static": 0, "onset": 1, "shift": 2, "peri": 3, "rslip": 4, "rot": 5, "micro": 6, "saccade": 7}
    head = cond_id.split("-")[0]
    return (order.get(head, 9), cond_id)


def _shift_delta(cond_id: str) -> int | None:
    if not cond_id.startswith("shift-d"):
        return None
    return int(cond_id.split("-")[1][1:])


def build_table(reports: list, metric: str) -> tuple[list, list, np.ndarray]:
    """Pivot reports into (row_labels, col_labels, matrix) for one metric."""
    rows = sorted({(r.model_id, r.stimulus_id) for r in reports})
    cols = sorted({r.condition_id for r in reports}, key=_condition_sort_key)
    deltas = sorted({d for c in cols if (d := _shift_delta(c)) is not None})
    micro = [c for c in cols if (d := _shift_delta(c)) is not None and d < MICROSACCADE_MAX_PX]
    saccade = [c for c in cols if (d := _shift_delta(c)) is not None and d >= MICROSACCADE_MAX_PX]
    agg_cols = []
    if micro:
        agg_cols.append(("microsaccade", micro))
    if saccade:
        agg_cols.append(("saccade", saccade))
    if deltas:
        agg_cols.append(("shift-all", [c for c in cols if _shift_delta(c) is not None]))

    lookup = {(r.model_id, r.stimulus_id, r.condition_id): getattr(r, metric) for r in reports}
    col_labels = cols + [name for name, _ in agg_cols]
    matrix = np.full((len(rows), len(col_labels)), np.nan)
    for i, (model, stim) in enumerate(rows):
        for j, cond in enumerate(cols):
            value = lookup.get((model, stim, cond))
            if value is not None:
                matrix[i, j] = value
        for j, (name, members) in enumerate(agg_cols):
            vals = [lookup[(model, stim, c)] for c in members if (model, stim, c) in lookup]
            if vals:
                matrix[i, len(cols) + j] = float(np.mean(vals))
    row_labels = [f"{model}/{stim}" for model, stim in rows]
    return row_labels, col_labels, matrix


def table_to_csv(row_labels, col_labels, matrix, path) -> None:
    lines = ["cell," + ",".join(col_labels)]
    for label, row in zip(row_labels, matrix):
        cells = ",".join("" if np.isnan(v) else repr(float(v)) for v in row)
        lines.append(f"{label},{cells}")
    Path(path).write_text("\n".join(lines) + "\n")


def table_to_png(row_labels, col_labels, matrix, path, title, symmetric=True) -> None:
    fig, ax = plt.subplots(figsize=(1.1 + 0.62 * len(col_labels), 1.2 + 0.38 * len(row_labels)))
    if symmetric:
        vmax = max(np.nanmax(np.abs(matrix)), 1e-9)
        im = ax.imshow(matrix, cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
    else:
        im = ax.imshow(matrix, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(col_labels)))
    ax.set_xticklabels(col_labels, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(len(row_labels)))
    ax.set_yticklabels(row_labels, fontsize=7)
    for (i, j), v in np.ndenumerate(matrix):
        if not np.isnan(v):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=6)
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_heatmaps(reports: list, cfg, out_dir) -> None:
    """Emit metric heatmap CSVs (and PNGs when cfg.figures) for a run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = {
        "illusion": [r for r in reports if not r.stimulus_id.endswith("-ctrl")],
        "control": [r for r in reports if r.stimulus_id.endswith("-ctrl")],
    }
    for group_name, members in groups.items():
        if not members:
            continue
        for metric in ("rho", "mean_epe", "mean_ae"):
            rows, cols, matrix = build_table(members, metric)
            table_to_csv(rows, cols, matrix, out_dir / f"heatmap_{metric}_{group_name}.csv")
            if cfg.figures:
                table_to_png(
                    rows,
                    cols,
                    matrix,
                    out_dir / f"heatmap_{metric}_{group_name}.png",
                    f"{metric} ({group_name})",
                    symmetric=(metric == "rho"),
                )


def write_histograms(hist_data: dict, path) -> None:
    """Illusion vs control correlation distributions per (model, stimulus)."""
    n = len(hist_data)
    fig, axes = plt.subplots(n, 1, figsize=(5, 2.2 * n), squeeze=False)
    bins = np.linspace(-1, 1, 41)
    for ax, ((model, stim), (ill, ctrl)) in zip(axes[:, 0], sorted(hist_data.items())):
        ax.hist(ill, bins=bins, alpha=0.6, label="illusion", color="tab:red")
        if ctrl:
            ax.hist(ctrl, bins=bins, alpha=0.6, label="control", color="tab:gray")
        ax.axvline(0.0, color="k", lw=0.8)
        ax.set_title(f"{model} / {stim}", fontsize=8)
        ax.legend(fontsize=7)
        ax.set_xlabel("correlation")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
