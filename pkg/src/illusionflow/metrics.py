"""Flow-alignment metrics, the signed-rank test, and report aggregation.

All pixel metrics are evaluated over the intersection of the two fields'
validity masks.  The correlation treats each field as one long vector of
2-D flow samples; EPE and AE are per-pixel reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from illusionflow.percept import FlowField

DEGENERATE_NORM_EPS = 1e-12


@dataclass
class ScoreReport:
    """Metric bundle for one (model, stimulus, condition) cell."""

    model_id: str
    stimulus_id: str
    condition_id: str
    rho: float
    mean_epe: float
    mean_ae: float
    n_valid: int
    degenerate: bool = False

    CSV_HEADER = "model,stimulus,condition,rho,degenerate,mean_epe,mean_ae,n_valid"

    def csv_row(self) -> str:
        return ",".join(
            [
                self.model_id,
                self.stimulus_id,
                self.condition_id,
                repr(self.rho),
                "1" if self.degenerate else "0",
                repr(self.mean_epe),
                repr(self.mean_ae),
                str(self.n_valid),
            ]
        )

    @classmethod
    def from_csv_row(cls, row: str) -> "ScoreReport":
        parts = row.strip().split(",")
        if len(parts) != 8:
            raise ValueError(f"malformed report row: {row!r}")
        return cls(
            model_id=parts[0],
            stimulus_id=parts[1],
            condition_id=parts[2],
            rho=float(parts[3]),
            degenerate=parts[4] == "1",
            mean_epe=float(parts[5]),
            mean_ae=float(parts[6]),
            n_valid=int(parts[7]),
        )


def _joint_valid(p: FlowField, r: FlowField) -> np.ndarray:
    if p.u.shape != r.u.shape:
        raise ValueError(f"field shapes differ: {p.u.shape} vs {r.u.shape}")
    return p.valid & r.valid


def correlation_with_flag(p: FlowField, r: FlowField) -> tuple[float, bool]:
    """Normalized correlation of two flow fields, with a degeneracy flag.

    rho = sum_i <P_i, R_i> / (||P||_F ||R||_F) over jointly valid pixels,
    in [-1, 1].  If either Frobenius norm is below 1e-12 the score is a
    defined zero and the flag is True.
    """
    m = _joint_valid(p, r)
    pu, pv = p.u[m], p.v[m]
    ru, rv = r.u[m], r.v[m]
    norm_p = math.sqrt(float(np.dot(pu, pu) + np.dot(pv, pv)))
    norm_r = math.sqrt(float(np.dot(ru, ru) + np.dot(rv, rv)))
    if norm_p < DEGENERATE_NORM_EPS or norm_r < DEGENERATE_NORM_EPS:
        return 0.0, True
    inner = float(np.dot(pu, ru) + np.dot(pv, rv))
    return inner / (norm_p * norm_r), False


def correlation(p: FlowField, r: FlowField) -> float:
    """Normalized flow correlation; degenerate-norm inputs score 0."""
    rho, _ = correlation_with_flag(p, r)
    return rho


def epe(p: FlowField, r: FlowField) -> float:
    """Mean endpoint error: average Euclidean distance between flow vectors."""
    m = _joint_valid(p, r)
    if not m.any():
        raise ValueError("no jointly valid pixels")
    return float(np.mean(np.hypot(p.u[m] - r.u[m], p.v[m] - r.v[m])))


def ae(p: FlowField, r: FlowField) -> float:
    """Mean angular error between flows embedded in 3-D as (1, u, v).

    The arccos argument is clamped to [-1, 1] to suppress floating-point
    domain errors.
    """
    m = _joint_valid(p, r)
    if not m.any():
        raise ValueError("no jointly valid pixels")
    pu, pv = p.u[m], p.v[m]
    ru, rv = r.u[m], r.v[m]
    num = 1.0 + pu * ru + pv * rv
    # sqrt of the product (not product of sqrts) so identical vectors give
    # exactly arccos(1) = 0
    den = np.sqrt((1.0 + pu * pu + pv * pv) * (1.0 + ru * ru + rv * rv))
    arg = np.clip(num / den, -1.0, 1.0)
    return float(np.mean(np.arccos(arg)))


def score_fields(
    p: FlowField,
    r: FlowField,
    model_id: str = "",
    stimulus_id: str = "",
    condition_id: str = "",
) -> ScoreReport:
    """Compute the full metric bundle for one predicted/target pair."""
    rho, degenerate = correlation_with_flag(p, r)
    return ScoreReport(
        model_id=model_id,
        stimulus_id=stimulus_id,
        condition_id=condition_id,
        rho=rho,
        mean_epe=epe(p, r),
        mean_ae=ae(p, r),
        n_valid=int(_joint_valid(p, r).sum()),
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# One-sided Wilcoxon signed-rank test
# ---------------------------------------------------------------------------


def _tie_averaged_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks of ``values`` (1-based), ties replaced by their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def _exact_signed_rank_p(ranks: np.ndarray, w_plus: float, alternative: str) -> float:
    """Exact tail probability of W+ by counting all 2^n sign assignments.

    Tie-averaged ranks are multiples of 1/2, so doubling them gives integers
    and the full null distribution is a subset-sum count.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for d in doubled:
        counts[d:] += counts[:-d].copy()
    w2 = int(round(2.0 * w_plus))
    if alternative == "greater":
        tail = int(counts[w2:].sum())
    else:
        tail = int(counts[: w2 + 1].sum())
    return tail / float(2 ** len(ranks))


def wilcoxon_one_sided(samples, alternative: str = "greater", exact_n: int = 25) -> float:
    """One-sided Wilcoxon signed-rank p-value for paired differences.

    Zero differences are dropped (standard signed-rank convention); at least
    5 nonzero values are required.  Ranks of |d| are tie-averaged.  The null
    distribution is exact for n <= ``exact_n`` and a normal approximation
    with continuity correction (and tie correction in the variance) above.

    alternative="greater" tests median > 0, "less" tests median < 0.
    """
    if alternative not in ("greater", "less"):
        raise ValueError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    d = np.asarray(samples, dtype=np.float64)
    if d.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    d = d[d != 0.0]
    if len(d) == 0:
        raise ValueError("all samples are zero")
    if len(d) < 5:
        raise ValueError(f"need at least 5 nonzero samples, got {len(d)}")
    ranks = _tie_averaged_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    n = len(d)
    if n <= exact_n:
        return _exact_signed_rank_p(ranks, w_plus, alternative)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    sd = math.sqrt(var)
    if alternative == "greater":
        z = (w_plus - mean - 0.5) / sd
        return 0.5 * math.erfc(z / math.sqrt(2.0))
    z = (w_plus - mean + 0.5) / sd
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

_GROUP_KEYS = {"model": "model_id", "stimulus": "stimulus_id", "condition": "condition_id"}


def aggregate(reports: list[ScoreReport], group_by=("model", "condition")) -> list[dict]:
    """Group reports and average their metrics.

    Returns one row per key combination with grouped means of rho / EPE / AE
    and the cell count, deterministically ordered by the key tuple.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    for key in group_by:
        if key not in _GROUP_KEYS:
            raise ValueError(f"unknown group key {key!r}; expected a subset of {sorted(_GROUP_KEYS)}")
    groups: dict[tuple, list[ScoreReport]] = {}
    for rep in reports:
        k = tuple(getattr(rep, _GROUP_KEYS[g]) for g in group_by)
        groups.setdefault(k, []).append(rep)
    rows = []
    for k in sorted(groups):
        members = groups[k]
        row = {g: v for g, v in zip(group_by, k)}
        row["rho"] = float(np.mean([m.rho for m in members]))
        row["mean_epe"] = float(np.mean([m.mean_epe for m in members]))
        row["mean_ae"] = float(np.mean([m.mean_ae for m in members]))
        row["n"] = len(members)
        rows.append(row)
    return rows
