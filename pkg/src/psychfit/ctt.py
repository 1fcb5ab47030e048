"""Classical test theory item analysis.

Difficulty, two discrimination indices (point-biserial and upper/lower
group difference), the 0.3 exclusion filter, Cronbach's alpha, and a
Likert-scale summarizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTest, InvalidFraction
from .ingest import LikertTable, ResponseMatrix


@dataclass(frozen=True)
class ItemStats:
    item_id: str
    difficulty: float
    disc_point_biserial: float | None  # None when undefined (constant column)
    disc_upper_lower: float


@dataclass(frozen=True)
class SelectionReport:
    retained: tuple[str, ...]
    excluded: tuple[str, ...]
    threshold: float
    variant: str  # which discrimination index drove the filter


def item_difficulty(m: ResponseMatrix) -> np.ndarray:
    """Proportion correct per item, p_j = sum_i x_ij / N."""
    return m.cells.mean(axis=0)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt((x @ x) * (y @ y))
    return float(x @ y / denom)


def discrimination_point_biserial(m: ResponseMatrix, corrected: bool = False) -> np.ndarray:
    """Pearson correlation of each item with the total score.

    corrected=True correlates against the rest score (total minus the
    item). Constant item or criterion columns yield NaN.
    """
    x = m.cells.astype(np.float64)
    total = x.sum(axis=1)
    out = np.empty(m.j)
    for jx in range(m.j):
        crit = total - x[:, jx] if corrected else total
        if x[:, jx].std() == 0.0 or crit.std() == 0.0:
            out[jx] = np.nan
        else:
            out[jx] = _pearson(x[:, jx], crit)
    return out


def discrimination_upper_lower(
    m: ResponseMatrix,
    group_fraction: float = 0.27,
    denominator: str = "total_n",
) -> np.ndarray:
    """Upper-minus-lower correct counts, D_j = (U_j - L_j) / denom.

    Groups are the top and bottom ceil(group_fraction * N) examinees by
    total score; boundary ties break by file order. denominator selects
    the full N ("total_n") or the group size ("group_n").
    """
    if not 0.0 < group_fraction <= 0.5:
        raise InvalidFraction(f"group_fraction must be in (0, 0.5], got {group_fraction}")
    if denominator not in ("total_n", "group_n"):
        raise ValueError(f"unknown denominator {denominator!r}")
    n = m.n
    g = int(np.ceil(group_fraction * n))
    order = np.argsort(-m.total_scores(), kind="stable")
    upper = order[:g]
    lower = order[-g:]
    u = m.cells[upper].sum(axis=0).astype(np.float64)
    lo = m.cells[lower].sum(axis=0).astype(np.float64)
    denom = n if denominator == "total_n" else g
    return (u - lo) / denom


def item_stats(m: ResponseMatrix, group_fraction: float = 0.27,
               denominator: str = "total_n", corrected: bool = False) -> list[ItemStats]:
    p = item_difficulty(m)
    pb = discrimination_point_biserial(m, corrected=corrected)
    ul = discrimination_upper_lower(m, group_fraction, denominator)
    return [
        ItemStats(
            item_id=m.item_ids[jx],
            difficulty=float(p[jx]),
            disc_point_biserial=None if np.isnan(pb[jx]) else float(pb[jx]),
            disc_upper_lower=float(ul[jx]),
        )
        for jx in range(m.j)
    ]


def select_items(stats, threshold: float = 0.3, variant: str = "point_biserial") -> SelectionReport:
    """Exclude items whose chosen discrimination index is below threshold.

    Difficulty is reported but never filters. Items with an undefined
    point-biserial are excluded (they cannot demonstrate discrimination).
    """
    if not stats:
        raise ValueError("empty stats list")
    if variant not in ("point_biserial", "upper_lower"):
        raise ValueError(f"unknown variant {variant!r}")
    retained, excluded = [], []
    for s in stats:
        idx = s.disc_point_biserial if variant == "point_biserial" else s.disc_upper_lower
        if idx is None or idx < threshold:
            excluded.append(s.item_id)
        else:
            retained.append(s.item_id)
    return SelectionReport(tuple(retained), tuple(excluded), threshold, variant)


def cronbach_alpha(cells) -> float:
    """alpha = k/(k-1) * (1 - sum_j var_j / var_total), n-1 variances."""
    x = np.asarray(cells, dtype=np.float64)
    k = x.shape[1]
    if k < 2:
        raise ValueError("alpha needs at least 2 columns")
    var_total = x.sum(axis=1).var(ddof=1)
    if var_total == 0.0:
        raise DegenerateTest("total score has zero variance")
    return float(k / (k - 1) * (1.0 - x.var(axis=0, ddof=1).sum() / var_total))


def likert_summary(t: LikertTable) -> dict:
    """Per-question mean and n-1 SD, plus alpha across questions."""
    x = t.cells.astype(np.float64)
    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1])
    if x.shape[1] < 2:
        alpha = None
    else:
        try:
            alpha = cronbach_alpha(x)
        except DegenerateTest:
            alpha = None
    return {
        "means": means.tolist(),
        "sds": sds.tolist(),
        "alpha": alpha,
        "n": int(x.shape[0]),
        "n_questions": int(x.shape[1]),
    }
