"""External-validity regression: standardized OLS with the four
assumption diagnostics (Shapiro-Wilk, Breusch-Pagan, Durbin-Watson,
predicted-vs-observed linearity check).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as chi2_dist
from scipy.stats import f as f_dist
from scipy.stats import shapiro as _scipy_shapiro
from scipy.stats import t as t_dist

from .errors import CollinearPredictors, DegenerateColumn
from .ingest import column_standardize


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]  # includes "intercept"
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    f_stat: float
    f_df: tuple[int, int]
    f_p: float
    r2: float
    adj_r2: float
    residuals: np.ndarray
    fitted: np.ndarray
    y: np.ndarray
    standardized: bool


def ols(y, columns: dict, standardize: bool = True,
        standardize_dv: bool = True) -> RegressionResult:
    """OLS with intercept, solved by orthogonal decomposition.

    With standardize=True every predictor (and, by default, the DV) is
    centered and scaled to unit n-1 SD first, so coefficients are betas.
    """
    names = tuple(columns.keys())
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    k = len(names)
    if n <= k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    cols = []
    for name in names:
        xs = np.asarray(columns[name], dtype=np.float64)
        if standardize:
            try:
                xs = column_standardize(xs)
            except DegenerateColumn:
                raise CollinearPredictors(f"constant predictor {name!r}") from None
        cols.append(xs)
    if standardize and standardize_dv:
        y = column_standardize(y)
    x = np.column_stack([np.ones(n), *cols])
    rank = np.linalg.matrix_rank(x)
    if rank < k + 1:
        offenders = _rank_deficient_columns(x, names)
        raise CollinearPredictors(f"rank-deficient design; check columns {offenders}")
    coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    fitted = x @ coef
    resid = y - fitted
    df_resid = n - k - 1
    sigma2 = resid @ resid / df_resid
    xtx_inv = np.linalg.inv(x.T @ x)
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    tvals = coef / se
    pvals = 2.0 * t_dist.sf(np.abs(tvals), df_resid)
    ss_tot = ((y - y.mean()) ** 2).sum()
    ss_res = resid @ resid
    r2 = 1.0 - ss_res / ss_tot
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    if r2 < 1.0:
        f_stat = (r2 / k) / ((1.0 - r2) / df_resid)
    else:
        f_stat = float("inf")
    f_p = float(f_dist.sf(f_stat, k, df_resid))
    return RegressionResult(
        names=("intercept", *names),
        coef=coef,
        se=se,
        t=tvals,
        p=pvals,
        f_stat=float(f_stat),
        f_df=(k, df_resid),
        f_p=f_p,
        r2=float(r2),
        adj_r2=float(adj_r2),
        residuals=resid,
        fitted=fitted,
        y=y,
        standardized=standardize,
    )


def _rank_deficient_columns(x, names):
    offenders = []
    base_rank = np.linalg.matrix_rank(x)
    for i, name in enumerate(names, start=1):
        reduced = np.delete(x, i, axis=1)
        if np.linalg.matrix_rank(reduced) == base_rank:
            offenders.append(name)
    return offenders


def nested_f_test(reduced: RegressionResult, full: RegressionResult) -> tuple[float, tuple[int, int], float]:
    """Incremental F test for adding predictors (e.g. interaction screening)."""
    ss_red = reduced.residuals @ reduced.residuals
    ss_full = full.residuals @ full.residuals
    df_extra = reduced.f_df[1] - full.f_df[1]
    if df_extra <= 0:
        raise ValueError("full model must have more predictors than reduced")
    f_stat = ((ss_red - ss_full) / df_extra) / (ss_full / full.f_df[1])
    return float(f_stat), (df_extra, full.f_df[1]), float(f_dist.sf(f_stat, df_extra, full.f_df[1]))


def shapiro_wilk(residuals) -> tuple[float, float]:
    """Shapiro-Wilk normality test (Royston AS R94 approximation)."""
    residuals = np.asarray(residuals, dtype=np.float64)
    n = residuals.shape[0]
    if not 3 <= n <= 5000:
        raise ValueError(f"Shapiro-Wilk supports 3 <= n <= 5000, got {n}")
    if residuals.std() == 0.0:
        raise ValueError("constant residuals")
    w, p = _scipy_shapiro(residuals)
    return float(w), float(p)


def breusch_pagan(result: RegressionResult, columns: dict,
                  studentized: bool = True) -> tuple[float, int, float]:
    """Breusch-Pagan heteroskedasticity test.

    Default is the Koenker studentized form LM = n * R2 of the auxiliary
    regression of squared residuals on the predictors; studentized=False
    gives the classical variant (ESS/2 under normality).
    """
    resid = result.residuals
    n = resid.shape[0]
    k = len(columns)
    x = np.column_stack([np.ones(n)] + [np.asarray(c, dtype=np.float64) for c in columns.values()])
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise CollinearPredictors("auxiliary design is rank deficient")
    e2 = resid**2
    coef, _, _, _ = np.linalg.lstsq(x, e2, rcond=None)
    fitted = x @ coef
    ss_res = ((e2 - fitted) ** 2).sum()
    ss_tot = ((e2 - e2.mean()) ** 2).sum()
    if studentized:
        r2_aux = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        lm = n * r2_aux
    else:
        sigma2 = e2.mean()
        ess = ((fitted - e2.mean()) ** 2).sum()
        lm = ess / (2.0 * sigma2**2)
    return float(lm), k, float(chi2_dist.sf(lm, k))


def durbin_watson(residuals) -> float:
    """d = sum (e_t - e_{t-1})^2 / sum e_t^2; approx 2 = no autocorrelation."""
    e = np.asarray(residuals, dtype=np.float64)
    if e.shape[0] < 2:
        raise ValueError("need at least 2 residuals")
    denom = e @ e
    if denom == 0.0:
        raise ValueError("zero residual sum of squares")
    return float(np.sum(np.diff(e) ** 2) / denom)


@dataclass(frozen=True)
class DiagnosticsReport:
    shapiro_w: float
    shapiro_p: float
    bp_lm: float
    bp_df: int
    bp_p: float
    dw: float
    dw_annotation: str


def diagnostics(result: RegressionResult, columns: dict) -> DiagnosticsReport:
    w, p_sw = shapiro_wilk(result.residuals)
    lm, df, p_bp = breusch_pagan(result, columns)
    d = durbin_watson(result.residuals)
    if 1.5 <= d <= 2.5:
        note = "no evidence of autocorrelation (d near 2)"
    elif d < 1.5:
        note = "possible positive autocorrelation (d < 1.5)"
    else:
        note = "possible negative autocorrelation (d > 2.5)"
    return DiagnosticsReport(w, p_sw, lm, df, p_bp, d, note)
