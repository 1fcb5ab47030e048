"""Model selection and goodness of fit.

Information criteria, nested likelihood-ratio tests, the limited-
information M2 family on univariate and bivariate margins (orthogonal-
complement weight construction), Orlando-Thissen S-chi2 item fit via the
score-distribution recursion, and Benjamini-Hochberg adjustment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as chi2_dist

from . import _kernels
from .errors import NonNested
from .ingest import ResponseMatrix
from .irt import IrtFit

_PINV_CUTOFF = 1e-10
_MODEL_ORDER = {"rasch": 0, "2pl": 1, "3pl": 2}
_N_ITEM_PARAMS = {"rasch": 1, "2pl": 2, "3pl": 3}


def information_criteria(fit: IrtFit) -> tuple[float, float]:
    """AIC = -2 loglik + 2k; BIC = -2 loglik + k ln N."""
    aic = -2.0 * fit.loglik + 2.0 * fit.n_params
    bic = -2.0 * fit.loglik + fit.n_params * np.log(fit.n_obs)
    return float(aic), float(bic)


@dataclass(frozen=True)
class LrtResult:
    chi2: float
    df: int
    p: float
    negative_chi2: bool  # restricted fit beat the unrestricted one


def lrt(restricted: IrtFit, unrestricted: IrtFit) -> LrtResult:
    """Deviance-difference test for nested model pairs (Rasch < 2PL < 3PL)."""
    if restricted.n_obs != unrestricted.n_obs or restricted.n_items != unrestricted.n_items:
        raise NonNested("fits are not on the same data")
    if _MODEL_ORDER[restricted.kind] >= _MODEL_ORDER[unrestricted.kind]:
        raise NonNested(f"{restricted.kind} is not nested below {unrestricted.kind}")
    df = unrestricted.n_params - restricted.n_params
    raw = 2.0 * (unrestricted.loglik - restricted.loglik)
    chi2 = max(raw, 0.0)
    return LrtResult(float(chi2), df, float(chi2_dist.sf(chi2, df)), raw < 0.0)


@dataclass(frozen=True)
class FitReport:
    m2: float
    df: int
    p: float
    rmsea: float
    srmsr: float
    tli: float
    cfi: float
    aic: float
    bic: float
    n_obs: int
    n_params: int
    suppressed: bool  # singular weight matrix; indices unreliable
    thresholds: dict


def _moment_indices(j):
    singles = [(a,) for a in range(j)]
    pairs = [(a, b) for a in range(j) for b in range(a + 1, j)]
    return singles + pairs


def _model_moments(p, w, moments):
    """kappa_u = sum_q w_q prod_{j in S_u} P_jq, and the (Q, s) product matrix."""
    cols = [np.prod(p[:, s], axis=1) for s in moments]
    mprod = np.column_stack(cols)
    return w @ mprod, mprod


def _moment_covariance(p, w, moments, kappa, mprod):
    """Multinomial covariance of the sampled margins under the model."""
    e2 = mprod.T @ (w[:, None] * mprod)
    # entries for overlapping index sets need the product over the union,
    # not the product of products (indicators are idempotent)
    index_of = {s: u for u, s in enumerate(moments)}
    j = p.shape[1]
    for a in range(j):
        ua = index_of[(a,)]
        e2[ua, ua] = kappa[ua]
        for b in range(j):
            if b == a:
                continue
            pair = (min(a, b), max(a, b))
            up = index_of[pair]
            e2[ua, up] = e2[up, ua] = kappa[up]
            e2[up, up] = kappa[up]
    # pairs sharing exactly one item: E = third-order moment
    for a in range(j):
        others = [b for b in range(j) if b != a]
        for i1 in range(len(others)):
            for i2 in range(i1 + 1, len(others)):
                b, c = others[i1], others[i2]
                u = index_of[(min(a, b), max(a, b))]
                v = index_of[(min(a, c), max(a, c))]
                p3 = float(w @ (p[:, a] * p[:, b] * p[:, c]))
                e2[u, v] = e2[v, u] = p3
    return e2 - np.outer(kappa, kappa)


def _margin_jacobian(fit: IrtFit, p, w, nodes, moments):
    """Derivatives of the model margins with respect to the free parameters."""
    j = fit.n_items
    # per-item list of dP/dparam arrays (Q,) plus optional global column
    dp_item: list[list[np.ndarray]] = []
    global_cols: list[np.ndarray] = []
    if fit.kind == "rasch":
        std_nodes = nodes / fit.prior_sd
        dsigma = []
        for jx, it in enumerate(fit.items):
            lgt = p[:, jx]
            dl = lgt * (1.0 - lgt)
            dp_item.append([-dl])  # d/db
            dsigma.append(dl * std_nodes)
        global_cols.append(("sigma", dsigma))
    else:
        for jx, it in enumerate(fit.items):
            c = it.c
            lgt = (p[:, jx] - c) / (1.0 - c)
            dl = lgt * (1.0 - lgt)
            cols = [
                (1.0 - c) * dl * (nodes - it.b),  # d/da
                -(1.0 - c) * dl * it.a,  # d/db
            ]
            if fit.kind == "3pl":
                cols.append(1.0 - lgt)  # d/dc
            dp_item.append(cols)

    n_free = sum(len(c) for c in dp_item) + len(global_cols)
    delta = np.zeros((len(moments), n_free))
    col_offset = []
    off = 0
    for cols in dp_item:
        col_offset.append(off)
        off += len(cols)
    for u, s in enumerate(moments):
        if len(s) == 1:
            (a,) = s
            for t, dp in enumerate(dp_item[a]):
                delta[u, col_offset[a] + t] = w @ dp
        else:
            a, b = s
            for t, dp in enumerate(dp_item[a]):
                delta[u, col_offset[a] + t] = w @ (dp * p[:, b])
            for t, dp in enumerate(dp_item[b]):
                delta[u, col_offset[b] + t] = w @ (dp * p[:, a])
    for gi, (_, dsigma) in enumerate(global_cols):
        col = off + gi
        for u, s in enumerate(moments):
            if len(s) == 1:
                (a,) = s
                delta[u, col] = w @ dsigma[a]
            else:
                a, b = s
                delta[u, col] = w @ (dsigma[a] * p[:, b] + p[:, a] * dsigma[b])
    return delta


def _quadratic_form(e, xi, delta, n):
    xi_inv = np.linalg.pinv(xi, rcond=_PINV_CUTOFF, hermitian=True)
    inner = delta.T @ xi_inv @ delta
    inner_inv = np.linalg.pinv(inner, rcond=_PINV_CUTOFF, hermitian=True)
    c = xi_inv - xi_inv @ delta @ inner_inv @ delta.T @ xi_inv
    return float(n * e @ c @ e)


def _observed_margins(m: ResponseMatrix, moments):
    x = m.cells.astype(np.float64)
    out = np.empty(len(moments))
    for u, s in enumerate(moments):
        if len(s) == 1:
            out[u] = x[:, s[0]].mean()
        else:
            out[u] = (x[:, s[0]] * x[:, s[1]]).mean()
    return out


def _pairwise_correlations(kappa, moments, j):
    p1 = kappa[:j]
    corr = []
    for u, s in enumerate(moments[j:], start=j):
        a, b = moments[u]
        num = kappa[u] - p1[a] * p1[b]
        den = np.sqrt(p1[a] * (1 - p1[a]) * p1[b] * (1 - p1[b]))
        corr.append(num / den if den > 0 else 0.0)
    return np.array(corr)


def m2_family(fit: IrtFit, m: ResponseMatrix) -> FitReport:
    """Limited-information M2 statistic with RMSEA, SRMSR, TLI, and CFI.

    M2 = N e' C e on first- and second-order margin residuals, with C the
    orthogonal-complement weight built from the margin Jacobian and the
    multinomial margin covariance; df = J(J+1)/2 - k. TLI/CFI compare
    against the independence baseline.
    """
    j = fit.n_items
    if j < 3:
        raise ValueError("M2 needs at least 3 items")
    n = m.n
    moments = _moment_indices(j)
    g = fit.latent_grid()
    p = np.column_stack([np.clip(c, 1e-10, 1 - 1e-10) for c in fit.prob_grid().T])
    kappa, mprod = _model_moments(p, g.weights, moments)
    obs = _observed_margins(m, moments)
    e = obs - kappa
    xi = _moment_covariance(p, g.weights, moments, kappa, mprod)
    delta = _margin_jacobian(fit, p, g.weights, g.nodes, moments)
    m2 = _quadratic_form(e, xi, delta, n)
    df = j * (j + 1) // 2 - fit.n_params
    suppressed = not np.isfinite(m2) or m2 < 0.0
    m2 = max(m2, 0.0)
    p_val = float(chi2_dist.sf(m2, df)) if df > 0 else float("nan")
    rmsea = float(np.sqrt(max(0.0, m2 - df) / (df * n))) if df > 0 else float("nan")

    # independence baseline: free univariate margins, no association
    p_obs1 = np.clip(m.cells.mean(axis=0), 1e-10, 1 - 1e-10)
    p_base = p_obs1[None, :]
    w_base = np.array([1.0])
    kappa_b, mprod_b = _model_moments(p_base, w_base, moments)
    e_b = obs - kappa_b
    xi_b = _moment_covariance(p_base, w_base, moments, kappa_b, mprod_b)
    delta_b = np.zeros((len(moments), j))
    for u, s in enumerate(moments):
        if len(s) == 1:
            delta_b[u, s[0]] = 1.0
        else:
            a, b = s
            delta_b[u, a] = p_obs1[b]
            delta_b[u, b] = p_obs1[a]
    m2_b = max(_quadratic_form(e_b, xi_b, delta_b, n), 0.0)
    df_b = j * (j + 1) // 2 - j

    ratio_m = m2 / df if df > 0 else float("inf")
    ratio_b = m2_b / df_b
    tli = (ratio_b - ratio_m) / (ratio_b - 1.0) if ratio_b > 1.0 else 1.0
    tli = min(tli, 1.0)
    denom = max(m2 - df, m2_b - df_b, 0.0)
    cfi = 1.0 - max(m2 - df, 0.0) / denom if denom > 0 else 1.0
    cfi = min(cfi, 1.0)

    corr_model = _pairwise_correlations(kappa, moments, j)
    corr_obs = _pairwise_correlations(obs, moments, j)
    srmsr = float(np.sqrt(np.mean((corr_obs - corr_model) ** 2)))

    aic, bic = information_criteria(fit)
    return FitReport(
        m2=m2,
        df=df,
        p=p_val,
        rmsea=rmsea,
        srmsr=srmsr,
        tli=float(tli),
        cfi=float(cfi),
        aic=aic,
        bic=bic,
        n_obs=n,
        n_params=fit.n_params,
        suppressed=suppressed,
        thresholds={
            "rmsea_lt_0.06": bool(rmsea < 0.06),
            "srmsr_lt_0.08": bool(srmsr < 0.08),
            "tli_gt_0.90": bool(tli > 0.90),
            "cfi_gt_0.90": bool(cfi > 0.90),
        },
    )


@dataclass(frozen=True)
class ItemFitRow:
    item_id: str
    s_chi2: float
    df: int
    p: float
    p_adjusted: float | None  # filled by the BH pass over a model's items
    undefined: bool


def _collapse(counts, expected, observed):
    """Merge rest-score groups until every expected cell count is >= 1.

    Offending groups merge with their neighbor toward the nearer tail.
    """
    groups = [[n, e, o] for n, e, o in zip(counts, expected, observed)]
    while len(groups) >= 2:
        bad = None
        for gi, (ng, eg, og) in enumerate(groups):
            if ng * eg < 1.0 or ng * (1.0 - eg) < 1.0:
                bad = gi
                break
        if bad is None:
            break
        if bad == 0:
            other = 1
        elif bad == len(groups) - 1:
            other = bad - 1
        else:
            other = bad - 1 if bad < len(groups) / 2 else bad + 1
        n1, e1, o1 = groups[bad]
        n2, e2, o2 = groups[other]
        nm = n1 + n2
        merged = [nm, (n1 * e1 + n2 * e2) / nm, (n1 * o1 + n2 * o2) / nm]
        lo, hi = min(bad, other), max(bad, other)
        groups[lo:hi + 1] = [merged]
    return groups


def s_chi2(fit: IrtFit, m: ResponseMatrix) -> list[ItemFitRow]:
    """Orlando-Thissen S-chi2 item fit by rest score.

    Expected proportions come from the model via the score-distribution
    recursion for the rest test, integrated over the latent grid.
    """
    if m.item_ids != fit.item_ids:
        raise ValueError("fit does not cover this matrix's items")
    j = fit.n_items
    g = fit.latent_grid()
    p = np.clip(fit.prob_grid(), 1e-10, 1 - 1e-10)
    w = g.weights
    x = m.cells
    total = x.sum(axis=1)
    n_ipar = _N_ITEM_PARAMS[fit.kind]
    rows = []
    for jx in range(j):
        rest_cols = [c for c in range(j) if c != jx]
        s_mat = np.empty((p.shape[0], j))  # rest scores 0..J-1
        for q in range(p.shape[0]):
            s_mat[q] = _kernels.score_distribution(p[q, rest_cols])
        den = w @ s_mat
        num = (w * p[:, jx]) @ s_mat
        rest = total - x[:, jx]
        counts = np.bincount(rest, minlength=j).astype(np.float64)
        obs_correct = np.bincount(rest, weights=x[:, jx], minlength=j)
        keep = counts > 0
        e_k = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
        groups = _collapse(
            counts[keep],
            np.clip(e_k[keep], 1e-10, 1 - 1e-10),
            (obs_correct[keep] / counts[keep]),
        )
        df = len(groups) - n_ipar
        if len(groups) < 2 or df < 1:
            rows.append(ItemFitRow(m.item_ids[jx], float("nan"), max(df, 0), float("nan"), None, True))
            continue
        stat = sum(ng * (og - eg) ** 2 * (1.0 / eg + 1.0 / (1.0 - eg)) for ng, eg, og in groups)
        rows.append(
            ItemFitRow(m.item_ids[jx], float(stat), df, float(chi2_dist.sf(stat, df)), None, False)
        )
    ps = [r.p for r in rows if not r.undefined]
    if ps:
        adj = benjamini_hochberg(np.array(ps))
        it = iter(adj)
        rows = [
            r if r.undefined else ItemFitRow(r.item_id, r.s_chi2, r.df, r.p, float(next(it)), False)
            for r in rows
        ]
    return rows


def benjamini_hochberg(ps) -> np.ndarray:
    """Step-up FDR adjustment: adj_(i) = min_{j>=i} p_(j) m / j, capped at 1."""
    ps = np.asarray(ps, dtype=np.float64)
    if ((ps < 0) | (ps > 1)).any():
        raise ValueError("p-values must lie in [0, 1]")
    m_tests = ps.shape[0]
    order = np.argsort(ps, kind="stable")
    ranked = ps[order] * m_tests / np.arange(1, m_tests + 1)
    adj = np.minimum.accumulate(ranked[::-1])[::-1]
    adj = np.minimum(adj, 1.0)
    out = np.empty_like(adj)
    out[order] = adj
    return out
