"""IRT assumption checks: unidimensionality via a single-factor model on
tetrachoric correlations, and local independence via Yen's Q3.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import ndtr, ndtri
from scipy.stats import chi2 as chi2_dist
from scipy.stats import ncx2

from .errors import NonConvergence, UndefinedPair
from .ingest import ResponseMatrix
from .irt import IrtFit, icc

# Gauss-Legendre rule for the Drezner-Wesolowsky correlation integral;
# fixed order keeps the bivariate normal CDF deterministic to ~1e-7.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)

BOUNDARY_RHO = 0.999


def bvn_upper(h: float, k: float, rho: float) -> float:
    """P(Z1 > h, Z2 > k) for standard bivariate normal with correlation rho.

    Uses the Drezner-Wesolowsky reduction: Phi2(h,k,rho) = Phi(h)Phi(k) +
    (1/2pi) * integral_0^rho exp(-(h^2 - 2hkr + k^2)/(2(1-r^2))) / sqrt(1-r^2) dr,
    evaluated with a fixed-order Gauss-Legendre rule.
    """
    r = 0.5 * rho * (_GL_NODES + 1.0)
    w = 0.5 * rho * _GL_WEIGHTS
    om = 1.0 - r**2
    integrand = np.exp(-(h * h - 2.0 * h * k * r + k * k) / (2.0 * om)) / np.sqrt(om)
    phi2 = ndtr(h) * ndtr(k) + (w @ integrand) / (2.0 * np.pi)
    return float(1.0 - ndtr(h) - ndtr(k) + phi2)


@dataclass(frozen=True)
class TetrachoricResult:
    rho: float
    boundary: bool


def tetrachoric(counts) -> TetrachoricResult:
    """ML tetrachoric correlation from a 2x2 table [[n11, n10], [n01, n00]].

    Thresholds come from the margins; the correlation maximizes the
    multinomial likelihood under the bivariate normal model. Tables with
    a zero cell (deterministic pattern) return +/-0.999 with a boundary
    flag; a zero margin raises UndefinedPair.
    """
    t = np.asarray(counts, dtype=np.float64)
    n11, n10 = t[0]
    n01, n00 = t[1]
    n = t.sum()
    p1 = (n11 + n10) / n
    p2 = (n11 + n01) / n
    if p1 in (0.0, 1.0) or p2 in (0.0, 1.0):
        raise UndefinedPair("constant margin; tetrachoric undefined")
    if n10 == 0 or n01 == 0:
        return TetrachoricResult(BOUNDARY_RHO, True)
    if n11 == 0 or n00 == 0:
        return TetrachoricResult(-BOUNDARY_RHO, True)
    h = ndtri(1.0 - p1)
    k = ndtri(1.0 - p2)

    def negloglik(rho):
        p11 = bvn_upper(h, k, rho)
        p10 = (1.0 - ndtr(h)) - p11
        p01 = (1.0 - ndtr(k)) - p11
        p00 = 1.0 - p11 - p10 - p01
        ps = np.clip([p11, p10, p01, p00], 1e-12, 1.0)
        return -(np.array([n11, n10, n01, n00]) @ np.log(ps))

    res = minimize_scalar(negloglik, bounds=(-BOUNDARY_RHO, BOUNDARY_RHO), method="bounded",
                          options={"xatol": 1e-8})
    rho = float(res.x)
    return TetrachoricResult(rho, abs(rho) >= BOUNDARY_RHO - 1e-4)


@dataclass(frozen=True)
class TetrachoricMatrix:
    rho: np.ndarray  # (J, J), diagonal 1
    boundary: np.ndarray  # (J, J) bool


def tetrachoric_matrix(m: ResponseMatrix) -> TetrachoricMatrix:
    """All pairwise tetrachoric correlations of a response matrix."""
    j = m.j
    rho = np.eye(j)
    boundary = np.zeros((j, j), dtype=bool)
    x = m.cells
    for a in range(j):
        for b in range(a + 1, j):
            xa, xb = x[:, a], x[:, b]
            counts = [
                [int(((xa == 1) & (xb == 1)).sum()), int(((xa == 1) & (xb == 0)).sum())],
                [int(((xa == 0) & (xb == 1)).sum()), int(((xa == 0) & (xb == 0)).sum())],
            ]
            res = tetrachoric(counts)
            rho[a, b] = rho[b, a] = res.rho
            boundary[a, b] = boundary[b, a] = res.boundary
    return TetrachoricMatrix(rho, boundary)


def smooth_correlation(r: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Eigenvalue-smooth a correlation matrix to positive definiteness.

    Negative eigenvalues are raised to `floor` and the result rescaled to
    unit diagonal. Deterministic repair; identity on PD inputs.
    """
    vals, vecs = np.linalg.eigh(r)
    if vals.min() >= floor:
        return r
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(out))
    out = out / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True)
class FactorSolution:
    loadings: np.ndarray
    uniquenesses: np.ndarray
    discrepancy: float
    chi2: float
    df: int
    chi2_over_df: float
    rmsea: float
    rmsea_ci90: tuple[float, float]
    srmsr: float
    n_obs: int
    heywood: bool
    criteria: dict  # chi2/df < 2, RMSEA < 0.05, SRMSR < 0.1


def _ml_discrepancy_and_grad(lam, psi, r):
    sigma = np.outer(lam, lam) + np.diag(psi)
    sign, logdet_s = np.linalg.slogdet(sigma)
    if sign <= 0:
        return np.inf, None, None
    sinv = np.linalg.inv(sigma)
    _, logdet_r = np.linalg.slogdet(r)
    f = logdet_s - logdet_r + np.trace(r @ sinv) - r.shape[0]
    dfds = sinv - sinv @ r @ sinv
    glam = 2.0 * dfds @ lam
    gpsi = np.diag(dfds).copy()
    return float(f), glam, gpsi


def single_factor_fit(r: np.ndarray, n: int, max_iters: int = 2000,
                      exclude: np.ndarray | None = None) -> FactorSolution:
    """ML single-factor fit to a correlation matrix.

    Minimizes F = ln|Sigma| - ln|R| + tr(R Sigma^-1) - J over loadings
    and uniquenesses (Heywood cases clamped at psi = 0.001 and flagged);
    chi2 = (n-1) F, df = J(J-3)/2.

    `exclude` marks unreliable cells (e.g. boundary tetrachorics); they
    are removed from the fit by iteratively replacing them with their
    model-implied values, so they contribute no residual.
    """
    j = r.shape[0]
    if j < 4:
        raise ValueError("single-factor fit needs J >= 4 items")
    r = np.asarray(r, dtype=np.float64)
    if exclude is not None and exclude.any():
        mask = np.asarray(exclude, dtype=bool).copy()
        np.fill_diagonal(mask, False)
        for _ in range(10):
            sol = single_factor_fit(smooth_correlation(r), n, max_iters)
            implied = np.outer(sol.loadings, sol.loadings)
            new_vals = implied[mask]
            if np.allclose(r[mask], new_vals, atol=1e-6):
                break
            r = r.copy()
            r[mask] = new_vals
        return single_factor_fit(smooth_correlation(r), n, max_iters)
    r = smooth_correlation(r)
    vals, vecs = np.linalg.eigh(r)
    lam0 = vecs[:, -1] * np.sqrt(max(vals[-1] - 1.0, 0.5))
    lam0 = np.clip(lam0, -0.98, 0.98)
    psi0 = np.clip(1.0 - lam0**2, 0.01, None)

    def neg(x):
        lam, psi = x[:j], x[j:]
        f, gl, gp = _ml_discrepancy_and_grad(lam, psi, r)
        if not np.isfinite(f):
            return 1e10, np.zeros(2 * j)
        return f, np.concatenate([gl, gp])

    res = minimize(
        neg,
        np.concatenate([lam0, psi0]),
        jac=True,
        method="L-BFGS-B",
        bounds=[(-2.0, 2.0)] * j + [(0.001, 4.0)] * j,
        options={"maxiter": max_iters, "ftol": 1e-14, "gtol": 1e-10},
    )
    if not res.success and res.status != 1:  # status 1 = maxiter
        # L-BFGS-B reports ABNORMAL when rounding stalls the line search;
        # accept the point if the projected gradient says it is optimal
        grad = np.asarray(res.jac)
        lo = np.array([-2.0] * j + [0.001] * j)
        hi = np.array([2.0] * j + [4.0] * j)
        proj = grad.copy()
        proj[(res.x <= lo + 1e-12) & (grad > 0)] = 0.0
        proj[(res.x >= hi - 1e-12) & (grad < 0)] = 0.0
        if np.abs(proj).max() > 1e-3:
            raise NonConvergence(f"factor fit failed: {res.message}")
    lam, psi = res.x[:j], res.x[j:]
    if lam.sum() < 0:
        lam = -lam
    heywood = bool((psi <= 0.001 + 1e-12).any())
    f_min, _, _ = _ml_discrepancy_and_grad(lam, psi, r)
    df = j * (j - 3) // 2
    chi2 = max((n - 1) * f_min, 0.0)
    rmsea = float(np.sqrt(max(0.0, (chi2 - df) / (df * (n - 1)))))
    rmsea_ci = _rmsea_ci(chi2, df, n)
    sigma = np.outer(lam, lam) + np.diag(psi)
    resid = (r - sigma)[np.tril_indices(j, k=-1)]
    srmsr = float(np.sqrt(np.mean(resid**2)))
    ratio = chi2 / df
    return FactorSolution(
        loadings=lam,
        uniquenesses=psi,
        discrepancy=f_min,
        chi2=chi2,
        df=df,
        chi2_over_df=ratio,
        rmsea=rmsea,
        rmsea_ci90=rmsea_ci,
        srmsr=srmsr,
        n_obs=n,
        heywood=heywood,
        criteria={
            "chi2_over_df_lt_2": bool(ratio < 2.0),
            "rmsea_lt_0.05": bool(rmsea < 0.05),
            "srmsr_lt_0.1": bool(srmsr < 0.1),
        },
    )


def _rmsea_ci(chi2, df, n, level: float = 0.90) -> tuple[float, float]:
    """90% CI by inverting the noncentral chi-squared distribution."""
    lo_p = (1.0 + level) / 2.0  # 0.95
    hi_p = (1.0 - level) / 2.0  # 0.05

    def bound(target):
        # find ncp with P(X <= chi2 | df, ncp) = target
        if chi2_dist.cdf(chi2, df) < target:
            return 0.0
        upper = max(chi2 * 2.0, 10.0)
        while ncx2.cdf(chi2, df, upper) > target:
            upper *= 2.0
            if upper > 1e8:
                return upper
        return brentq(lambda nc: ncx2.cdf(chi2, df, nc) - target, 0.0, upper, xtol=1e-8)

    ncp_lo = bound(lo_p)
    ncp_hi = bound(hi_p)
    scale = df * (n - 1)
    return (float(np.sqrt(ncp_lo / scale)), float(np.sqrt(ncp_hi / scale)))


@dataclass(frozen=True)
class Q3Report:
    q3: np.ndarray  # (J, J), diagonal 1, NaN where undefined
    threshold: float
    flagged: tuple[tuple[str, str, float], ...]
    undefined: tuple[tuple[str, str], ...]
    max_abs: float
    theta_estimator: str = "EAP"


def q3(m: ResponseMatrix, fit: IrtFit, thetas: np.ndarray, threshold: float = 0.2) -> Q3Report:
    """Yen's Q3: pairwise correlations of item residuals x_ij - P_j(theta_i)."""
    if m.item_ids != fit.item_ids:
        raise ValueError("fit does not cover this matrix's items")
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape[0] != m.n:
        raise ValueError("theta vector length must equal N")
    p = np.column_stack([icc(params, thetas) for params in fit.items])
    d = m.cells - p
    sd = d.std(axis=0)
    j = m.j
    q = np.eye(j)
    flagged = []
    undefined = []
    for a in range(j):
        for b in range(a + 1, j):
            if sd[a] == 0.0 or sd[b] == 0.0:
                q[a, b] = q[b, a] = np.nan
                undefined.append((m.item_ids[a], m.item_ids[b]))
                continue
            c = float(np.corrcoef(d[:, a], d[:, b])[0, 1])
            q[a, b] = q[b, a] = c
            if abs(c) > threshold:
                flagged.append((m.item_ids[a], m.item_ids[b], c))
    off = q[np.triu_indices(j, k=1)]
    finite = off[np.isfinite(off)]
    return Q3Report(
        q3=q,
        threshold=threshold,
        flagged=tuple(flagged),
        undefined=tuple(undefined),
        max_abs=float(np.abs(finite).max()) if finite.size else float("nan"),
    )
