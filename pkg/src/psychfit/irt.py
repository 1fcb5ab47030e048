"""Dichotomous IRT: Rasch / 2PL / 3PL fitted by marginal maximum
likelihood EM, plus item response and information functions and EAP
person scoring.

Internally every model is fitted on a standard-normal latent grid in
slope-intercept form. The Rasch model is reported in its canonical
parameterization (all slopes fixed at 1, free latent variance), which is
the same model with the latent scale absorbed into the prior.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit, logsumexp, ndtri

from . import _kernels
from .errors import DegenerateItem
from .ingest import ResponseMatrix

MODEL_KINDS = ("rasch", "2pl", "3pl")

_C_PRIOR_MEAN = logit(0.25)  # four-option multiple choice
_C_PRIOR_SD = 1.0
_A_BOUNDS = (0.05, 6.0)
_B_BOUNDS = (-6.0, 6.0)
_QC_BOUNDS = (logit(1e-4), logit(0.5))


@dataclass(frozen=True)
class ItemParams:
    a: float
    b: float
    c: float = 0.0


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray  # normalized to sum 1

    @classmethod
    def standard_normal(cls, n_nodes: int = 61, bound: float = 6.0) -> "QuadratureGrid":
        nodes = np.linspace(-bound, bound, n_nodes)
        w = np.exp(-0.5 * nodes**2)
        return cls(nodes, w / w.sum())


@dataclass(frozen=True)
class EmConfig:
    tol: float = 1e-4  # max absolute parameter change
    max_iters: int = 500
    n_quad: int = 61
    quad_bound: float = 6.0


@dataclass(frozen=True)
class IrtFit:
    kind: str
    item_ids: tuple[str, ...]
    items: tuple[ItemParams, ...]
    prior_sd: float  # free for Rasch, fixed 1 otherwise
    loglik: float
    n_params: int
    n_obs: int
    n_items: int
    converged: bool
    n_iters: int
    loglik_trace: tuple[float, ...]  # observed-data log-likelihood per EM step
    grid: QuadratureGrid = field(repr=False)

    def latent_grid(self) -> QuadratureGrid:
        """Quadrature over the latent scale N(0, prior_sd^2)."""
        return QuadratureGrid(self.grid.nodes * self.prior_sd, self.grid.weights)

    def prob_grid(self) -> np.ndarray:
        """(Q, J) correct probabilities at the latent-grid nodes."""
        g = self.latent_grid()
        return np.column_stack([icc(p, g.nodes) for p in self.items])


def icc(p: ItemParams, theta):
    """P(theta) = c + (1-c) / (1 + exp(-a (theta - b)))."""
    return p.c + (1.0 - p.c) * expit(p.a * (np.asarray(theta, dtype=np.float64) - p.b))


def item_information(p: ItemParams, theta):
    """Fisher information I(theta) = a^2 (P-c)^2 (1-P) / ((1-c)^2 P)."""
    prob = icc(p, theta)
    return p.a**2 * (prob - p.c) ** 2 * (1.0 - prob) / ((1.0 - p.c) ** 2 * prob)


def test_information(fit: IrtFit, thetas):
    """Summed item information with SE(theta) = 1/sqrt(I); reports the peak."""
    thetas = np.asarray(thetas, dtype=np.float64)
    info = np.zeros_like(thetas)
    for p in fit.items:
        info = info + item_information(p, thetas)
    se = 1.0 / np.sqrt(info)
    peak = int(np.argmax(info))
    return {
        "theta": thetas,
        "information": info,
        "se": se,
        "peak_theta": float(thetas[peak]),
        "peak_information": float(info[peak]),
    }


def _check_matrix(m: ResponseMatrix):
    if m.n < 10:
        raise DegenerateItem(f"need at least 10 examinees, got {m.n}")
    colsum = m.cells.sum(axis=0)
    bad = [m.item_ids[j] for j in range(m.j) if colsum[j] in (0, m.n)]
    if bad:
        raise DegenerateItem(f"all-correct or all-incorrect items: {bad}")


def _estep(x, alpha, d, c, nodes, logw):
    """Posterior over nodes and expected counts; returns loglik too."""
    z = np.outer(nodes, alpha) + d
    p = c + (1.0 - c) * expit(z)
    np.clip(p, 1e-12, 1.0 - 1e-12, out=p)
    ll = _kernels.pattern_loglik(x, p) + logw  # (N, Q)
    row = logsumexp(ll, axis=1)
    post = np.exp(ll - row[:, None])
    nq = post.sum(axis=0)
    r = post.T @ x  # (Q, J)
    return float(row.sum()), nq, r, p


def _newton_2pl_item(alpha0, d0, nodes, nq, rj):
    """Maximize sum_q r log P + (n-r) log(1-P), P = logistic(alpha t + d)."""
    a, d = alpha0, d0

    def objective(a_, d_):
        p = expit(a_ * nodes + d_)
        p = np.clip(p, 1e-12, 1 - 1e-12)
        return rj @ np.log(p) + (nq - rj) @ np.log1p(-p)

    f = objective(a, d)
    for _ in range(8):
        p = expit(a * nodes + d)
        resid = rj - nq * p
        g = np.array([resid @ nodes, resid.sum()])
        w = nq * p * (1.0 - p)
        h = np.array([[w @ (nodes * nodes), w @ nodes], [w @ nodes, w.sum()]])
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        for _ in range(20):
            a_new = float(np.clip(a + scale * step[0], *_A_BOUNDS))
            d_new = float(np.clip(d + scale * step[1], -6.0 * _A_BOUNDS[1], 6.0 * _A_BOUNDS[1]))
            f_new = objective(a_new, d_new)
            if f_new >= f:
                break
            scale *= 0.5
        if f_new < f:
            break
        moved = abs(a_new - a) + abs(d_new - d)
        a, d, f = a_new, d_new, f_new
        if moved < 1e-8:
            break
    return a, d


def _newton_scalar(obj_grad_hess, x0, lo, hi):
    x = x0
    for _ in range(8):
        f, g, h = obj_grad_hess(x)
        if h <= 0:
            break
        step = g / h
        scale = 1.0
        x_new = x
        for _ in range(20):
            cand = float(np.clip(x + scale * step, lo, hi))
            f_new, _, _ = obj_grad_hess(cand)
            if f_new >= f:
                x_new = cand
                break
            scale *= 0.5
        if x_new == x:
            break
        if abs(x_new - x) < 1e-9:
            x = x_new
            break
        x = x_new
    return x


def _mstep_rasch(alpha, d, nodes, nq, r):
    # per-item intercepts, then the common slope; each update is concave
    for jx in range(d.shape[0]):
        rj = r[:, jx]

        def ogh(dj, rj=rj):
            p = np.clip(expit(alpha * nodes + dj), 1e-12, 1 - 1e-12)
            f = rj @ np.log(p) + (nq - rj) @ np.log1p(-p)
            return f, (rj - nq * p).sum(), (nq * p * (1 - p)).sum()

        d[jx] = _newton_scalar(ogh, d[jx], -36.0, 36.0)

    def ogh_alpha(a):
        z = np.outer(nodes, np.full(d.shape[0], a)) + d
        p = np.clip(expit(z), 1e-12, 1 - 1e-12)
        f = float((r * np.log(p) + (nq[:, None] - r) * np.log1p(-p)).sum())
        resid = r - nq[:, None] * p
        g = float((resid * nodes[:, None]).sum())
        h = float(((nq[:, None] * p * (1 - p)) * (nodes**2)[:, None]).sum())
        return f, g, h

    alpha = _newton_scalar(ogh_alpha, alpha, *_A_BOUNDS)
    return alpha, d


def _mstep_3pl_item(a0, b0, qc0, nodes, nq, rj):
    """Penalized M-step for one 3PL item in (a, b, logit c) space."""

    def neg(x):
        a, b, qc = x
        c = expit(qc)
        lgt = expit(a * (nodes - b))
        p = np.clip(c + (1 - c) * lgt, 1e-12, 1 - 1e-12)
        f = rj @ np.log(p) + (nq - rj) @ np.log1p(-p)
        f -= 0.5 * ((qc - _C_PRIOR_MEAN) / _C_PRIOR_SD) ** 2
        dfdp = rj / p - (nq - rj) / (1 - p)
        dl = lgt * (1 - lgt)
        ga = dfdp @ ((1 - c) * dl * (nodes - b))
        gb = dfdp @ (-(1 - c) * dl * a)
        gqc = dfdp @ ((1 - lgt) * c * (1 - c)) - (qc - _C_PRIOR_MEAN) / _C_PRIOR_SD**2
        return -f, -np.array([ga, gb, gqc])

    res = minimize(
        neg,
        np.array([a0, b0, qc0]),
        jac=True,
        method="L-BFGS-B",
        bounds=[_A_BOUNDS, _B_BOUNDS, _QC_BOUNDS],
        options={"maxiter": 50},
    )
    return res.x


def fit_mml(m: ResponseMatrix, kind: str, config: EmConfig | None = None) -> IrtFit:
    """Fit a dichotomous IRT model by marginal maximum likelihood EM.

    The E step integrates over a fixed standard-normal grid; the M step
    is Newton-Raphson per item (L-BFGS-B for the 3PL, which carries a
    weakly-informative prior on logit c). Convergence is max absolute
    change of the reported (a, b, c) parameters.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    config = config or EmConfig()
    _check_matrix(m)
    x = np.ascontiguousarray(m.cells, dtype=np.float64)
    n, j = x.shape
    grid = QuadratureGrid.standard_normal(config.n_quad, config.quad_bound)
    nodes, logw = grid.nodes, np.log(grid.weights)

    p_obs = x.mean(axis=0)
    b0 = 1.7 * ndtri(1.0 - np.clip(p_obs, 1e-3, 1 - 1e-3))
    alpha = np.ones(j)
    d = -np.clip(b0, -6, 6).copy()
    qc = np.full(j, logit(0.2)) if kind == "3pl" else None
    rasch_alpha = 1.0

    def reported():
        if kind == "rasch":
            return np.column_stack([np.ones(j), -d, np.zeros(j)])
        c = expit(qc) if kind == "3pl" else np.zeros(j)
        return np.column_stack([alpha, -d / alpha, c])

    trace = []
    prev = reported()
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        if kind == "rasch":
            a_vec = np.full(j, rasch_alpha)
            c_vec = np.zeros(j)
        elif kind == "2pl":
            a_vec, c_vec = alpha, np.zeros(j)
        else:
            a_vec, c_vec = alpha, expit(qc)
        loglik, nq, r, _ = _estep(x, a_vec, d, c_vec, nodes, logw)
        trace.append(loglik)

        if kind == "rasch":
            rasch_alpha, d = _mstep_rasch(rasch_alpha, d, nodes, nq, r)
        elif kind == "2pl":
            for jx in range(j):
                alpha[jx], d[jx] = _newton_2pl_item(alpha[jx], d[jx], nodes, nq, r[:, jx])
        else:
            for jx in range(j):
                a0, b_cur = alpha[jx], float(np.clip(-d[jx] / alpha[jx], *_B_BOUNDS))
                a_new, b_new, qc_new = _mstep_3pl_item(a0, b_cur, qc[jx], nodes, nq, r[:, jx])
                alpha[jx], qc[jx] = a_new, qc_new
                d[jx] = -a_new * b_new

        cur = reported()
        delta = np.abs(cur - prev).max()
        prev = cur
        if delta < config.tol:
            converged = True
            break

    # final E step for the log-likelihood at the converged parameters
    if kind == "rasch":
        a_vec, c_vec = np.full(j, rasch_alpha), np.zeros(j)
    elif kind == "2pl":
        a_vec, c_vec = alpha, np.zeros(j)
    else:
        a_vec, c_vec = alpha, expit(qc)
    loglik, _, _, _ = _estep(x, a_vec, d, c_vec, nodes, logw)
    trace.append(loglik)

    params = reported()
    items = tuple(ItemParams(float(a), float(b), float(c)) for a, b, c in params)
    if kind == "rasch":
        n_params = j + 1
        prior_sd = float(rasch_alpha)
    elif kind == "2pl":
        n_params = 2 * j
        prior_sd = 1.0
    else:
        n_params = 3 * j
        prior_sd = 1.0
    return IrtFit(
        kind=kind,
        item_ids=m.item_ids,
        items=items,
        prior_sd=prior_sd,
        loglik=float(loglik),
        n_params=n_params,
        n_obs=n,
        n_items=j,
        converged=converged,
        n_iters=it,
        loglik_trace=tuple(trace),
        grid=grid,
    )


def eap_scores(m: ResponseMatrix, fit: IrtFit) -> np.ndarray:
    """Posterior mean and SD of theta per examinee; returns (N, 2)."""
    if m.item_ids != fit.item_ids:
        raise ValueError("fit does not cover this matrix's items")
    g = fit.latent_grid()
    p = np.clip(fit.prob_grid(), 1e-12, 1 - 1e-12)
    ll = _kernels.pattern_loglik(np.asarray(m.cells, dtype=np.float64), p) + np.log(g.weights)
    post = np.exp(ll - logsumexp(ll, axis=1)[:, None])
    mean = post @ g.nodes
    var = post @ g.nodes**2 - mean**2
    return np.column_stack([mean, np.sqrt(np.maximum(var, 0.0))])
