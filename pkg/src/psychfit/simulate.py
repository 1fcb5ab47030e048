"""Seeded synthetic-data generators used as independent oracles.

Randomness comes from the Philox counter-based generator with one
stream per examinee (key = (seed, examinee index)), so generation order
cannot change the output. Normal variates use the inverse CDF, never
rejection sampling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .ingest import ResponseMatrix, ScoreTable
from .irt import ItemParams, icc


@dataclass(frozen=True)
class SimSpec:
    items: tuple[ItemParams, ...]
    n: int
    latent_mean: float = 0.0
    latent_sd: float = 1.0
    seed: int = 0


def _examinee_stream(seed: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))


def simulate_responses(spec: SimSpec) -> tuple[ResponseMatrix, np.ndarray]:
    """Draw theta_i ~ N(mean, sd^2) and x_ij ~ Bernoulli(icc_j(theta_i))."""
    j = len(spec.items)
    cells = np.empty((spec.n, j), dtype=np.int8)
    thetas = np.empty(spec.n)
    for i in range(spec.n):
        rng = _examinee_stream(spec.seed, i)
        u = np.clip(rng.random(j + 1), 1e-15, 1.0 - 1e-16)
        theta = spec.latent_mean + spec.latent_sd * ndtri(u[0])
        thetas[i] = theta
        for jx, p in enumerate(spec.items):
            cells[i, jx] = 1 if u[jx + 1] < icc(p, theta) else 0
    m = ResponseMatrix(
        tuple(f"p{i+1}" for i in range(spec.n)),
        tuple(f"q{jx+1}" for jx in range(j)),
        cells,
    )
    return m, thetas


def sample_item_params(j: int, seed: int, a_range=(0.8, 2.0), b_range=(-2.0, 2.0),
                       c_value: float = 0.0) -> tuple[ItemParams, ...]:
    """Uniformly sampled item parameters for recovery studies."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 2**32], dtype=np.uint64)))
    a = a_range[0] + (a_range[1] - a_range[0]) * rng.random(j)
    b = b_range[0] + (b_range[1] - b_range[0]) * rng.random(j)
    return tuple(ItemParams(float(ai), float(bi), c_value) for ai, bi in zip(a, b))


def simulate_regression(n: int, betas, noise_sd: float, seed: int,
                        names: tuple[str, ...] | None = None,
                        dv_name: str = "y") -> ScoreTable:
    """Standardized independent predictors, DV = X beta + noise."""
    betas = np.asarray(betas, dtype=np.float64)
    k = betas.shape[0]
    xs = np.empty((n, k))
    eps = np.empty(n)
    for i in range(n):
        rng = _examinee_stream(seed, i)
        u = np.clip(rng.random(k + 1), 1e-15, 1.0 - 1e-16)
        xs[i] = ndtri(u[:k])
        eps[i] = noise_sd * ndtri(u[k])
    y = xs @ betas + eps
    names = names or tuple(f"x{q+1}" for q in range(k))
    cols = {dv_name: y}
    for q, name in enumerate(names):
        cols[name] = xs[:, q]
    return ScoreTable(cols)
