"""Aggregate reliability evidence: alpha, omega total, and the test
information summary."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ctt import cronbach_alpha
from .dimensionality import FactorSolution
from .ingest import ResponseMatrix
from .irt import IrtFit, test_information

_D_SCALING = 1.7  # logistic-to-normal-ogive scaling for the slope conversion


def omega_total(sol: FactorSolution) -> float:
    """omega_t = (sum lambda)^2 / ((sum lambda)^2 + sum psi)."""
    lam = np.asarray(sol.loadings, dtype=np.float64)
    psi = np.asarray(sol.uniquenesses, dtype=np.float64)
    if lam.shape[0] < 2:
        raise ValueError("omega needs at least 2 items")
    s = lam.sum() ** 2
    return float(s / (s + psi.sum()))


def omega_from_loadings(loadings, uniquenesses) -> float:
    lam = np.asarray(loadings, dtype=np.float64)
    psi = np.asarray(uniquenesses, dtype=np.float64)
    s = lam.sum() ** 2
    return float(s / (s + psi.sum()))


def loadings_from_slopes(fit: IrtFit) -> tuple[np.ndarray, np.ndarray]:
    """Convert IRT slopes to factor loadings, lambda = a / sqrt(a^2 + D^2)."""
    a = np.array([p.a for p in fit.items])
    lam = a / np.sqrt(a**2 + _D_SCALING**2)
    return lam, 1.0 - lam**2


@dataclass(frozen=True)
class ReliabilityReport:
    alpha: float
    omega_total: float
    omega_source: str  # "factor" or "irt_slopes"
    tif_peak_theta: float
    tif_peak_value: float
    se_at_peak: float
    theta_grid: np.ndarray
    information: np.ndarray
    se: np.ndarray
    threshold: float
    alpha_acceptable: bool
    omega_acceptable: bool
    low_reliability_warning: bool


def reliability_report(
    m: ResponseMatrix,
    sol: FactorSolution,
    fit: IrtFit,
    theta_grid=None,
    omega_source: str = "factor",
    threshold: float = 0.7,
) -> ReliabilityReport:
    """Combine alpha, omega total, and the test information function.

    omega_source="factor" uses the tetrachoric-based factor solution;
    "irt_slopes" converts the fitted discriminations instead.
    """
    if theta_grid is None:
        theta_grid = np.linspace(-4.0, 4.0, 161)
    alpha = cronbach_alpha(m.cells)
    if omega_source == "factor":
        omega = omega_total(sol)
    elif omega_source == "irt_slopes":
        omega = omega_from_loadings(*loadings_from_slopes(fit))
    else:
        raise ValueError(f"unknown omega source {omega_source!r}")
    tif = test_information(fit, theta_grid)
    peak_value = tif["peak_information"]
    return ReliabilityReport(
        alpha=float(alpha),
        omega_total=float(omega),
        omega_source=omega_source,
        tif_peak_theta=tif["peak_theta"],
        tif_peak_value=peak_value,
        se_at_peak=float(1.0 / np.sqrt(peak_value)),
        theta_grid=np.asarray(theta_grid, dtype=np.float64),
        information=tif["information"],
        se=tif["se"],
        threshold=threshold,
        alpha_acceptable=bool(alpha >= threshold),
        omega_acceptable=bool(omega >= threshold),
        low_reliability_warning=bool(alpha < 0.0 or omega < 0.0),
    )
