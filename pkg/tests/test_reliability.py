import numpy as np
import pytest

from psychfit import (
    cronbach_alpha,
    loadings_from_slopes,
    omega_from_loadings,
    omega_total,
    reliability_report,
    single_factor_fit,
)
from psychfit.irt import IrtFit, ItemParams, QuadratureGrid, fit_mml
from psychfit.irt import test_information as tif_curve
from psychfit.simulate import SimSpec, sample_item_params, simulate_responses


def solution_for(lam):
    lam = np.asarray(lam, dtype=np.float64)
    r = np.outer(lam, lam) + np.diag(1 - lam**2)
    return single_factor_fit(r, n=500)


class TestOmega:
    def test_hand_value(self):
        # lambda = 0.6 for 4 items: (2.4)^2 / ((2.4)^2 + 4 * 0.64)
        sol = solution_for([0.6] * 4)
        assert omega_total(sol) == pytest.approx(0.6923, abs=1e-3)

    def test_perfect_loadings(self):
        assert omega_from_loadings([1.0, 1.0], [0.0, 0.0]) == pytest.approx(1.0)

    def test_zero_loadings(self):
        assert omega_from_loadings([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]) == pytest.approx(0.0)

    def test_monotone_in_loading_size(self):
        low = omega_from_loadings([0.3] * 5, [1 - 0.09] * 5)
        high = omega_from_loadings([0.8] * 5, [1 - 0.64] * 5)
        assert high > low

    def test_consistent_with_factor_solution(self):
        sol = solution_for([0.4, 0.5, 0.6, 0.7])
        direct = omega_from_loadings(sol.loadings, sol.uniquenesses)
        assert omega_total(sol) == pytest.approx(direct, abs=1e-12)


class TestLoadingsFromSlopes:
    def _fit(self, items):
        return IrtFit("2pl", tuple(f"q{i+1}" for i in range(len(items))), tuple(items),
                      1.0, 0.0, 2 * len(items), 100, len(items), True, 0, (),
                      QuadratureGrid.standard_normal())

    def test_a_equals_d_gives_half_variance(self):
        fit = self._fit([ItemParams(1.7, 0.0)])
        lam, psi = loadings_from_slopes(fit)
        assert lam[0] == pytest.approx(1.0 / np.sqrt(2.0))
        assert psi[0] == pytest.approx(0.5)

    def test_loading_in_unit_interval_and_monotone(self):
        fits = [self._fit([ItemParams(a, 0.0)]) for a in (0.2, 1.0, 3.0)]
        lams = [loadings_from_slopes(f)[0][0] for f in fits]
        assert all(0 < l < 1 for l in lams)
        assert lams == sorted(lams)

    def test_communality_identity(self):
        fit = self._fit([ItemParams(1.3, 0.5), ItemParams(0.9, -1.0)])
        lam, psi = loadings_from_slopes(fit)
        assert np.allclose(lam**2 + psi, 1.0)


class TestReliabilityReport:
    def _setup(self):
        items = sample_item_params(12, seed=71, a_range=(0.8, 1.6), b_range=(-1.5, 1.5))
        m, _ = simulate_responses(SimSpec(items=items, n=800, seed=71))
        fit = fit_mml(m, "2pl")
        sol = solution_for(loadings_from_slopes(fit)[0])
        return m, sol, fit

    def test_alpha_delegates(self):
        m, sol, fit = self._setup()
        rep = reliability_report(m, sol, fit)
        assert rep.alpha == pytest.approx(cronbach_alpha(m.cells))

    def test_omega_sources(self):
        m, sol, fit = self._setup()
        factor = reliability_report(m, sol, fit, omega_source="factor")
        slopes = reliability_report(m, sol, fit, omega_source="irt_slopes")
        assert factor.omega_total == pytest.approx(omega_total(sol))
        assert slopes.omega_total == pytest.approx(
            omega_from_loadings(*loadings_from_slopes(fit)))
        with pytest.raises(ValueError):
            reliability_report(m, sol, fit, omega_source="parallel")

    def test_tif_consistency(self):
        m, sol, fit = self._setup()
        grid = np.linspace(-3, 3, 61)
        rep = reliability_report(m, sol, fit, theta_grid=grid)
        tif = tif_curve(fit, grid)
        assert rep.tif_peak_theta == tif["peak_theta"]
        assert rep.se_at_peak == pytest.approx(1.0 / np.sqrt(tif["peak_information"]))
        assert np.allclose(rep.information, tif["information"])

    def test_threshold_flags(self):
        m, sol, fit = self._setup()
        strict = reliability_report(m, sol, fit, threshold=0.99)
        lax = reliability_report(m, sol, fit, threshold=0.0)
        assert not strict.alpha_acceptable
        assert lax.alpha_acceptable and lax.omega_acceptable

    def test_alpha_le_omega_for_congeneric(self):
        # with unequal loadings alpha understates omega (classic inequality)
        sol = solution_for([0.3, 0.4, 0.6, 0.8, 0.9])
        lam = sol.loadings
        omega = omega_total(sol)
        # population alpha from the model-implied covariance
        cov = np.outer(lam, lam) + np.diag(1 - lam**2)
        k = 5
        alpha_pop = k / (k - 1) * (1 - np.trace(cov) / cov.sum())
        assert alpha_pop <= omega + 1e-12
