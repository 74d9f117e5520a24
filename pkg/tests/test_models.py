import numpy as np
import pytest

from cmlab.distributions import MixtureParams, marginal_at
from cmlab.harness import fit_loglog
from cmlab.models import (discretized_cm, empirical_cm, estimate_lipschitz,
                          exact_cm, exact_score_model, measure_cm_error,
                          measure_score_error, perturb_cm, perturb_score,
                          recover_score)
from cmlab.schedule import build_grid


def wide_gaussian(d=1):
    return MixtureParams.gaussian(np.zeros(d), 4.0 * np.ones(d))


def s_t(t, var0=4.0):
    return np.sqrt(var0 * np.exp(-2 * t) + 1 - np.exp(-2 * t))


class TestPerturbScore:
    def test_zero_target_is_exact(self):
        dist = wide_gaussian(2)
        sm = perturb_score(dist, 0.0, 5)
        ex = exact_score_model(dist)
        x = np.random.default_rng(0).normal(size=(10, 2))
        assert np.allclose(sm(x, 0.7), ex(x, 0.7))

    def test_measured_error_bounded_by_target(self):
        dist = wide_gaussian(2)
        grid = build_grid(0.05, 0.2, 1.0)
        sm = perturb_score(dist, 0.1, 5)
        eps = measure_score_error(sm, dist, grid, 300, 1)
        assert 0.0 < eps <= 0.1 * np.sqrt(2)
        assert sm.measured_eps_sc == eps

    def test_injection_is_exactly_linear(self):
        dist = wide_gaussian(2)
        grid = build_grid(0.05, 0.2, 1.0)
        e1 = measure_score_error(perturb_score(dist, 0.1, 5), dist, grid,
                                 300, 1)
        e2 = measure_score_error(perturb_score(dist, 0.2, 5), dist, grid,
                                 300, 1)
        assert e2 / e1 == pytest.approx(2.0, abs=1e-9)

    def test_exact_model_measures_zero(self):
        dist = wide_gaussian(2)
        grid = build_grid(0.05, 0.2, 1.0)
        assert measure_score_error(exact_score_model(dist), dist, grid,
                                   200, 1) <= 1e-14

    def test_measure_stable_across_seeds(self):
        dist = wide_gaussian(2)
        grid = build_grid(0.05, 0.2, 1.0)
        vals = [measure_score_error(perturb_score(dist, 0.1, 5), dist, grid,
                                    2000, s) for s in (1, 2, 3)]
        spread = max(vals) - min(vals)
        assert spread <= 3 * 0.1 * np.sqrt(2) / np.sqrt(2000) * 3


class TestPerturbCm:
    def test_zero_target_is_base(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        base = discretized_cm(exact_score_model(dist), grid)
        pert = perturb_cm(base, 0.0, 9)
        x = np.random.default_rng(0).normal(size=(5, 1))
        assert np.allclose(pert(x, 1.0), base(x, 1.0))

    def test_boundary_condition_for_any_eps(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        base = discretized_cm(exact_score_model(dist), grid)
        pert = perturb_cm(base, 0.5, 9)
        x = np.random.default_rng(1).normal(size=(100, 1))
        assert np.allclose(pert(x, 0.05), x, atol=1e-14)

    def test_measured_error_linear_in_target(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        sm = exact_score_model(dist)
        base = discretized_cm(sm, grid)
        e1 = measure_cm_error(perturb_cm(base, 0.1, 9), sm, dist, grid,
                              200, 1)
        e2 = measure_cm_error(perturb_cm(base, 0.2, 9), sm, dist, grid,
                              200, 1)
        assert e2 / e1 == pytest.approx(2.0, rel=1e-6)


class TestMeasureCmError:
    def test_stationary_empirical_is_consistent(self):
        dist = MixtureParams.standard_normal(1)
        sm = exact_score_model(dist)
        grid = build_grid(0.05, 0.2, 1.0)
        cm = empirical_cm(sm, 0.05)
        assert measure_cm_error(cm, sm, dist, grid, 100, 1) <= 1e-6

    def test_empirical_cm_error_is_first_order_in_h(self):
        dist = wide_gaussian()
        sm = exact_score_model(dist)
        cm = empirical_cm(sm, 0.02)
        hs = [0.4, 0.2, 0.1]
        errs = [measure_cm_error(cm, sm, dist, build_grid(0.02, h, 1.6),
                                 150, 1) for h in hs]
        fit = fit_loglog(hs, errs)
        assert abs(fit.slope - 1.0) <= 0.35

    def test_discretized_cm_is_exactly_consistent_on_its_grid(self):
        dist = wide_gaussian()
        sm = exact_score_model(dist)
        grid = build_grid(0.05, 0.2, 1.0)
        cm = discretized_cm(sm, grid)
        assert measure_cm_error(cm, sm, dist, grid, 150, 1) <= 1e-12


class TestBoundary:
    def test_all_model_kinds_are_identity_at_delta(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        sm = exact_score_model(dist)
        x = np.random.default_rng(2).normal(size=(100, 1))
        for cm in (exact_cm(dist, 0.05), empirical_cm(sm, 0.05),
                   discretized_cm(sm, grid),
                   perturb_cm(discretized_cm(sm, grid), 0.3, 4)):
            assert np.allclose(cm(x, 0.05), x, atol=1e-14)


class TestEstimateLipschitz:
    def test_stationary_identity_map(self):
        dist = MixtureParams.standard_normal(2)
        cm = exact_cm(dist, 0.01)
        lf = estimate_lipschitz(cm, dist, 1.0, 100, 3)
        assert lf == pytest.approx(1.0, abs=1e-4)

    def test_gaussian_closed_form_ratio(self):
        dist = wide_gaussian()
        cm = exact_cm(dist, 0.05)
        t = 1.0
        lf = estimate_lipschitz(cm, dist, t, 100, 3)
        assert lf == pytest.approx(s_t(0.05) / s_t(t), rel=1e-3)
        assert cm.measured_Lf == lf


class TestRecoverScore:
    def test_stationary_recovery_is_exact(self):
        dist = MixtureParams.standard_normal(1)
        grid = build_grid(0.05, 0.2, 1.0)
        cm = empirical_cm(exact_score_model(dist), 0.05)
        rec = recover_score(cm, grid)
        x = np.random.default_rng(4).normal(size=(20, 1))
        assert np.allclose(rec(x, grid.points[1]), -x, atol=1e-9)

    def test_gaussian_recovery_matches_closed_form(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        cm = empirical_cm(exact_score_model(dist), 0.05)
        rec = recover_score(cm, grid)
        t2 = float(grid.points[1])
        x = np.random.default_rng(5).normal(size=(20, 1))
        # first-order recovery: tolerance dominated by O(h1) truncation
        assert np.allclose(rec(x, t2), -x / s_t(t2) ** 2,
                           atol=0.05 * np.abs(x).max())

    def test_needs_two_grid_points(self):
        dist = wide_gaussian()
        grid = build_grid(0.05, 0.2, 1.0)
        cm = exact_cm(dist, 0.05)
        with pytest.raises(ValueError):
            recover_score(cm, type(grid)(delta=0.05, h=0.2, T=1.0,
                                         points=np.array([0.05]),
                                         stage_boundary=0))
