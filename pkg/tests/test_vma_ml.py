import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import rel_fro, simulate_ma1
from metasmooth import scalar_ma1
from metasmooth.errors import DimensionMismatch, NotPositiveDefinite
from metasmooth.meta import meta_fit
from metasmooth.model import ReducedParams, structural_to_reduced
from metasmooth.simulate import SimulationSpec, difference, preset, simulate
from metasmooth.vma_ml import MLConfig, ml_fit, vma_nll, vma_residuals


def model_data(model, T, seed):
    return difference(simulate(SimulationSpec(preset(model), T + 1, seed)))


class TestNll:
    def test_zero_theta(self):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((40, 2))
        S = np.array([[2.0, 0.3], [0.3, 1.0]])
        Sinv = np.linalg.inv(S)
        expected = 0.5 * sum(np.log(np.linalg.det(S)) + z @ Sinv @ z for z in Z)
        assert vma_nll(Z, ReducedParams(np.zeros((2, 2)), S)) == pytest.approx(expected, rel=1e-12)

    def test_residual_recursion(self):
        Z = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        theta = np.array([[0.5, 0.1], [0.0, 0.2]])
        u = vma_residuals(Z, theta)
        assert_allclose(u[0], Z[0])
        assert_allclose(u[1], Z[1] + theta @ u[0])
        assert_allclose(u[2], Z[2] + theta @ u[1])

    @pytest.mark.parametrize("seed", range(5))
    def test_scalar_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(100)
        psi, sigma = rng.uniform(-0.9, 0.9), rng.uniform(0.1, 5)
        multi = vma_nll(x[:, None], ReducedParams([[psi]], [[sigma]]))
        assert multi == pytest.approx(scalar_ma1.nll(x, psi, sigma), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            vma_nll(np.ones((30, 3)), ReducedParams(np.zeros((2, 2)), np.eye(2)))

    def test_non_pd_sigma(self):
        r = ReducedParams(np.zeros((2, 2)), np.diag([1.0, -1.0]), check=False)
        with pytest.raises(NotPositiveDefinite):
            vma_nll(np.ones((30, 2)), r)

    def test_truth_dominates_perturbation(self):
        truth = structural_to_reduced(preset(1))
        bumped = ReducedParams(truth.theta + 0.1 * np.eye(2), truth.sigma_u)
        wins = sum(vma_nll(Z, truth) < vma_nll(Z, bumped)
                   for Z in (model_data(1, 1000, [5, r]) for r in range(100)))
        assert wins >= 95


class TestMlFit:
    def test_descent_from_truth(self):
        truth = structural_to_reduced(preset(1))
        Z = model_data(1, 1000, 31)
        res = ml_fit(Z, MLConfig(init="explicit", init_params=truth))
        assert res.nll <= res.initial_nll
        assert res.initial_nll == pytest.approx(vma_nll(Z, truth), rel=1e-12)
        assert res.init_source == "explicit"
        # the MLE lies within sampling noise of the truth (about 0.1 relative at this T)
        assert rel_fro(res.reduced.theta, truth.theta) < 0.25

    @pytest.mark.parametrize("init", ["moment", "meta"])
    def test_descent_from_default_starts(self, init):
        res = ml_fit(model_data(3, 400, 8), MLConfig(init=init))
        assert res.nll <= res.initial_nll
        assert res.init_source == init
        assert res.converged

    def test_scalar_agreement(self):
        for seed in range(3):
            x = simulate_ma1(0.5, 2.0, 800, np.random.default_rng([40, seed]))
            f = scalar_ma1.fit(x)
            res = ml_fit(x[:, None])
            assert res.reduced.theta[0, 0] == pytest.approx(f.psi, abs=1e-4)
            assert res.reduced.sigma_u[0, 0] == pytest.approx(f.sigma, abs=1e-4 * max(1, f.sigma))

    def test_iteration_limit(self):
        res = ml_fit(model_data(1, 300, 2), MLConfig(max_iterations=1))
        assert res.max_iterations_exceeded
        assert not res.converged
        assert res.nll <= res.initial_nll

    def test_default_start_when_moments_fail(self):
        # AR(1) data with lag-1 correlation near 0.9 has no invertible MA(1) match
        from scipy.signal import lfilter

        e = np.random.default_rng(4).standard_normal((400, 2))
        Z = lfilter([1.0], [1.0, -0.9], e, axis=0)
        res = ml_fit(Z)
        assert res.init_source == "default"

    def test_projection_keeps_invertible(self):
        # over-differenced noise pushes the MA root towards the unit circle
        e = np.random.default_rng(6).standard_normal((301, 2))
        res = ml_fit(np.diff(e, axis=0))
        assert np.max(np.abs(np.linalg.eigvals(res.reduced.theta))) <= 1 - 1e-4 + 1e-12

    def test_json(self):
        out = ml_fit(model_data(1, 200, 1)).to_json()
        assert out["estimator"] == "ml"
        assert out["diagnostics"]["nll"] <= out["diagnostics"]["initial_nll"]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MLConfig(max_iterations=0)
        with pytest.raises(ValueError):
            MLConfig(init="explicit")
        with pytest.raises(ValueError):
            MLConfig(init="bogus")


def _wall_clock(fn, datasets):
    t0 = time.perf_counter()
    for Z in datasets:
        fn(Z)
    return time.perf_counter() - t0


@pytest.mark.slow
class TestCost:
    def test_meta_faster_than_ml(self):
        data = [model_data(3, 1000, [9, r]) for r in range(10)]
        ml_fit(data[0])  # compile the residual kernel outside the timed region
        t_meta = _wall_clock(meta_fit, data)
        t_ml = _wall_clock(ml_fit, data)
        assert t_ml >= 3 * t_meta

    def test_ml_cost_grows_with_dimension(self):
        two = [model_data(1, 1000, [10, r]) for r in range(5)]
        three = [model_data(3, 1000, [10, r]) for r in range(5)]
        ml_fit(two[0])
        assert _wall_clock(ml_fit, three) > _wall_clock(ml_fit, two)
