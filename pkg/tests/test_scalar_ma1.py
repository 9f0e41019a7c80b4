import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import simulate_ma1
from metasmooth import scalar_ma1
from metasmooth.errors import DegenerateSeries, DomainError, NotRepresentable
from metasmooth.scalar_ma1 import ScalarMA1Params


class TestNll:
    def test_white_noise(self):
        assert scalar_ma1.nll([1.0, 2.0], 0.0, 1.0) == pytest.approx(2.5, abs=1e-15)

    def test_recurrence(self):
        # v = (1, 1 + 0.5 * 1) = (1, 1.5)
        assert scalar_ma1.nll([1.0, 1.0], 0.5, 1.0) == pytest.approx(1.625, abs=1e-15)

    @pytest.mark.parametrize("psi", [-0.8, 0.0, 0.3, 0.95])
    def test_sigma_scaling_identity(self, psi):
        x = np.random.default_rng(3).standard_normal(50)
        v = scalar_ma1.residuals(x, psi)
        sigma = 2.7
        lhs = scalar_ma1.nll(x, psi, sigma) - scalar_ma1.nll(x, psi, 1.0)
        rhs = 0.5 * x.size * np.log(sigma) + (1 / (2 * sigma) - 0.5) * np.dot(v, v)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("psi,sigma", [(1.0, 1.0), (-1.2, 1.0), (0.0, 0.0), (0.0, -1.0)])
    def test_domain(self, psi, sigma):
        with pytest.raises(DomainError):
            scalar_ma1.nll([1.0, 2.0, 3.0], psi, sigma)


class TestFit:
    def test_recovers_psi(self):
        hits = 0
        for seed in range(100):
            x = simulate_ma1(0.5, 1.0, 10_000, np.random.default_rng(seed))
            hits += 0.45 <= scalar_ma1.fit(x).psi <= 0.55
        assert hits >= 99

    def test_white_noise(self):
        hits = 0
        for seed in range(100):
            x = np.random.default_rng(1000 + seed).standard_normal(10_000)
            hits += abs(scalar_ma1.fit(x).psi) < 0.05
        assert hits >= 99

    def test_sigma_is_mean_square_residual(self):
        x = simulate_ma1(-0.3, 2.0, 500, np.random.default_rng(5))
        f = scalar_ma1.fit(x)
        v = scalar_ma1.residuals(x, f.psi)
        assert f.sigma == np.dot(v, v) / x.size
        assert f.nll == scalar_ma1.nll(x, f.psi, f.sigma)
        assert f.converged

    def test_constant_series(self):
        with pytest.raises(DegenerateSeries):
            scalar_ma1.fit(np.full(30, 1.5))

    def test_too_short(self):
        with pytest.raises(ValueError):
            scalar_ma1.fit([1.0, 2.0])

    def test_boundary_flag(self):
        # over-differenced white noise has a unit MA root
        e = np.random.default_rng(11).standard_normal(201)
        f = scalar_ma1.fit(np.diff(e))
        assert f.psi > 0.9
        x = simulate_ma1(0.2, 1.0, 200, np.random.default_rng(12))
        assert not scalar_ma1.fit(x).at_boundary

    def test_stays_inside_margin(self):
        e = np.random.default_rng(13).standard_normal(101)
        f = scalar_ma1.fit(np.diff(e))
        assert abs(f.psi) <= 1 - scalar_ma1.DELTA

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-0.9, 0.9), st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
    def test_scale_and_sign_equivariance(self, psi, c, seed):
        x = simulate_ma1(psi, 1.0, 300, np.random.default_rng(seed))
        base = scalar_ma1.fit(x)
        scaled = scalar_ma1.fit(c * x)
        flipped = scalar_ma1.fit(-x)
        assert scaled.psi == pytest.approx(base.psi, abs=1e-6)
        assert scaled.sigma == pytest.approx(c * c * base.sigma, rel=1e-5)
        assert flipped.psi == base.psi
        assert flipped.sigma == base.sigma

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-0.9, 0.9), st.floats(0.05, 20.0), st.integers(0, 2**32 - 1))
    def test_concentrated_sigma_is_optimal(self, psi, sigma, seed):
        x = simulate_ma1(psi, 1.0, 200, np.random.default_rng(seed))
        f = scalar_ma1.fit(x)
        assert f.nll <= scalar_ma1.nll(x, f.psi, sigma) + 1e-9 * abs(f.nll)

    @pytest.mark.slow
    def test_consistency(self):
        def median_error(T):
            errs = [abs(scalar_ma1.fit(simulate_ma1(0.6, 1.0, T, np.random.default_rng([T, r]))).psi - 0.6)
                    for r in range(200)]
            return np.median(errs)

        assert median_error(2000) < median_error(200)


class TestMoments:
    @pytest.mark.parametrize("psi,sigma,expected", [
        (0.0, 3.0, (3.0, 0.0)),
        (0.5, 1.0, (1.25, -0.5)),
        (-0.5, 2.0, (2.5, 1.0)),
    ])
    def test_forward(self, psi, sigma, expected):
        assert_allclose(scalar_ma1.moments_from_params(ScalarMA1Params(psi, sigma)), expected)

    def test_inverse(self):
        p = scalar_ma1.params_from_moments(1.25, -0.5)
        assert p.psi == pytest.approx(0.5, abs=1e-15)
        assert p.sigma == pytest.approx(1.0, abs=1e-15)

    def test_white_noise_inverse(self):
        assert scalar_ma1.params_from_moments(3.0, 0.0) == ScalarMA1Params(0.0, 3.0)

    @pytest.mark.parametrize("g0,g1", [(1.0, -0.6), (1.0, 0.5), (0.0, 0.0), (-1.0, 0.1)])
    def test_not_representable(self, g0, g1):
        with pytest.raises(NotRepresentable):
            scalar_ma1.params_from_moments(g0, g1)

    @settings(max_examples=200)
    @given(st.floats(0.01, 100.0), st.floats(-0.499, 0.499))
    def test_roundtrip(self, g0, ratio):
        g1 = ratio * g0
        back = scalar_ma1.moments_from_params(scalar_ma1.params_from_moments(g0, g1))
        assert back[0] == pytest.approx(g0, rel=1e-12)
        assert back[1] == pytest.approx(g1, rel=1e-12, abs=1e-12 * g0)


class TestFisher:
    def test_white_noise(self):
        assert_allclose(scalar_ma1.fisher_info(ScalarMA1Params(0.0, 1.0)), np.diag([1.0, 0.5]))

    def test_psi_06(self):
        assert_allclose(scalar_ma1.fisher_info(ScalarMA1Params(0.6, 1.0)), np.diag([1.5625, 0.5]))

    def test_domain(self):
        with pytest.raises(DomainError):
            ScalarMA1Params(1.0, 1.0)
        with pytest.raises(DomainError):
            ScalarMA1Params(0.0, 0.0)
