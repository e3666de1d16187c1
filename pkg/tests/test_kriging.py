import numpy as np
import pytest

from holecov import catalog
from holecov.errors import DomainError, FactorizationError, InvalidModelError
from holecov.field import SpatialDataset
from holecov.kriging import (
    JITTER_LADDER,
    factorize,
    save_predictions_csv,
    simple_krige,
    simulate_gaussian,
    split_sample_validate,
    standard_normals,
)
from holecov.models import Cauchy, Gaussian, Matern
from holecov.transforms import GeometricAniso, evaluate, gram_matrix
from holecov.anisotropy import AnisotropyMatrix


def grid(n, spacing=1.0):
    g = np.arange(n) * spacing
    return np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


MODEL = catalog.scenario_I(Matern(1.5))


class TestNormals:
    def test_reproducible(self):
        assert np.array_equal(standard_normals(5, 101), standard_normals(5, 101))

    def test_prefix_stable(self):
        assert np.array_equal(standard_normals(5, 10), standard_normals(5, 11)[:10])

    def test_documented_stream(self):
        raw = np.random.Philox(key=9).random_raw(2)
        u = ((raw >> np.uint64(11)).astype(float) + 0.5) / 2.0**53
        expected = np.sqrt(-2 * np.log(u[0])) * np.cos(2 * np.pi * u[1])
        assert standard_normals(9, 1)[0] == expected

    def test_moments(self):
        z = standard_normals(1, 200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1) < 0.01

    @pytest.mark.parametrize("seed", [-1, 1.5, "a"])
    def test_bad_seed(self, seed):
        with pytest.raises(DomainError):
            standard_normals(seed, 3)


class TestFactorize:
    def test_no_jitter_for_well_conditioned(self):
        g = gram_matrix(MODEL, grid(5))
        f = factorize(g)
        assert f.jitter == 0.0
        np.testing.assert_allclose(f.lower @ f.lower.T, g, atol=1e-12)

    def test_escalates(self):
        # Gaussian on a dense lattice is numerically singular
        g = gram_matrix(GeometricAniso(Gaussian(), AnisotropyMatrix.identity(2)), grid(12, 0.1))
        f = factorize(g)
        assert f.jitter in [e * g[0, 0] for e in JITTER_LADDER[1:]]

    def test_fails_with_condition(self):
        g = -np.eye(3)
        with pytest.raises(FactorizationError) as info:
            factorize(g, 1.0)
        assert info.value.condition is not None


class TestKriging:
    def setup_method(self):
        pts = grid(8)
        self.data = SpatialDataset(pts, simulate_gaussian(MODEL, pts, 3))

    def test_exact_at_data(self):
        res = simple_krige(MODEL, self.data, self.data.locations)
        np.testing.assert_allclose(res.predictions, self.data.z, rtol=1e-8, atol=1e-8 * np.abs(self.data.z).max())
        np.testing.assert_allclose(res.variances, 0.0, atol=1e-8)

    def test_far_query_reverts_to_mean(self):
        res = simple_krige(MODEL, self.data, [[500.0, 500.0]])
        assert abs(res.predictions[0]) < 1e-10
        assert res.variances[0] == pytest.approx(evaluate(MODEL, np.zeros(2)))

    def test_variance_bounded(self):
        q = np.random.default_rng(0).uniform(-2, 9, (40, 2))
        res = simple_krige(MODEL, self.data, q)
        c0 = evaluate(MODEL, np.zeros(2))
        assert np.all((res.variances >= 0) & (res.variances <= c0 * (1 + 1e-12)))

    def test_single_datum(self):
        d = SpatialDataset([[0.0, 0.0]], [2.0])
        m = GeometricAniso(Cauchy(1.0), AnisotropyMatrix.identity(2))
        res = simple_krige(m, d, [[1.0, 0.0]])
        assert res.predictions[0] == pytest.approx(2.0 * 0.5)

    def test_requires_valid(self):
        with pytest.raises(InvalidModelError):
            simple_krige(catalog.scenario_I(Matern(1.5), b1=2.0), self.data, [[0, 0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            simple_krige(MODEL, self.data, [[0.0, 0.0, 0.0]])

    def test_csv(self, tmp_path):
        q = np.array([[0.5, 0.5], [1.5, 2.5]])
        res = simple_krige(MODEL, self.data, q)
        save_predictions_csv(tmp_path / "p.csv", q, res)
        rows = (tmp_path / "p.csv").read_text().splitlines()
        assert rows[0] == "x,y,prediction,variance"
        assert float(rows[1].split(",")[2]) == res.predictions[0]


class TestSimulation:
    def test_bit_identical(self):
        pts = grid(6)
        assert np.array_equal(simulate_gaussian(MODEL, pts, 7), simulate_gaussian(MODEL, pts, 7))
        assert not np.array_equal(simulate_gaussian(MODEL, pts, 7), simulate_gaussian(MODEL, pts, 8))

    def test_empirical_covariance(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 0.0]])
        z = np.array([simulate_gaussian(MODEL, pts, s) for s in range(4000)])
        np.testing.assert_allclose(np.cov(z.T, bias=True), gram_matrix(MODEL, pts), atol=0.12)


class TestValidation:
    def test_report(self):
        pts = grid(8)
        data = SpatialDataset(pts, simulate_gaussian(MODEL, pts, 5))
        rep = split_sample_validate(MODEL, data, [0, 9, 30])
        assert rep.n_holdout == 3
        assert rep.mae <= rep.rmse
        assert rep.rmse == pytest.approx(np.sqrt(np.mean(rep.abs_errors**2)))

    @pytest.mark.parametrize("holdout", [[], [100], list(range(64))])
    def test_bad_holdout(self, holdout):
        data = SpatialDataset(grid(8), np.zeros(64))
        with pytest.raises(DomainError):
            split_sample_validate(MODEL, data, holdout)
