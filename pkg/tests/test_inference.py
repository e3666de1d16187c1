import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holecov import catalog
from holecov.errors import DomainError, InvalidModelError
from holecov.field import SpatialDataset, empirical_variogram
from holecov.inference import (
    PairSet,
    ParameterVector,
    composite_log_likelihood,
    default_radius,
    fit,
    wls_variogram_objective,
)
from holecov.kriging import simulate_gaussian
from holecov.models import Matern
from holecov.transforms import T1, GeometricAniso, Scaled
from holecov.anisotropy import AnisotropyMatrix


def grid(n, spacing=1.0):
    g = np.arange(n) * spacing
    return np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


def _iso(sigma2, a):
    return Scaled(GeometricAniso(Matern(0.5), AnisotropyMatrix.identity(2, a)), sigma2)


class TestParameterVector:
    @given(v=st.floats(1e-6, 1e6), lo=st.floats(-10, 0), width=st.floats(0.1, 100))
    @settings(max_examples=80, deadline=None)
    def test_round_trip(self, v, lo, width):
        hi = lo + width
        inside = lo + (hi - lo) * (0.001 + 0.998 * (v % 1.0))
        p = ParameterVector(("a", "b", "c"), (v, inside, 3.0), (0.0, lo, -math.inf), (math.inf, hi, math.inf))
        q = p.from_unconstrained(p.to_unconstrained())
        np.testing.assert_allclose(q.values, p.values, rtol=1e-9, atol=1e-9 * width)

    def test_bounds_respected(self):
        p = ParameterVector(("a",), (0.5,), (0.0,), (1.0,))
        for x in (-1e3, 1e3):
            assert 0.0 <= p.from_unconstrained([x]).values[0] <= 1.0

    @pytest.mark.parametrize("args", [
        (("a",), (2.0,), (0.0,), (1.0,)),
        (("a",), (0.5,), (1.0,), (0.0,)),
        (("a", "b"), (0.5,), (0.0,), (1.0,)),
    ])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            ParameterVector(*args)

    def test_positive(self):
        p = ParameterVector.positive(a=1.0, b=2.0)
        assert p.as_dict() == {"a": 1.0, "b": 2.0}
        assert p.lower == (0.0, 0.0)


class TestCompositeLikelihood:
    def test_hand_computed(self):
        m = _iso(1.0, 1.0)
        d = SpatialDataset([[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0])
        gamma = 1 - math.exp(-1)
        expected = -0.5 * (math.log(4 * math.pi * gamma) + 1 / (2 * gamma))
        assert composite_log_likelihood(m, d, max_pair_distance=2.0) == pytest.approx(expected, rel=1e-14)

    def test_radius_excludes(self):
        d = SpatialDataset([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]], [0.0, 1.0, 2.0])
        assert len(PairSet.build(d, 1.5)) == 1
        assert len(PairSet.build(d, 10)) == 3
        with pytest.raises(DomainError):
            PairSet.build(d, 0.5)

    def test_default_radius(self):
        d = SpatialDataset(grid(4), np.zeros(16))
        assert default_radius(d) == pytest.approx(math.hypot(3, 3) / 3)

    def test_peaks_near_truth(self):
        pts = grid(20)
        truth = _iso(1.0, 0.5)
        vals = []
        for s in (0.25, 1.0, 4.0):
            tot = 0
            for seed in range(5):
                d = SpatialDataset(pts, simulate_gaussian(truth, pts, seed))
                tot += composite_log_likelihood(_iso(s, 0.5), d, max_pair_distance=4)
            vals.append(tot)
        assert vals[1] > vals[0] and vals[1] > vals[2]

    def test_requires_valid(self):
        d = SpatialDataset(grid(3), np.arange(9.0))
        with pytest.raises(InvalidModelError):
            composite_log_likelihood(catalog.scenario_I(Matern(1.5), b1=2.0), d)

    def test_nonpositive_variogram_names_pair(self):
        # T1 with equal parts is identically zero, so gamma = 0 at every lag
        m = T1(Matern(1.5), AnisotropyMatrix.identity(2), AnisotropyMatrix.identity(2), 1.0, 1.0)
        d = SpatialDataset([[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0])
        with pytest.raises(DomainError, match=r"pair \(0, 1\)"):
            composite_log_likelihood(m, d, max_pair_distance=2, override=True)


class TestWls:
    def test_zero_at_exact_values(self):
        m = _iso(1.0, 1.0)
        d = SpatialDataset([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [0.0, 1.0, 3.0])
        v = empirical_variogram(d, (1, 0), lag_width=1.0, max_lag=3.0)
        obj = wls_variogram_objective(m, [v])
        g = 1 - np.exp(-v.lag_centers)
        assert obj == pytest.approx(np.sum(v.pair_counts * (v.semivariances - g) ** 2))

    def test_empty(self):
        from holecov.field import EmpiricalVariogram
        v = EmpiricalVariogram((1.0, 0.0), 0.1, 1.0, [], [], [])
        with pytest.raises(DomainError):
            wls_variogram_objective(_iso(1, 1), [v])


class TestFit:
    def setup_method(self):
        pts = grid(20)
        self.truth = {"s": 1.5, "a": 0.4}
        self.data = SpatialDataset(pts, simulate_gaussian(_iso(1.5, 0.4), pts, 11))

    def template(self, p):
        return _iso(p["s"], p["a"])

    def test_cl_recovers_isotropic(self):
        r = fit("CL", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0), max_pair_distance=5)
        assert r.converged
        assert r.validity.passed
        est = r.estimate.as_dict()
        assert est["s"] == pytest.approx(1.5, rel=0.35)
        assert est["a"] == pytest.approx(0.4, rel=0.35)
        assert r.objective_value >= composite_log_likelihood(_iso(1.5, 0.4), self.data, 5) - 1e-9

    def test_wls(self):
        vs = [empirical_variogram(self.data, dv, lag_width=1.0, max_lag=8) for dv in ((1, 0), (0, 1))]
        r = fit("WLS", self.template, vs, ParameterVector.positive(s=1.0, a=1.0))
        assert r.converged
        assert r.objective_value <= wls_variogram_objective(_iso(1.0, 1.0), vs)

    def test_deterministic(self):
        a = fit("CL", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0), max_pair_distance=3)
        b = fit("CL", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0), max_pair_distance=3)
        assert a.estimate == b.estimate

    def test_budget_exhaustion(self):
        r = fit("CL", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0), budget=10,
                max_pair_distance=3)
        assert not r.converged

    def test_custom_quadratic(self):
        r = fit("custom", lambda p: (p["x"] - 2) ** 2 + (p["y"] + 1) ** 2, None,
                ParameterVector(("x", "y"), (0.0, 0.0), (-math.inf,) * 2, (math.inf,) * 2))
        assert r.converged
        np.testing.assert_allclose(r.estimate.values, [2.0, -1.0], atol=1e-6)

    def test_invalid_region_rejected(self):
        # b1 below the bound is never accepted as the estimate
        t = lambda p: catalog.scenario_I(Matern(1.5), b1=p["b1"])  # noqa: E731
        r = fit("CL", t, self.data, ParameterVector(("b1",), (3.0,), (1.0,), (5.0,)), max_pair_distance=3)
        assert r.estimate.values[0] >= 2.5 * (1 - 1e-9)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            fit("ML", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0))

    def test_to_dict(self):
        r = fit("CL", self.template, self.data, ParameterVector.positive(s=1.0, a=1.0), budget=50,
                max_pair_distance=3)
        d = r.to_dict()
        assert set(d["estimate"]) == {"s", "a"}
        assert d["objective_kind"] == "CL"
