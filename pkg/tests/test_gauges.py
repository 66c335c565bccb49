"""
Tests for gauges, order estimation, the hat transform and remetrization
"""
import math

import numpy as np
import pytest

from src.errors import DomainError, SpecParseError, ValidationRejected
from src.gauges.models import Gauge, evaluate, parse_gauge
from src.gauges.transforms import check_subadditive, hat_transform, ord_estimate, remetrize, snowflake
from src.metric.core import validate_metric
from src.metric.models import PointCloud


class TestGauge:
    def test_power(self):
        assert evaluate(Gauge.power(2), 0.5) == 0.25
        assert evaluate(Gauge.power(0.5), 0.0) == 0.0
        assert evaluate(Gauge.power(1, scale=3), 0.5) == 1.5

    def test_logpow_is_continuous_and_increasing(self):
        h = Gauge.logpow(1, 1)
        assert 0.95 <= evaluate(h, 1.0) <= 1.0
        below = evaluate(h, math.exp(-1) * (1 - 1e-12))
        assert below == pytest.approx(math.exp(-1), rel=1e-9)
        r = np.logspace(-12, 0, 200)
        assert np.all(np.diff(h(r)) >= 0)

    def test_table_interpolates_in_log_log(self, tmp_path):
        path = tmp_path / "sqrt.csv"
        path.write_text("r,h\n0.01,0.1\n1,1\n", encoding="utf-8")
        h = parse_gauge(f"table:{path}")
        assert evaluate(h, 0.25) == pytest.approx(0.5, abs=1e-9)
        assert h.tail_beta == pytest.approx(0.5)

    def test_array_evaluation_keeps_shape(self):
        values = evaluate(Gauge.power(2), np.array([[1.0, 2.0], [3.0, 0.0]]))
        assert values.shape == (2, 2)
        assert values.tolist() == [[1.0, 4.0], [9.0, 0.0]]

    def test_rejects_negative_argument(self):
        with pytest.raises(DomainError):
            evaluate(Gauge.power(1), -0.1)

    @pytest.mark.parametrize("spec", ["sqrt:2", "pow:", "pow:1,2", "logpow:1", "pow:abc"])
    def test_malformed_spec(self, spec):
        with pytest.raises(SpecParseError):
            parse_gauge(spec)

    def test_non_positive_exponent(self):
        with pytest.raises(DomainError):
            parse_gauge("pow:-1")


class TestOrdEstimate:
    def test_power_is_exact(self):
        est = ord_estimate(Gauge.power(0.7), 20)
        assert est.estimate == pytest.approx(0.7, abs=1e-12)
        assert est.claimed_ord == 0.7

    def test_logpow_approaches_beta(self):
        est = ord_estimate(Gauge.logpow(1, 1), 40)
        assert 0.95 <= est.estimate <= 1.0
        assert np.all(np.diff(est.running_min) >= 0)

    def test_estimate_is_finest_ratio(self):
        est = ord_estimate(Gauge.logpow(1, 1), 40)
        assert est.estimate == est.ratios[-1]
        assert est.running_min[-1] == est.estimate
        assert est.running_min[0] == est.ratios.min()
        assert est.tail_min < est.estimate

    def test_too_few_decades(self):
        with pytest.raises(DomainError):
            ord_estimate(Gauge.power(1), 1)


class TestHatTransform:
    def test_square_gauge_becomes_linear(self):
        result = hat_transform(Gauge.power(2), 1.0, decades=40, seed=0)
        assert result.report.bounded
        assert all(result.report.checks.values())
        assert np.allclose(result.values, 2 * result.grid, rtol=1e-12, atol=0)
        assert result.gauge.kind == "pow"

    def test_square_root_gauge_with_linear_beta(self):
        result = hat_transform(Gauge.power(0.5), 1.0, decades=40, strict=False, seed=0)
        report = result.report
        assert not report.precondition_ok
        assert not report.bounded
        for key in ("mono", "dominates", "subadd", "doubling"):
            assert report.checks[key], key
        expected = np.sqrt(result.grid) + result.grid
        assert np.allclose(result.values, expected, rtol=1e-12, atol=0)

    def test_fractional_power(self):
        result = hat_transform(Gauge.power(0.7), 0.7, decades=40, seed=0)
        assert all(result.report.checks.values())
        assert abs(result.report.ord_hat - 0.7) <= 0.05

    def test_strict_precondition(self):
        with pytest.raises(ValidationRejected):
            hat_transform(Gauge.power(0.5), 1.0, decades=20)

    def test_dominates_input_plus_power(self):
        h = Gauge.logpow(1, 1)
        result = hat_transform(h, 0.9, decades=20, seed=3)
        assert np.all(result.values >= (h(result.grid) + result.grid ** 0.9) * (1 - 1e-12))


class TestRemetrize:
    def test_snowflake(self):
        cloud = PointCloud.from_points([0.0, 1.0, 2.0])
        flake = snowflake(cloud, 0.5)
        assert flake.matrix[0, 2] == pytest.approx(math.sqrt(2))
        assert flake.matrix[0, 1] == 1.0

    def test_snowflake_range(self):
        with pytest.raises(DomainError):
            snowflake(PointCloud.from_points([0.0, 1.0]), 1.5)

    def test_ultrametric_stays_ultrametric(self):
        D = np.array([
            [0, 1, 4, 4, 8],
            [1, 0, 4, 4, 8],
            [4, 4, 0, 2, 8],
            [4, 4, 2, 0, 8],
            [8, 8, 8, 8, 0],
        ], dtype=float) / 8
        out = remetrize(PointCloud.from_matrix(D), Gauge.power(0.5))
        assert validate_metric(out, "ultra").ok
        assert out.matrix == pytest.approx(np.sqrt(D))

    def test_superadditive_gauge_rejected(self):
        with pytest.raises(ValidationRejected):
            remetrize(PointCloud.from_points([0.0, 1.0, 2.0]), Gauge.power(2))

    def test_check_subadditive(self):
        assert check_subadditive(Gauge.power(0.5), np.array([0.1, 0.2]))[0]
        ok, witness = check_subadditive(Gauge.power(2), np.array([1.0, 2.0]), seed=0)
        assert not ok
        assert witness is not None
