"""
Tests for modulus fitting, McShane extension, space-filling curves and the cube pipeline
"""
import numpy as np
import pytest

from src.cantor.system import build_system, encode
from src.embedding.assouad import normalize_diameter
from src.errors import DepthError, DomainError, ShapeError, ValidationRejected
from src.gauges.models import Gauge
from src.holder.curves import (
    grid_cells_hit, hilbert_curve, hilbert_lattice, hilbert_modulus, interleave_map, interleave_modulus_report,
    interleave_surjectivity
)
from src.holder.extension import SampledMap, clip_to_cube, mcshane_extend
from src.holder.modulus import modulus_fit
from src.holder.pipeline import CubeMappingPipeline, PipelineParams, pipeline_map_onto_cube
from src.metric.models import CodePoint, PointCloud, SlowSchedule
from src.selfsimilar.ifs import chaos_game


class TestModulusFit:
    def test_power_law(self):
        dx = np.logspace(-6, 0, 200)
        fit = modulus_fit(np.column_stack([dx, 2 * dx ** 0.5]))
        assert fit.beta_hat == pytest.approx(0.5, abs=1e-9)
        assert fit.constant == pytest.approx(2.0, rel=1e-9)
        assert fit.max_residual <= 1e-12

    def test_envelope_dominates_all_pairs(self):
        rng = np.random.default_rng(4)
        dx = rng.uniform(1e-4, 1, 500)
        dy = dx ** 0.8 * rng.uniform(0.1, 1, 500)
        fit = modulus_fit(np.column_stack([dx, dy]))
        assert np.all(np.log(dy) <= np.log(fit.constant) + fit.beta_hat * np.log(dx) + 1e-12)

    def test_too_few_pairs(self):
        with pytest.raises(ValidationRejected):
            modulus_fit([[0.1, 0.1]] * 5)

    def test_not_a_map(self):
        pairs = [[0.1 * k, 0.1 * k] for k in range(1, 12)] + [[0.0, 0.5]]
        with pytest.raises(ValidationRejected):
            modulus_fit(pairs)


class TestMcShane:
    def setup_method(self):
        self.grid = np.linspace(0.0, 1.0, 1000)
        self.cloud = PointCloud.from_points(self.grid)
        self.anchors = SampledMap([0, 999], [0.0, 1.0])
        self.h = Gauge.power(0.5)

    def test_square_root_extension(self):
        values = mcshane_extend(self.anchors, self.h, self.cloud, np.arange(1000))[:, 0]
        assert np.allclose(values, np.sqrt(self.grid), rtol=0, atol=1e-12)
        assert values[0] == 0.0
        assert values[999] == 1.0

    def test_modulus_on_all_pairs(self):
        values = mcshane_extend(self.anchors, self.h, self.cloud, np.arange(1000))[:, 0]
        i, j = np.triu_indices(1000, k=1)
        assert np.all(np.abs(values[i] - values[j]) <= self.h(self.cloud.pair_distances(i, j)))

    def test_anchor_violation(self):
        anchors = SampledMap([0, 999], [0.0, 5.0])
        with pytest.raises(ValidationRejected) as err:
            mcshane_extend(anchors, self.h, self.cloud, np.arange(10))
        assert err.value.witness == (999, 0, 0)

    def test_duplicate_anchor(self):
        with pytest.raises(ValidationRejected):
            SampledMap([3, 3], [0.0, 1.0])

    def test_clip(self):
        assert clip_to_cube(np.array([[-0.5, 0.3, 1.7]])).tolist() == [[0.0, 0.3, 1.0]]


class TestHilbert:
    @pytest.mark.parametrize("m,p", [(2, 4), (3, 2), (2, 1)])
    def test_lattice_steps_are_unit(self, m, p):
        lattice = hilbert_lattice(m, p)
        assert np.all(np.abs(np.diff(lattice, axis=0)).sum(axis=1) == 1)
        assert len(np.unique(lattice, axis=0)) == 2 ** (m * p)

    def test_first_order_square(self):
        points = hilbert_curve(2, 1, np.array([0.0, 1 / 3, 2 / 3, 1.0]))
        assert points.tolist() == [[0.0, 0.0], [0.0, 0.5], [0.5, 0.5], [0.5, 0.0]]

    def test_hits_every_cell_at_order_six(self):
        lattice = hilbert_lattice(2, 6)
        assert grid_cells_hit(np.ldexp(lattice.astype(float), -6), 6) == 4 ** 6

    def test_half_exponent(self):
        fit = hilbert_modulus(2, 6, count=10_000, seed=0)
        assert 0.45 <= fit.beta_hat <= 0.55

    def test_parameter_checks(self):
        with pytest.raises(DomainError):
            hilbert_curve(2, 3, 1.5)
        with pytest.raises(DepthError):
            hilbert_lattice(2, 0)
        with pytest.raises(DepthError):
            hilbert_lattice(4, 16)


class TestInterleave:
    def test_digit_dealing(self):
        assert interleave_map(np.array([0.6875]), 2, 4).tolist() == [0.75, 0.25]

    def test_surjective_onto_square(self):
        report = interleave_surjectivity(1, 2, 8)
        assert report["resolution"] == 4
        assert report["cells_total"] == 256
        assert report["surjective"]

    def test_modulus_within_cells(self):
        report = interleave_modulus_report(1, 2, 8, count=2000, seed=1)
        assert report["ok"]
        assert report["violations"] == 0

    def test_dimension_checks(self):
        with pytest.raises(DomainError):
            interleave_map(np.array([[0.1, 0.2, 0.3]]), 2, 4)
        with pytest.raises(DepthError):
            interleave_map(np.array([0.5]), 2, 60)
        with pytest.raises(DepthError):
            interleave_surjectivity(2, 2, 13)


class TestPipeline:
    def test_singleton_is_constant(self):
        report = pipeline_map_onto_cube(PointCloud.from_points([[0.4, 0.4]]), 2)
        assert report.degenerate
        assert report.image.shape == (1, 2)

    def test_order_codes_groups_equal_keys(self):
        codes = np.array([[[1, 1]], [[0, 0]], [[0, 0]]], dtype=np.uint8)
        t = CubeMappingPipeline().order_codes(codes, SlowSchedule.parse("list:1"), np.full(3, 1 / 3))
        assert t == pytest.approx([5 / 6, 1 / 3, 1 / 3])

    def test_sierpinski_sample_onto_interval(self, sierpinski_ifs):
        cloud = normalize_diameter(PointCloud.from_points(chaos_game(sierpinski_ifs, 500, seed=0)))
        report = pipeline_map_onto_cube(cloud, 1, params=PipelineParams(seed=0))
        assert report.captured_fraction >= 0.5
        assert report.grid_resolution >= 6
        assert report.substitute_construction
        assert report.image.shape == (500, 1)
        assert np.all((report.image >= 0) & (report.image <= 1))
        assert "image" not in report.to_dict()

    def test_square_into_plane(self, square_cloud):
        cloud = square_cloud.subset(range(80))
        report = pipeline_map_onto_cube(cloud, 2, params=PipelineParams(seed=1, n_max=4))
        assert report.image.shape == (80, 2)
        assert np.all((report.image >= 0) & (report.image <= 1))
        assert set(report.stage_moduli) == {"embedding", "final", "decode", "order", "curve"}

    def test_cantor_system_sample_is_captured_entirely(self):
        system = build_system("1/10", SlowSchedule.parse("poly:1,1", n_max=2), 12)
        rng = np.random.default_rng(3)
        points = np.array([
            encode(system, CodePoint.from_bits(rng.integers(0, 2, size=(system.K, 12)))).coords for _ in range(60)
        ])
        report = CubeMappingPipeline(PipelineParams(seed=0)).run_system(system, points, 1)
        assert report.captured_fraction == pytest.approx(1.0)
        assert report.image.shape == (60, 1)
        assert np.all((report.image >= 0) & (report.image <= 1))
        assert report.substitute_construction

    def test_system_sample_shape_checked(self):
        system = build_system("1/10", SlowSchedule.parse("list:1,1"), 8)
        with pytest.raises(ShapeError):
            CubeMappingPipeline().run_system(system, np.zeros((5, 3)), 1)

    def test_rejects_large_diameter(self):
        with pytest.raises(ValidationRejected):
            pipeline_map_onto_cube(PointCloud.from_points([0.0, 3.0]), 1)
