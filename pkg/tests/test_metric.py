"""
Tests for distances, metric validation, ultrametric trees and slow schedules
"""
from fractions import Fraction

import numpy as np
import pytest

from src.errors import DomainError, ShapeError, SpecParseError, ValidationRejected
from src.metric.core import (
    circle_dist, code_dist, code_dist_many, torus_dist, torus_shift, tree_leaf_distances, ultrametric_to_tree,
    validate_metric
)
from src.metric.models import CodePoint, PointCloud, SlowSchedule, TorusPoint, TreeNode
from src.utils import parallel_map


class TestCircleDist:
    def test_examples(self):
        assert circle_dist(0.1, 0.9) == pytest.approx(0.2)
        assert circle_dist(0.3, 0.3) == 0.0
        assert circle_dist(0.25, 0.75) == 0.5

    def test_outside_unit_interval(self):
        with pytest.raises(DomainError):
            circle_dist(1.0, 0.2)
        with pytest.raises(DomainError):
            circle_dist(-0.1, 0.2)


class TestTorusDist:
    def test_identity_and_single_coordinate(self):
        sched = SlowSchedule.parse("list:1,1,1")
        a = TorusPoint(np.array([0.1, 0.2, 0.25]))
        assert torus_dist(a, a, sched) == 0.0
        b = TorusPoint(np.array([0.1, 0.2, 0.75]))
        assert torus_dist(a, b, sched) == 0.125

    def test_matches_brute_force(self):
        sched = SlowSchedule.parse("poly:1,1", n_max=4)
        rng = np.random.default_rng(3)
        a, b = TorusPoint(rng.random(sched.K)), TorusPoint(rng.random(sched.K))
        expected = max(
            2.0 ** -int(sched.block_of[k]) * circle_dist(a.coords[k], b.coords[k]) for k in range(sched.K)
        )
        assert torus_dist(a, b, sched) == pytest.approx(expected, rel=1e-15)

    def test_shape_mismatch(self):
        sched = SlowSchedule.parse("list:1,1")
        with pytest.raises(ShapeError):
            torus_dist(TorusPoint(np.zeros(3)), TorusPoint(np.zeros(3)), sched)

    def test_shift_wraps(self):
        moved = torus_shift(TorusPoint(np.array([0.75, 0.5])), TorusPoint(np.array([0.5, 0.5])))
        assert moved.coords.tolist() == [0.25, 0.0]

    def test_shift_invariance_on_dyadic_coordinates(self):
        sched = SlowSchedule.parse("poly:1,1", n_max=4)
        rng = np.random.default_rng(17)
        for _ in range(1000):
            a, b, c = (TorusPoint(np.ldexp(rng.integers(0, 2 ** 20, size=sched.K), -20)) for _ in range(3))
            assert torus_dist(torus_shift(a, c), torus_shift(b, c), sched) == torus_dist(a, b, sched)

    def test_shift_invariance_within_rounding(self):
        sched = SlowSchedule.parse("poly:1,1", n_max=4)
        rng = np.random.default_rng(18)
        for _ in range(1000):
            a, b, c = (TorusPoint(rng.random(sched.K)) for _ in range(3))
            moved = torus_dist(torus_shift(a, c), torus_shift(b, c), sched)
            assert moved == pytest.approx(torus_dist(a, b, sched), abs=4 * np.finfo(float).eps)


class TestCodeDist:
    def test_examples(self):
        sched = SlowSchedule.parse("list:1")
        a = CodePoint(("0100",))
        assert code_dist(a, a, sched) == 0.0
        assert code_dist(a, CodePoint(("0110",)), sched) == 0.25

    def test_strong_triangle(self):
        sched = SlowSchedule.parse("list:1,2")
        rng = np.random.default_rng(7)
        for _ in range(50):
            x, y, z = (CodePoint.from_bits(rng.integers(0, 2, size=(3, 8))) for _ in range(3))
            assert code_dist(x, z, sched) <= max(code_dist(x, y, sched), code_dist(y, z, sched))

    def test_depth_zero_codes_are_equal(self):
        sched = SlowSchedule.parse("list:1")
        assert code_dist(CodePoint(("",)), CodePoint(("",)), sched) == 0.0

    def test_rejects_non_binary(self):
        with pytest.raises(DomainError):
            CodePoint(("012",))


class TestValidateMetric:
    def test_triangle_ok_ultra_fails(self):
        cloud = PointCloud.from_matrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
        assert validate_metric(cloud, "triangle").ok
        report = validate_metric(cloud, "ultra")
        assert not report.ok
        assert report.slack == 1.0

    def test_single_point(self):
        cloud = PointCloud.from_points([[0.5, 0.5]])
        assert validate_metric(cloud, "triangle").ok
        assert validate_metric(cloud, "ultra").ok

    def test_triangle_failure_witness(self):
        cloud = PointCloud.from_matrix([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
        report = validate_metric(cloud, "triangle")
        assert not report.ok
        assert report.worst_triple == (0, 1, 2)
        assert report.slack == 1.0

    def test_sampled_for_large_clouds(self):
        rng = np.random.default_rng(1)
        report = validate_metric(PointCloud.from_points(rng.random((400, 2))), seed=5)
        assert report.sampled
        assert report.ok

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(ValidationRejected):
            PointCloud.from_matrix([[0, 1], [2, 0]])


class TestUltrametricTree:
    def test_single_linkage_example(self):
        cloud = PointCloud.from_matrix([[0, 1, 2], [1, 0, 2], [2, 2, 0]])
        tree = ultrametric_to_tree(cloud)
        assert tree.root.diameter == 2
        first, second = tree.root.children
        assert isinstance(first, TreeNode)
        assert first.diameter == 1
        assert first.children == [0, 1]
        assert second == 2

    def test_equal_distances(self):
        D = np.ones((4, 4)) - np.eye(4)
        tree = ultrametric_to_tree(PointCloud.from_matrix(D))
        assert tree.root.diameter == 1
        assert tree.root.children == [0, 1, 2, 3]

    def test_round_trip(self):
        D = np.array([
            [0, 1, 4, 4, 8],
            [1, 0, 4, 4, 8],
            [4, 4, 0, 2, 8],
            [4, 4, 2, 0, 8],
            [8, 8, 8, 8, 0],
        ], dtype=float)
        tree = ultrametric_to_tree(PointCloud.from_matrix(D))
        rebuilt = tree_leaf_distances(tree)
        assert np.array_equal(rebuilt.matrix, D)
        again = ultrametric_to_tree(rebuilt)
        assert [n.diameter for n in again.nodes()] == [n.diameter for n in tree.nodes()]
        assert again.root.leaves() == tree.root.leaves()

    def test_code_space_round_trip(self):
        sched = SlowSchedule.parse("list:1")
        rng = np.random.default_rng(21)
        values = rng.choice(256, size=64, replace=False)
        bits = ((values[:, None] >> np.arange(7, -1, -1)) & 1).astype(np.uint8)[:, None, :]
        D = code_dist_many(bits[:, None], bits[None, :], sched)
        tree = ultrametric_to_tree(PointCloud.from_matrix(D))
        assert sorted(tree.root.leaves()) == list(range(64))
        assert tree.root.diameter == D.max()
        for node in tree.nodes():
            for child in node.children:
                if isinstance(child, TreeNode):
                    assert child.diameter < node.diameter
        assert np.array_equal(tree_leaf_distances(tree).matrix, D)

    def test_duplicate_points_rejected(self):
        cloud = PointCloud.from_matrix([[0, 0, 1], [0, 0, 1], [1, 1, 0]])
        with pytest.raises(ValidationRejected) as err:
            ultrametric_to_tree(cloud)
        assert err.value.witness == (0, 1)

    def test_rejects_non_ultrametric(self):
        cloud = PointCloud.from_matrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
        with pytest.raises(ValidationRejected) as err:
            ultrametric_to_tree(cloud)
        assert err.value.witness is not None


class TestSlowSchedule:
    def test_families(self):
        assert SlowSchedule.parse("const:3", n_max=2).counts == (3, 3, 3)
        assert SlowSchedule.parse("poly:1,1").counts == tuple(range(1, 10))
        assert SlowSchedule.parse("poly:1,1").K == 45
        assert SlowSchedule.parse("list:2,1", n_max=3).counts == (2, 1, 1, 1)

    def test_blocks_and_weights(self):
        sched = SlowSchedule.parse("list:1,2,1")
        assert list(sched.block(1)) == [1, 2]
        assert sched.block_of.tolist() == [0, 1, 1, 2]
        assert sched.weights.tolist() == [1.0, 0.5, 0.5, 0.25]
        assert sched.weight_exact(3) == Fraction(1, 4)

    @pytest.mark.parametrize("spec", ["bogus:1", "poly:1", "list:a,b", "const:-1", "list:0,0"])
    def test_malformed(self, spec):
        with pytest.raises(SpecParseError):
            SlowSchedule.parse(spec)


class TestParallelMap:
    def test_preserves_order(self):
        assert parallel_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]

    def test_reraises_first_failure(self):
        def fail(x):
            if x in (3, 11):
                raise ValueError(f"bad {x}")
            return x

        with pytest.raises(ValueError, match="bad 3"):
            parallel_map(fail, range(16), workers=4)
