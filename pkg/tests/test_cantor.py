"""
Tests for Cantor system construction, coding, measure accounting and shift fitting
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest

from src.cantor.models import CodePairs, DiscreteMeasure
from src.cantor.shift import apply_shift, level_intervals, member_mask, shift_fit
from src.cantor.system import (
    build_system, decode, encode, encode_exact, encode_many, haar_measure, interval, measure_account,
    parse_epsilon, random_code_pairs, verify_modulus
)
from src.errors import DepthError, DomainError, SpecParseError
from src.metric.core import code_dist, torus_dist
from src.metric.models import CodePoint, SlowSchedule


class TestConstruction:
    def test_half_system_intervals(self, half_system):
        assert half_system.b(0) == Fraction(1, 8)
        assert interval(half_system, 0, "").hi == Fraction(7, 8)
        left, right = interval(half_system, 0, "0"), interval(half_system, 0, "1")
        assert (left.lo, left.hi) == (0, Fraction(13, 32))
        assert (right.lo, right.hi) == (Fraction(15, 32), Fraction(7, 8))
        assert right.lo - left.hi == Fraction(1, 16)
        assert left.as_float() == (0.0, 13 / 32)

    def test_children_nested_in_parent(self, half_system):
        parent = interval(half_system, 0, "10")
        for child in ("100", "101"):
            iv = interval(half_system, 0, child)
            assert parent.lo <= iv.lo < iv.hi <= parent.hi

    def test_encode_left_endpoint(self, half_system):
        assert encode_exact(half_system, CodePoint(("1",))) == [Fraction(15, 32)]
        assert encode(half_system, CodePoint(("1",))).coords.tolist() == [15 / 32]

    def test_depth_limits(self, half_system):
        with pytest.raises(DepthError):
            interval(half_system, 0, "0" * 11)
        with pytest.raises(DomainError):
            interval(half_system, 0, "2")

    def test_epsilon_parsing(self):
        assert parse_epsilon("1/10") == Fraction(1, 10)
        assert parse_epsilon("0.25") == Fraction(1, 4)
        with pytest.raises(SpecParseError):
            parse_epsilon(0.1)
        with pytest.raises(SpecParseError):
            parse_epsilon("abc")
        with pytest.raises(DomainError):
            parse_epsilon("3/2")

    def test_encode_is_injective(self):
        system = build_system("1/10", SlowSchedule.parse("list:2"), 6)
        words = ["".join(w) for w in itertools.product("01", repeat=4)]
        codes = [CodePoint((a, b)) for a in words for b in words]
        exact = {tuple(encode_exact(system, code)) for code in codes}
        rounded = {tuple(encode(system, code).coords.tolist()) for code in codes}
        assert len(exact) == len(rounded) == 256

    def test_decode_inverts_encode(self, half_system):
        rng = np.random.default_rng(11)
        bits = rng.integers(0, 2, size=(50, 1, 10), dtype=np.uint8)
        assert np.array_equal(decode(half_system, encode_many(half_system, bits), 10), bits)


class TestMeasureAccount:
    def test_exact_accounting_at_depth_twenty(self):
        system = build_system("1/10", SlowSchedule.parse("poly:1,1"), 20)
        report = measure_account(system)
        assert report.omitted_exact_ok
        assert report.gap_ok
        assert report.tiling_ok
        assert report.product_ok
        assert report.sum_bound_ok
        assert report.product >= report.product_lower - 1e-10
        assert report.product_lower > 1 - 0.1
        assert report.delta_trunc > 0
        assert len(report.per_block) == system.schedule.n_max + 1

    def test_half_system_blocks(self, half_system):
        report = measure_account(half_system)
        assert report.sum_b == Fraction(1, 8)
        assert report.per_block[0]["b"] == "1/8"


class TestModulus:
    def test_single_split_pair(self, half_system):
        pairs = CodePairs(np.zeros((1, 1, 1), dtype=np.uint8), np.ones((1, 1, 1), dtype=np.uint8))
        report = verify_modulus(half_system, pairs)
        assert report.ok
        assert report.pairs == 1
        assert report.ratio_checked == 0

    def test_identical_codes_are_skipped(self, half_system):
        bits = np.ones((3, 1, 4), dtype=np.uint8)
        report = verify_modulus(half_system, CodePairs(bits, bits.copy()))
        assert report.pairs == 0
        assert report.skipped == 3

    def test_random_pairs_at_depth_twenty(self):
        system = build_system("1/10", SlowSchedule.parse("poly:1,1"), 20)
        pairs = random_code_pairs(system, 10_000, 20, seed=42)
        report = verify_modulus(system, pairs, workers=4)
        assert report.violations == {"a": 0, "b": 0, "c": 0}
        assert report.ratio_checked > 0
        assert report.bound_c_margin >= 0

    def test_half_system_acceptance_run(self, half_system):
        pairs = random_code_pairs(half_system, 1000, 10, seed=0)
        assert verify_modulus(half_system, pairs).ok
        sched = half_system.schedule
        for a, b in pairs.as_code_points()[:20]:
            assert torus_dist(encode(half_system, a), encode(half_system, b), sched) <= code_dist(a, b, sched)


class TestShift:
    def test_measure_inside_system_needs_no_shift(self, half_system):
        rng = np.random.default_rng(5)
        atoms = [encode(half_system, CodePoint.from_bits(rng.integers(0, 2, size=(1, 10)))).coords for _ in range(40)]
        result = shift_fit(half_system, DiscreteMeasure.uniform(np.array(atoms)), 10)
        assert result.shift == [Fraction(0)]
        assert result.captured == pytest.approx(result.total)
        assert result.captured_mask.all()

    def test_haar_capture_floor(self):
        system = build_system("1/10", SlowSchedule.parse("poly:1,1", n_max=3), 12)
        mu = haar_measure(system.K, 1000, seed=2024)
        result = shift_fit(system, mu, 12, workers=2)
        slack = measure_account(system).delta_trunc
        assert result.captured >= (1 - 0.1 - slack) * result.total
        assert all(s.denominator <= 2 ** 12 for s in result.shift)

    def test_single_coordinate_matches_exhaustive_search(self, half_system):
        mu = haar_measure(1, 300, seed=11)
        result = shift_fit(half_system, mu, 6)
        lo, hi = level_intervals(half_system, 0, 6)
        best = max(
            float(mu.weights[member_mask(np.mod(mu.points[:, 0] + j / 64, 1.0), lo, hi)].sum())
            for j in range(64)
        )
        assert result.captured == pytest.approx(best)

    def test_apply_shift_wraps(self, half_system):
        mu = DiscreteMeasure.uniform(np.array([[0.9]]))
        result = shift_fit(half_system, mu, 4)
        moved = apply_shift(mu.points, result)
        assert np.all((moved >= 0) & (moved < 1))

    def test_haar_measure(self):
        mu = haar_measure(3, 10, seed=1)
        assert mu.points.shape == (10, 3)
        assert mu.total == pytest.approx(1.0)
