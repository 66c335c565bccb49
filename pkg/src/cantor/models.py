"""
Data models for Cantor systems in the weighted torus
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

from src.errors import ShapeError, ValidationRejected
from src.metric.models import CodePoint, SlowSchedule


def a_seq(m: int) -> Fraction:
    """a_m = 1/(2(m+1)²)"""
    return Fraction(1, 2 * (m + 1) ** 2)


@dataclass(frozen=True)
class Interval:
    """有理数端点の閉区間"""
    lo: Fraction
    hi: Fraction

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def as_float(self) -> Tuple[float, float]:
        return float(self.lo), float(self.hi)


@dataclass(frozen=True)
class BlockTable:
    """
    ブロック n の全座標で共通の区間表
    lengths[p] = len_p, gaps[p] = 2^{-p} a_p b, steps[p] = len_{p+1} + gaps[p]
    """
    n: int
    b: Fraction
    lengths: Tuple[Fraction, ...]
    gaps: Tuple[Fraction, ...]
    steps: Tuple[Fraction, ...]
    step_numerators: Tuple[int, ...]
    denominator: int

    @cached_property
    def steps_float(self) -> np.ndarray:
        return np.array([float(s) for s in self.steps])

    @cached_property
    def lengths_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.lengths])

    @cached_property
    def gaps_float(self) -> np.ndarray:
        return np.array([float(g) for g in self.gaps])


@dataclass(frozen=True, eq=False)
class CantorSystem:
    """ε, G, 深さ p_max で定まる Cantor 系 C_k の族"""
    epsilon: Fraction
    schedule: SlowSchedule
    p_max: int
    tables: Dict[int, BlockTable]

    @property
    def K(self) -> int:
        return self.schedule.K

    def table_of(self, k: int) -> BlockTable:
        if not 0 <= k < self.K:
            raise ShapeError(f"座標 k={k} は範囲外です (K={self.K})")
        return self.tables[int(self.schedule.block_of[k])]

    def b(self, k: int) -> Fraction:
        return self.table_of(k).b

    @cached_property
    def b_float(self) -> np.ndarray:
        """座標ごとの b_k"""
        return np.array([float(self.tables[int(n)].b) for n in self.schedule.block_of])

    @cached_property
    def length_matrix(self) -> np.ndarray:
        return np.stack([self.tables[int(n)].lengths_float for n in self.schedule.block_of])

    @cached_property
    def gap_matrix(self) -> np.ndarray:
        return np.stack([self.tables[int(n)].gaps_float for n in self.schedule.block_of])

    @cached_property
    def step_matrix(self) -> np.ndarray:
        """(K, p_max) の座標ごとのステップ（浮動小数）"""
        return np.stack([self.tables[int(n)].steps_float for n in self.schedule.block_of])

    def descriptor(self) -> Dict:
        return {
            "epsilon": f"{self.epsilon.numerator}/{self.epsilon.denominator}",
            "G_spec": self.schedule.spec,
            "p_max": self.p_max,
        }


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """トーラス上の有限個の原子と重み"""
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.mod(np.asarray(self.points, dtype=float), 1.0)
        pts[pts >= 1.0] = 0.0
        if pts.ndim != 2:
            raise ShapeError(f"原子は (M, K) 配列である必要があります: shape={pts.shape}")
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(w) != len(pts):
            raise ShapeError(f"重みの数 {len(w)} が原子数 {len(pts)} と一致しません")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationRejected("重みは非負の有限値である必要があります")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.full(len(pts), 1.0 / max(len(pts), 1)))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def K(self) -> int:
        return self.points.shape[1]


@dataclass
class CodePairs:
    """検証用のコード対（ビット配列 (M, K, depth)）"""
    left: np.ndarray
    right: np.ndarray

    def __len__(self) -> int:
        return len(self.left)

    def as_code_points(self) -> List[tuple]:
        return [(CodePoint.from_bits(a), CodePoint.from_bits(b)) for a, b in zip(self.left, self.right)]
