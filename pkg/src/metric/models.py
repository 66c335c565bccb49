"""
Data models for finite metric spaces, slow schedules and code spaces
"""
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import DomainError, ShapeError, SpecParseError, ValidationRejected
from config.settings import DEFAULT_SCHEDULE_NMAX

# G spec grammar: const:<g> | poly:<c>,<d> | list:<g0>,<g1>,...
SCHEDULE_RE = re.compile(r"^(const|poly|list):(.+)$")
BIT_RE = re.compile(r"^[01]*$")


def euclidean_block(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """点集合間のユークリッド距離行列（全モジュールで同じ式を使う）"""
    diff = left[:, None, :] - right[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True, eq=False)
class PointCloud:
    """有限距離空間（座標点のユークリッド距離、または明示的な距離行列）"""
    points: np.ndarray
    mode: str = "euclidean"
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ShapeError(f"点の次元が不正です: shape={pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("座標に非有限値が含まれています")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

        if self.mode == "matrix":
            mat = np.asarray(self.matrix, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] != len(pts):
                raise ShapeError(f"距離行列は点数 {len(pts)} の正方行列である必要があります: shape={mat.shape}")
            if not np.all(np.isfinite(mat)) or np.any(mat < 0):
                raise DomainError("距離行列に負値または非有限値が含まれています")
            if not np.array_equal(mat, mat.T):
                i, j = np.argwhere(mat != mat.T)[0]
                raise ValidationRejected(f"距離行列が対称ではありません: ({i}, {j})", witness=(int(i), int(j)))
            if np.any(np.diag(mat) != 0):
                raise ValidationRejected("距離行列の対角成分が0ではありません")
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)
        elif self.mode == "euclidean":
            object.__setattr__(self, "matrix", None)
        else:
            raise SpecParseError(f"未知の距離モード: {self.mode}")

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        return cls(points=np.asarray(points, dtype=float), mode="euclidean")

    @classmethod
    def from_matrix(cls, matrix) -> "PointCloud":
        mat = np.asarray(matrix, dtype=float)
        labels = np.arange(mat.shape[0] if mat.ndim == 2 else 0, dtype=float)
        return cls(points=labels.reshape(-1, 1), mode="matrix", matrix=mat)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def block(self, rows, cols) -> np.ndarray:
        """行・列インデックスで指定した距離の部分行列"""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.mode == "matrix":
            return self.matrix[np.ix_(rows, cols)]
        return euclidean_block(self.points[rows], self.points[cols])

    def row(self, i: int) -> np.ndarray:
        if self.mode == "matrix":
            return self.matrix[i]
        return euclidean_block(self.points[i:i + 1], self.points)[0]

    def pair_distances(self, left, right) -> np.ndarray:
        """インデックス対ごとの距離（ベクトル化）"""
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        if self.mode == "matrix":
            return self.matrix[left, right]
        diff = self.points[left] - self.points[right]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    @cached_property
    def distances(self) -> np.ndarray:
        idx = np.arange(self.size)
        mat = self.block(idx, idx)
        mat.setflags(write=False)
        return mat

    @cached_property
    def diameter(self) -> float:
        if self.size < 2:
            return 0.0
        return float(self.distances.max())

    def subset(self, indices: Sequence[int]) -> "PointCloud":
        idx = np.asarray(indices, dtype=np.int64)
        if self.mode == "matrix":
            return PointCloud.from_matrix(self.matrix[np.ix_(idx, idx)])
        return PointCloud.from_points(self.points[idx])


@dataclass(frozen=True, eq=False)
class SlowSchedule:
    """
    スローシーケンス G とブロック分割 I_n、重み r_k = 2^{-n}
    counts[n] = G(n) (n = 0..n_max)
    """
    spec: str
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(g) for g in self.counts)
        if not counts:
            raise SpecParseError(f"スケジュールが空です: {self.spec}")
        if any(g < 0 for g in counts):
            raise SpecParseError(f"G(n) は非負整数である必要があります: {self.spec}")
        if sum(counts) == 0:
            raise SpecParseError(f"少なくとも一つの G(n) > 0 が必要です: {self.spec}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def parse(cls, spec: str, n_max: Optional[int] = None) -> "SlowSchedule":
        """G仕様文字列を解析（const:<g> | poly:<c>,<d> | list:<g0>,...）"""
        m = SCHEDULE_RE.match(spec.strip())
        if not m:
            raise SpecParseError(f"G仕様を解析できません: '{spec}'")
        family, body = m.group(1), m.group(2)
        tokens = [tok.strip() for tok in body.split(",")]
        try:
            if family == "const":
                if len(tokens) != 1:
                    raise ValueError(body)
                g = int(tokens[0])
                horizon = DEFAULT_SCHEDULE_NMAX if n_max is None else n_max
                counts = [g] * (horizon + 1)
            elif family == "poly":
                if len(tokens) != 2:
                    raise ValueError(body)
                c, d = float(tokens[0]), float(tokens[1])
                if not (c > 0 and d >= 0 and math.isfinite(c) and math.isfinite(d)):
                    raise ValueError(body)
                horizon = DEFAULT_SCHEDULE_NMAX if n_max is None else n_max
                counts = [max(1, math.ceil(c * (n + 1) ** d)) for n in range(horizon + 1)]
            else:
                values = [int(tok) for tok in tokens]
                horizon = len(values) - 1 if n_max is None else n_max
                counts = [values[min(n, len(values) - 1)] for n in range(horizon + 1)]
        except ValueError:
            raise SpecParseError(f"G仕様の数値が不正です: '{spec}'")
        if horizon < 0:
            raise SpecParseError(f"n_max が負です: {horizon}")
        return cls(spec=spec.strip(), counts=tuple(counts))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "SlowSchedule":
        counts = [int(g) for g in counts]
        return cls(spec="list:" + ",".join(str(g) for g in counts), counts=tuple(counts))

    @property
    def n_max(self) -> int:
        return len(self.counts) - 1

    @property
    def K(self) -> int:
        return sum(self.counts)

    def G(self, n: int) -> int:
        return self.counts[n]

    @cached_property
    def offsets(self) -> Tuple[int, ...]:
        """ブロック I_n の開始座標"""
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.counts)]))

    def block(self, n: int) -> range:
        return range(self.offsets[n], self.offsets[n + 1])

    @cached_property
    def block_of(self) -> np.ndarray:
        """座標 k が属するブロック番号 n"""
        return np.repeat(np.arange(len(self.counts)), self.counts)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.ldexp(1.0, -self.block_of)

    def weight_exact(self, k: int) -> Fraction:
        return Fraction(1, 2 ** int(self.block_of[k]))

    def running_max(self) -> np.ndarray:
        """G̃(n) = max_{i≤n} G(i)"""
        return np.maximum.accumulate(np.asarray(self.counts))


@dataclass(frozen=True, eq=False)
class TorusPoint:
    """切断トーラスの点（構築時に mod 1 で [0,1) に正規化）"""
    coords: np.ndarray

    def __post_init__(self):
        c = np.mod(np.asarray(self.coords, dtype=float).ravel(), 1.0)
        c[c >= 1.0] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def K(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class CodePoint:
    """K本の同じ長さの2進文字列"""
    codes: Tuple[str, ...]

    def __post_init__(self):
        codes = tuple(self.codes)
        if not codes:
            raise ShapeError("CodePoint には少なくとも1座標が必要です")
        depth = len(codes[0])
        for code in codes:
            if not BIT_RE.match(code):
                raise DomainError(f"2進文字列ではありません: '{code}'")
            if len(code) != depth:
                raise ShapeError(f"コードの深さが揃っていません: {len(code)} != {depth}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_bits(cls, bits) -> "CodePoint":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(tuple("".join("1" if b else "0" for b in row) for row in bits))

    @property
    def K(self) -> int:
        return len(self.codes)

    @property
    def depth(self) -> int:
        return len(self.codes[0])

    @cached_property
    def bits(self) -> np.ndarray:
        raw = np.frombuffer("".join(self.codes).encode("ascii"), dtype=np.uint8) - ord("0")
        return raw.reshape(self.K, self.depth)


@dataclass
class TreeNode:
    """超距離木の内部ノード（子は TreeNode または点インデックス）"""
    diameter: float
    children: List[Union["TreeNode", int]] = field(default_factory=list)

    def leaves(self) -> List[int]:
        out, stack = [], [self]
        while stack:
            node = stack.pop()
            if isinstance(node, TreeNode):
                stack.extend(reversed(node.children))
            else:
                out.append(node)
        return out


@dataclass
class UltrametricTree:
    """超距離空間の球の木"""
    root: Union[TreeNode, int]
    size: int

    def nodes(self) -> List[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, TreeNode):
                out.append(node)
                stack.extend(node.children)
        return out
