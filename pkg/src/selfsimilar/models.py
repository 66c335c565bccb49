"""
Similarity maps, iterated function systems and attractor samples
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DomainError, ShapeError, ValidationRejected
from src.metric.models import PointCloud
from config.settings import SIMILARITY_TOLERANCE


@dataclass(frozen=True, eq=False)
class Similarity:
    """
    相似変換 f(x) = c·Ox + t
    perm が与えられた場合は O は符号付き軸置換（perm[i] = ±(j+1) で出力座標 i が ±x_j）
    """
    ratio: float
    orth: np.ndarray
    translate: np.ndarray
    perm: Optional[Tuple[int, ...]] = None
    ratio_exact: Optional[Fraction] = None
    translate_exact: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise DomainError(f"縮小率は (0,1) の範囲である必要があります: {self.ratio}")
        O = np.atleast_2d(np.asarray(self.orth, dtype=float))
        t = np.asarray(self.translate, dtype=float).ravel()
        d = len(t)
        if O.shape != (d, d):
            raise ShapeError(f"直交行列の形状 {O.shape} が平行移動の次元 {d} と一致しません")
        if not np.allclose(O.T @ O, np.eye(d), atol=SIMILARITY_TOLERANCE):
            raise ValidationRejected("直交部分の列が正規直交ではありません")
        object.__setattr__(self, "orth", O)
        object.__setattr__(self, "translate", t)

    @classmethod
    def from_perm(cls, ratio, perm: Sequence[int], translate: Sequence) -> "Similarity":
        """符号付き軸置換による相似変換（ratio, translate は Fraction 可）"""
        d = len(perm)
        if len(translate) != d:
            raise ShapeError(f"置換の長さ {d} と平行移動の次元 {len(translate)} が一致しません")
        if sorted(abs(int(v)) for v in perm) != list(range(1, d + 1)):
            raise ValidationRejected(f"perm は ±1..±{d} の置換である必要があります: {list(perm)}")
        O = np.zeros((d, d))
        for i, v in enumerate(perm):
            O[i, abs(int(v)) - 1] = 1.0 if v > 0 else -1.0
        ratio_exact = Fraction(ratio) if isinstance(ratio, (Fraction, int)) else None
        exact_t = tuple(Fraction(v) for v in translate) if all(isinstance(v, (Fraction, int)) for v in translate) else None
        return cls(
            ratio=float(ratio),
            orth=O,
            translate=np.array([float(v) for v in translate]),
            perm=tuple(int(v) for v in perm),
            ratio_exact=ratio_exact,
            translate_exact=exact_t,
        )

    @property
    def dim(self) -> int:
        return len(self.translate)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.ratio * pts @ self.orth.T + self.translate[None, :]


@dataclass(frozen=True)
class Box:
    """軸平行な箱 [lo, hi]"""
    lo: Tuple
    hi: Tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ShapeError("箱の lo と hi の次元が一致しません")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise DomainError(f"箱は lo < hi である必要があります: {self.lo}, {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)


@dataclass(frozen=True, eq=False)
class IFS:
    """反復関数系（2個以上の相似変換）"""
    maps: Tuple[Similarity, ...]
    open_set: Optional[Box] = None

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise ValidationRejected(f"IFS には2個以上の写像が必要です: {len(maps)}")
        dims = {f.dim for f in maps}
        if len(dims) != 1:
            raise ShapeError(f"写像の次元が揃っていません: {sorted(dims)}")
        if self.open_set is not None and self.open_set.dim != maps[0].dim:
            raise ShapeError("開集合の次元が写像の次元と一致しません")
        object.__setattr__(self, "maps", maps)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def ratios(self) -> np.ndarray:
        return np.array([f.ratio for f in self.maps])

    @property
    def axis_permutation(self) -> bool:
        """全写像が符号付き軸置換か"""
        return all(f.perm is not None for f in self.maps)


@dataclass
class AttractorSample:
    """深さ depth の全ワードを基点に適用した点（ワードの辞書式順）"""
    depth: int
    points: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def words(self) -> List[str]:
        return ["".join(str(int(v)) for v in row) for row in self.labels]

    def to_cloud(self) -> PointCloud:
        return PointCloud.from_points(self.points)
