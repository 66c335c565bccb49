"""
McShane-type extension of sampled maps with a gauge modulus
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.errors import ShapeError, ValidationRejected
from src.gauges.models import Gauge
from src.gauges.transforms import check_subadditive
from src.metric.models import PointCloud

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampledMap:
    """アンカー点（元の点群のインデックス）と R^m の値"""
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if len(idx) != len(vals):
            raise ShapeError(f"アンカー数 {len(idx)} と値の数 {len(vals)} が一致しません")
        if len(np.unique(idx)) != len(idx):
            raise ValidationRejected("アンカーのインデックスが重複しています")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]


def check_anchor_modulus(anchors: SampledMap, h: Gauge, source: PointCloud):
    """全アンカー対・全座標で f(z′) + h(d(z,z′)) ≥ f(z) を確認"""
    D = source.block(anchors.indices, anchors.indices)
    H = h(D)
    F = anchors.values
    for c in range(anchors.m):
        # violated[a, b]: f(b) + h(d(a,b)) < f(a)
        violated = (F[None, :, c] + H) < F[:, None, c]
        if violated.any():
            a, b = np.argwhere(violated)[0]
            witness = (int(anchors.indices[a]), int(anchors.indices[b]), c)
            raise ValidationRejected(
                f"アンカーがゲージのモジュラスを満たしません: pair=({witness[0]}, {witness[1]}), 座標 {c}",
                witness=witness,
            )


def mcshane_extend(anchors: SampledMap, h: Gauge, source: PointCloud, query: Sequence[int]) -> np.ndarray:
    """座標ごとに f*(x) = min_z f(z) + h(d(x,z)) を計算"""
    if len(anchors.indices) == 0:
        raise ValidationRejected("アンカーが空です")
    query = np.asarray(query, dtype=np.int64)
    D = source.block(query, anchors.indices)
    ok, witness = check_subadditive(h, D)
    if not ok:
        raise ValidationRejected(f"ゲージ {h.label} が劣加法的ではありません: witness={witness}", witness=witness)
    check_anchor_modulus(anchors, h, source)

    H = h(D)
    out = np.empty((len(query), anchors.m))
    for c in range(anchors.m):
        out[:, c] = (anchors.values[None, :, c] + H).min(axis=1)
    logger.debug(f"McShane拡張: アンカー {len(anchors.indices)} 点 → クエリ {len(query)} 点")
    return out


def clip_to_cube(values: np.ndarray) -> np.ndarray:
    """[0,1]^m への最近点射影（各座標で 1-Lipschitz）"""
    return np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
