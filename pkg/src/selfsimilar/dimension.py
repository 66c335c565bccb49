"""
Box-counting dimension and greedy upper bounds for Hausdorff pre-measures
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from src.errors import BudgetError, DomainError
from src.gauges.models import Gauge
from src.metric.models import PointCloud
from src.selfsimilar.ifs import attractor_points
from src.selfsimilar.models import IFS
from config.settings import MAX_ATTRACTOR_POINTS

logger = logging.getLogger(__name__)

DIAMETER_SAMPLE_POINTS = 2000


@dataclass
class BoxDimension:
    """log N(r) を log(1/r) に回帰した傾き"""
    estimate: float
    intercept: float
    r_value: float
    series: pd.DataFrame

    def to_dict(self) -> Dict:
        return {"estimate": self.estimate, "intercept": self.intercept, "r_value": self.r_value}


def _coordinates(points: Union[PointCloud, np.ndarray]) -> np.ndarray:
    if isinstance(points, PointCloud):
        if points.mode != "euclidean":
            raise DomainError("ボックス数え上げには座標を持つ点群が必要です")
        return points.points
    return np.atleast_2d(np.asarray(points, dtype=float))


def box_dimension(points: Union[PointCloud, np.ndarray], radii: Sequence[float]) -> BoxDimension:
    """辺 r の軸平行セルのうち点を含むものを数え、log N(r) と log(1/r) の最小二乗傾きを返す"""
    pts = _coordinates(points)
    r = np.asarray(sorted(set(float(v) for v in radii), reverse=True))
    if len(r) < 2:
        raise DomainError(f"半径は2種類以上必要です: {list(radii)}")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise DomainError("半径は正の有限値である必要があります")
    if len(pts) == 0:
        raise DomainError("点がありません")

    counts = np.array([len(np.unique(np.floor(pts / radius).astype(np.int64), axis=0)) for radius in r])
    x, y = np.log(1.0 / r), np.log(counts)
    if np.all(counts == counts[0]):
        slope, intercept, r_value = 0.0, float(y[0]), 0.0
    else:
        fit = stats.linregress(x, y)
        slope, intercept, r_value = float(fit.slope), float(fit.intercept), float(fit.rvalue)
    series = pd.DataFrame({"r": r, "count": counts, "log_inv_r": x, "log_count": y})
    logger.debug(f"ボックス次元: {slope:.4f} (半径 {len(r)} 種)")
    return BoxDimension(slope, intercept, r_value, series)


@dataclass
class PremeasureBound:
    """貪欲被覆による H^g_δ の上界（測度そのものではない）"""
    delta: float
    upper_bound: float
    covers: int
    labels: np.ndarray

    def to_dict(self) -> Dict:
        return {"delta": self.delta, "upper_bound": self.upper_bound, "covers": self.covers}


def hausdorff_premeasure_upper(cloud: PointCloud, g: Gauge, delta: float) -> PremeasureBound:
    """
    未被覆の最小インデックス点から δ/2 以内の未被覆点をまとめ、
    実際の直径 d について g(d) を加算する
    """
    if not delta > 0:
        raise DomainError(f"δ は正である必要があります: {delta}")
    labels = np.full(cloud.size, -1, dtype=np.int64)
    total = 0.0
    covers = 0
    for i in range(cloud.size):
        if labels[i] >= 0:
            continue
        free = np.flatnonzero(labels < 0)
        members = free[cloud.block([i], free)[0] <= delta / 2]
        labels[members] = covers
        diam = float(cloud.block(members, members).max()) if len(members) > 1 else 0.0
        total += float(g(diam))
        covers += 1
    return PremeasureBound(float(delta), total, covers, labels)


def premeasure_series(cloud: PointCloud, g: Gauge, deltas: Sequence[float]) -> Dict:
    """
    δ を細かくしながら上界を並べ、被覆の入れ子性と上界の非増加性を報告する
    """
    ordered = sorted(set(float(d) for d in deltas), reverse=True)
    bounds = [hausdorff_premeasure_upper(cloud, g, d) for d in ordered]
    nested = True
    for coarse, fine in zip(bounds, bounds[1:]):
        pairs = np.unique(np.stack([fine.labels, coarse.labels], axis=1), axis=0)
        if len(pairs) != fine.covers:
            nested = False
            break
    values = [b.upper_bound for b in bounds]
    monotone = all(b <= a for a, b in zip(values, values[1:]))
    frame = pd.DataFrame({"delta": ordered, "upper_bound": values, "covers": [b.covers for b in bounds]})
    if nested and not monotone:
        logger.warning("入れ子の被覆ですが上界が増加しました")
    return {"series": frame, "nested": nested, "monotone": monotone}


def attractor_diameter(ifs: IFS) -> float:
    """開集合の箱の対角線（なければ標本の直径）"""
    if ifs.open_set is not None:
        lo = np.asarray(ifs.open_set.lo, dtype=float)
        hi = np.asarray(ifs.open_set.hi, dtype=float)
        return float(np.linalg.norm(hi - lo))
    depth = int(np.log(DIAMETER_SAMPLE_POINTS) // np.log(len(ifs.maps)))
    sample = attractor_points(ifs, depth).to_cloud()
    logger.warning(f"開集合がないため深さ {depth} の標本直径を使います（下からの近似）")
    return sample.diameter


def natural_cover_sum(ifs: IFS, g: Gauge, level: int, diameter: Optional[float] = None) -> float:
    """長さ level の全ワード w について Σ g(diam·c_w)"""
    count = len(ifs.maps) ** level
    if count > MAX_ATTRACTOR_POINTS:
        raise BudgetError(f"ワード数 {count} が上限 {MAX_ATTRACTOR_POINTS} を超えています", witness=count)
    diam = attractor_diameter(ifs) if diameter is None else float(diameter)
    products = np.ones(1)
    for _ in range(level):
        products = np.concatenate([c * products for c in ifs.ratios])
    return float(g(diam * products).sum())
