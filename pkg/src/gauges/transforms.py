"""
Order estimation, the hat transform and gauge-driven remetrization
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import DomainError, ValidationRejected
from src.gauges.models import Gauge
from src.metric.core import validate_metric
from src.metric.models import PointCloud
from src.utils import make_rng
from config.settings import (
    GAUGE_DEFAULT_DECADES, GAUGE_GRID_DENSITY, HAT_BETA_TOLERANCE, HAT_RELATIVE_TOLERANCE,
    PSI_BOUNDED_RATIO, SUBADDITIVE_SAMPLES, SUBADDITIVE_TOLERANCE
)

logger = logging.getLogger(__name__)


def decade_grid(decades: int, top: float = 0.1, density: int = GAUGE_GRID_DENSITY) -> np.ndarray:
    """top から 10^{-decades} までの降順の幾何格子（1桁あたり density 点）"""
    start = float(np.log10(top))
    count = int(round((decades + start) * density)) + 1
    return np.logspace(start, -decades, count)


@dataclass
class OrdEstimate:
    """log h(r)/log r の格子上の推移と liminf の代用値"""
    grid: np.ndarray
    ratios: np.ndarray
    running_min: np.ndarray
    tail_min: float
    estimate: float
    claimed_ord: Optional[float]
    decades: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.grid, "log_ratio": self.ratios, "running_min": self.running_min})

    def to_dict(self) -> Dict:
        return {
            "decades": self.decades,
            "grid_points": len(self.grid),
            "tail_min": self.tail_min,
            "estimate": self.estimate,
            "claimed_ord": self.claimed_ord,
        }


def ord_estimate(h: Gauge, decades: int = GAUGE_DEFAULT_DECADES) -> OrdEstimate:
    """
    r = 10^{-1} .. 10^{-decades} で log h(r)/log r を評価
    running_min[i] は点 i から最細点までの最小値（推移の表示用）
    estimate は最細点 r = 10^{-decades} での比そのもの
    """
    if decades < 2:
        raise DomainError(f"decades は 2 以上が必要です: {decades}")
    grid = decade_grid(decades)
    ratios = np.asarray(h.log_ratio(grid), dtype=float)
    running = np.minimum.accumulate(ratios[::-1])[::-1]
    quarter = max(1, len(grid) // 4)
    est = OrdEstimate(
        grid=grid,
        ratios=ratios,
        running_min=running,
        tail_min=float(ratios[-quarter:].min()),
        estimate=float(ratios[-1]),
        claimed_ord=h.claimed_ord,
        decades=decades,
    )
    logger.debug(f"ord推定 {h.label}: estimate={est.estimate}, tail_min={est.tail_min}")
    return est


@dataclass
class HatReport:
    """ĥ の性質検証（単調性・優越・劣加法性・倍化）"""
    beta: float
    bounded: bool
    sup_psi: Optional[float]
    precondition_ok: bool
    input_ord: float
    checks: Dict[str, bool] = field(default_factory=dict)
    margins: Dict[str, float] = field(default_factory=dict)
    ord_hat: Optional[float] = None
    grid_points: int = 0

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class HatResult:
    gauge: Gauge
    report: HatReport
    grid: np.ndarray
    values: np.ndarray


def hat_transform(
    h: Gauge,
    beta: float,
    decades: int = GAUGE_DEFAULT_DECADES,
    strict: bool = True,
    seed: Optional[int] = None,
) -> HatResult:
    """
    h*(r) = h(r) + r^β, ψ(r) = sup_{r≤s≤1} s^{-β} h*(s) を格子上で計算し
    ψ が有界なら ĥ = (sup ψ) r^β、そうでなければ ĥ = r^β ψ(r)
    """
    if not beta > 0:
        raise DomainError(f"β は正である必要があります: {beta}")
    input_ord = ord_estimate(h, decades).estimate
    precondition_ok = beta <= input_ord + HAT_BETA_TOLERANCE
    if not precondition_ok:
        message = f"β={beta} が ord h の推定値 {input_ord:.6g} を超えています"
        if strict:
            raise ValidationRejected(message, witness={"beta": beta, "ord_estimate": input_ord})
        logger.warning(message + "（非厳密モードで続行）")

    # r = 1 から 10^{-decades} への降順格子
    grid = decade_grid(decades, top=1.0)
    r_beta = grid ** beta
    h_star = h(grid) + r_beta
    psi = np.maximum.accumulate(h_star / r_beta)
    bounded = bool(psi[-1] / psi[0] < 1 + PSI_BOUNDED_RATIO)

    if bounded:
        sup_psi = float(psi.max())
        hat = Gauge.power(beta, scale=sup_psi)
        values = sup_psi * r_beta
    else:
        sup_psi = None
        values = r_beta * psi
        hat = Gauge.table(grid[::-1], values[::-1], tail_beta=beta, label=f"hat({h.label},{beta})")

    report = HatReport(
        beta=float(beta), bounded=bounded, sup_psi=sup_psi, precondition_ok=precondition_ok,
        input_ord=input_ord, grid_points=len(grid),
    )
    _hat_checks(report, hat, grid, values, h_star, seed)
    if precondition_ok:
        report.ord_hat = ord_estimate(hat, decades).estimate
        report.checks["ord"] = abs(report.ord_hat - beta) <= HAT_BETA_TOLERANCE
    logger.info(f"hat変換 {h.label}, β={beta}: bounded={bounded}, checks={report.checks}")
    return HatResult(hat, report, grid, values)


def _hat_checks(report: HatReport, hat: Gauge, grid, values, h_star, seed):
    tol = HAT_RELATIVE_TOLERANCE
    beta = report.beta

    # grid は降順なので、r 昇順では values[::-1] が増加する
    asc = values[::-1]
    mono_gap = np.diff(asc) / asc[1:]
    report.checks["mono"] = bool(np.all(mono_gap > -tol))
    report.margins["mono"] = float(mono_gap.min())

    dom = (values - h_star) / h_star
    report.checks["dominates"] = bool(np.all(dom >= -tol))
    report.margins["dominates"] = float(dom.min())

    rng = make_rng(seed)
    i = rng.integers(0, len(grid), size=SUBADDITIVE_SAMPLES)
    j = rng.integers(0, len(grid), size=SUBADDITIVE_SAMPLES)
    r, s = grid[i], grid[j]
    inv = 1.0 / beta
    lhs = hat(r + s) ** inv
    rhs = values[i] ** inv + values[j] ** inv
    sub = (rhs - lhs) / rhs
    report.checks["subadd"] = bool(np.all(sub >= -SUBADDITIVE_TOLERANCE))
    report.margins["subadd"] = float(sub.min())

    half = grid <= 0.5
    doubled = hat(2 * grid[half])
    bound = 2 ** beta * values[half]
    dbl = (bound - doubled) / bound
    report.checks["doubling"] = bool(np.all(dbl >= -tol))
    report.margins["doubling"] = float(dbl.min())


def check_subadditive(
    h: Gauge, distances: np.ndarray, samples: int = SUBADDITIVE_SAMPLES, seed: Optional[int] = None
) -> Tuple[bool, Optional[Tuple[float, float]]]:
    """観測距離の範囲で h の非減少性と h(u+v) ≤ h(u)+h(v) をサンプル検証"""
    if h.kind == "pow" and h.beta <= 1:
        return True, None
    d = np.unique(np.asarray(distances, dtype=float).ravel())
    d = d[d > 0]
    if len(d) == 0:
        return True, None
    hv = h(d)
    drops = np.flatnonzero(np.diff(hv) < 0)
    if len(drops):
        k = int(drops[0])
        return False, (float(d[k]), float(d[k + 1]))
    rng = make_rng(seed)
    u = d[rng.integers(0, len(d), size=samples)]
    v = d[rng.integers(0, len(d), size=samples)]
    lhs, rhs = h(u + v), h(u) + h(v)
    bad = np.flatnonzero(lhs > rhs * (1 + HAT_RELATIVE_TOLERANCE))
    if len(bad):
        t = int(bad[0])
        return False, (float(u[t]), float(v[t]))
    return True, None


def remetrize(cloud: PointCloud, h: Gauge, seed: Optional[int] = None) -> PointCloud:
    """ρ_ij = h(d_ij) の距離行列を作り、三角不等式を検証する"""
    D = cloud.distances
    ok, witness = check_subadditive(h, D, seed=seed)
    if not ok:
        raise ValidationRejected(f"ゲージ {h.label} が劣加法的ではありません: witness={witness}", witness=witness)
    out = PointCloud.from_matrix(h(D))
    report = validate_metric(out, "triangle", seed=seed)
    if not report.ok:
        raise ValidationRejected(
            f"再距離化の結果が三角不等式を満たしません: triple={report.worst_triple}, slack={report.slack}",
            witness=report.worst_triple,
        )
    logger.info(f"再距離化完了: {cloud.size} 点, ゲージ {h.label}")
    return out


def snowflake(cloud: PointCloud, alpha: float) -> PointCloud:
    """スノーフレーク距離 d^α (0 < α ≤ 1)"""
    if not 0 < alpha <= 1:
        raise DomainError(f"α は (0,1] の範囲である必要があります: {alpha}")
    return remetrize(cloud, Gauge.power(alpha))
