"""
End-to-end pipeline: torus embedding, Cantor capture, code ordering and a curve onto the cube
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from src.cantor.models import CantorSystem, DiscreteMeasure
from src.cantor.shift import apply_shift, shift_fit
from src.cantor.system import build_system, decode
from src.embedding.assouad import embed_cloud
from src.errors import NormalizationError, ShapeError, ValidationRejected
from src.gauges.models import Gauge
from src.gauges.transforms import hat_transform
from src.holder.curves import grid_cells_hit, hilbert_curve, interleave_map
from src.holder.extension import SampledMap, clip_to_cube, mcshane_extend
from src.holder.modulus import modulus_fit
from src.metric.core import code_dist_many, torus_dist_many
from src.metric.models import PointCloud
from src.selfsimilar.dimension import box_dimension
from src.utils import make_rng
from config.settings import (
    HILBERT_MAX_ORDER, PIPELINE_DENSITY_LEVELS, PIPELINE_DEPTH, PIPELINE_EPSILON, PIPELINE_HAT_BETA,
    PIPELINE_MAX_PAIRS, PIPELINE_N_MAX
)

DOMINANCE_MARGIN = 1e-9
DIMENSION_RADII = tuple(2.0 ** -k for k in range(2, 6))


@dataclass
class PipelineParams:
    """パイプラインの各段階のパラメータ"""
    epsilon: str = PIPELINE_EPSILON
    depth: int = PIPELINE_DEPTH
    n_min: int = 0
    n_max: int = PIPELINE_N_MAX
    gauge: Optional[Gauge] = None
    hat_beta: float = PIPELINE_HAT_BETA
    curve: str = "hilbert"
    order: Optional[int] = None
    seed: Optional[int] = None
    workers: int = 1
    max_pairs: int = PIPELINE_MAX_PAIRS


@dataclass
class PipelineReport:
    """写像の診断結果（順序付けは単調空間による構成の代用）"""
    m: int
    points: int
    captured_fraction: float
    grid_resolution: int
    beta_hat: Optional[float]
    stage_moduli: Dict[str, Optional[Dict]] = field(default_factory=dict)
    dimension_ratio: Optional[float] = None
    extension_gauge: Dict = field(default_factory=dict)
    substitute_construction: bool = True
    degenerate: bool = False
    image: Optional[np.ndarray] = None

    def to_dict(self) -> Dict:
        return {k: v for k, v in self.__dict__.items() if k != "image"}


class CubeMappingPipeline:
    """点群から [0,1]^m への写像を段階的に構成するクラス"""

    def __init__(self, params: Optional[PipelineParams] = None):
        self.logger = logging.getLogger(__name__)
        self.params = params or PipelineParams()

    def run(self, cloud: PointCloud, m: int, weights: Optional[np.ndarray] = None) -> PipelineReport:
        """全段階を実行してレポートを返す"""
        degenerate = self._degenerate(cloud, m)
        if degenerate is not None:
            return degenerate

        p = self.params
        self.logger.info(f"===== パイプライン開始: {cloud.size} 点 → [0,1]^{m} =====")

        # 1. トーラスへの埋め込み
        emb = embed_cloud(cloud, p.n_min, p.n_max, p.workers)

        # 2. Cantor系の構成
        system = build_system(p.epsilon, emb.schedule, p.depth)
        return self._map_through_system(cloud, emb.images, system, m, weights)

    def run_system(
        self, system: CantorSystem, points: np.ndarray, m: int, weights: Optional[np.ndarray] = None
    ) -> PipelineReport:
        """
        トーラス上の点（Cantor系の標本など）から直接構成する
        元の距離は d_G で、埋め込み段は恒等写像
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != system.K:
            raise ShapeError(f"点の形状が不正です: {pts.shape} (K={system.K})")
        cloud = PointCloud.from_matrix(torus_dist_many(pts[:, None, :], pts[None, :, :], system.schedule))
        degenerate = self._degenerate(cloud, m)
        if degenerate is not None:
            return degenerate
        self.logger.info(f"===== パイプライン開始（トーラス点）: {cloud.size} 点 → [0,1]^{m} =====")
        return self._map_through_system(cloud, pts, system, m, weights)

    def _degenerate(self, cloud: PointCloud, m: int) -> Optional[PipelineReport]:
        if m < 1:
            raise ValidationRejected(f"出力次元 m は 1 以上が必要です: {m}")
        if cloud.diameter > 1.0:
            raise NormalizationError(f"点群の直径が 1 を超えています: {cloud.diameter!r}", witness=cloud.diameter)
        if cloud.size == 1:
            self.logger.info("1点のみの点群: 定数写像を返します")
            return PipelineReport(
                m=m, points=1, captured_fraction=1.0, grid_resolution=0, beta_hat=None,
                degenerate=True, image=np.zeros((1, m)),
            )
        return None

    def _map_through_system(
        self, cloud: PointCloud, images: np.ndarray, system: CantorSystem, m: int, weights: Optional[np.ndarray]
    ) -> PipelineReport:
        p = self.params
        sched = system.schedule
        depth = min(p.depth, system.p_max)
        if weights is None:
            weights = np.full(cloud.size, 1.0 / cloud.size)

        # シフトによる質量の捕捉
        mu = DiscreteMeasure(images, weights)
        shift = shift_fit(system, mu, depth, p.workers)
        captured = np.flatnonzero(shift.captured_mask)
        if len(captured) == 0:
            raise ValidationRejected("Cantor系に捕捉された点がありません")

        # 3. 捕捉点のコードを読み取る
        shifted = apply_shift(mu.points[captured], shift)
        codes = decode(system, shifted, depth)

        # 4. コードの辞書式順序と累積重みによる [0,1] への配置
        t = self.order_codes(codes, sched, mu.weights[captured])

        # 5. 曲線で [0,1]^m へ
        anchor_values = self.curve_values(t, m)

        # 6. ゲージによる拡張
        anchors = SampledMap(captured, anchor_values)
        h = self.extension_gauge(cloud, anchors)
        image = clip_to_cube(mcshane_extend(anchors, h, cloud, np.arange(cloud.size)))

        report = PipelineReport(
            m=m,
            points=cloud.size,
            captured_fraction=shift.captured_fraction,
            grid_resolution=self.grid_resolution(image),
            beta_hat=None,
            extension_gauge=h.describe(),
            image=image,
        )
        report.stage_moduli = self.stage_moduli(cloud, images, shifted, codes, t, anchor_values, captured, image, sched)
        final = report.stage_moduli.get("final")
        report.beta_hat = final["beta_hat"] if final else None
        report.dimension_ratio = self.dimension_ratio(cloud, image)

        self.logger.info("--- 処理結果サマリー ---")
        self.logger.info(f"捕捉率: {report.captured_fraction:.4f}")
        self.logger.info(f"格子分解能: 2^-{report.grid_resolution}")
        self.logger.info(f"β̂: {report.beta_hat}")
        self.logger.info("===== パイプライン終了 =====")
        return report

    def order_codes(self, codes: np.ndarray, sched, weights: np.ndarray) -> np.ndarray:
        """
        レベル j ごとに、ブロック n ≤ j の座標の第 (j−n) 桁を並べたキーで辞書式に整列し、
        累積重みの中点を割り当てる（同じキーの点は同じ値）
        """
        depth = codes.shape[2]
        offsets = sched.offsets
        columns = []
        for j in range(sched.n_max + depth):
            for n in range(sched.n_max + 1):
                digit = j - n
                if 0 <= digit < depth:
                    for k in sched.block(n):
                        columns.append(codes[:, k, digit])
        keys = np.stack(columns, axis=1) if columns else np.zeros((len(codes), 0), dtype=np.uint8)
        self.logger.debug(f"順序キー: {keys.shape[1]} 桁, ブロック境界 {offsets}")

        order = np.lexsort(keys.T[::-1]) if keys.shape[1] else np.arange(len(codes))
        sorted_keys = keys[order]
        new_group = np.ones(len(order), dtype=bool)
        if len(order) > 1:
            new_group[1:] = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
        group = np.cumsum(new_group) - 1
        group_mass = np.bincount(group, weights=weights[order])
        before = np.concatenate([[0.0], np.cumsum(group_mass)[:-1]])
        total = group_mass.sum()
        mid = (before + group_mass / 2) / total if total > 0 else np.full(len(group_mass), 0.5)

        t = np.empty(len(codes))
        t[order] = mid[group]
        return np.clip(t, 0.0, 1.0)

    def curve_values(self, t: np.ndarray, m: int) -> np.ndarray:
        if m == 1:
            return t.reshape(-1, 1)
        if self.params.curve == "interleave":
            order = self.params.order or min(PIPELINE_DENSITY_LEVELS * m, 52)
            return interleave_map(t.reshape(-1, 1), m, order)
        order = self.params.order or min(PIPELINE_DENSITY_LEVELS, HILBERT_MAX_ORDER, 62 // m)
        return hilbert_curve(m, order, t)

    def extension_gauge(self, cloud: PointCloud, anchors: SampledMap) -> Gauge:
        """既定は hat(pow(1), β) を、アンカー間の変動を上回るよう定数倍したもの"""
        base = self.params.gauge
        if base is None:
            base = hat_transform(Gauge.power(1.0), self.params.hat_beta, seed=self.params.seed).gauge
        D = cloud.block(anchors.indices, anchors.indices)
        spread = np.abs(anchors.values[:, None, :] - anchors.values[None, :, :]).max(axis=2)
        H = base(D)
        positive = H > 0
        ratio = float((spread[positive] / H[positive]).max()) if positive.any() else 0.0
        factor = max(ratio, 1.0) * (1.0 + DOMINANCE_MARGIN)
        self.logger.info(f"拡張ゲージ {base.label}: 倍率 {factor:.6g}")
        return base.scaled(factor)

    def grid_resolution(self, image: np.ndarray) -> int:
        """全 2^{km} セルに像が入る最大の k"""
        m = image.shape[1]
        best = 0
        for k in range(1, PIPELINE_DENSITY_LEVELS + 1):
            if k * m > 62 or grid_cells_hit(image, k) < 2 ** (k * m):
                break
            best = k
        return best

    def _pairs(self, size: int):
        rng = make_rng(self.params.seed)
        total = size * (size - 1) // 2
        if total <= self.params.max_pairs:
            return np.triu_indices(size, k=1)
        i = rng.integers(0, size, size=self.params.max_pairs)
        j = rng.integers(0, size, size=self.params.max_pairs)
        keep = i != j
        return i[keep], j[keep]

    def _fit(self, name: str, dx: np.ndarray, dy: np.ndarray) -> Optional[Dict]:
        try:
            return modulus_fit(np.column_stack([dx, dy])).to_dict()
        except ValidationRejected as e:
            self.logger.warning(f"段階 {name} のモジュラスを当てはめられません: {e}")
            return None

    def stage_moduli(self, cloud, images, shifted, codes, t, anchor_values, captured, image, sched) -> Dict:
        out = {}
        i, j = self._pairs(cloud.size)
        dx = cloud.pair_distances(i, j)
        out["embedding"] = self._fit("embedding", dx, torus_dist_many(images[i], images[j], sched))
        out["final"] = self._fit("final", dx, np.sqrt(((image[i] - image[j]) ** 2).sum(axis=1)))

        a, b = self._pairs(len(captured))
        dcode = code_dist_many(codes[a], codes[b], sched)
        out["decode"] = self._fit("decode", torus_dist_many(shifted[a], shifted[b], sched), dcode)
        out["order"] = self._fit("order", dcode, np.abs(t[a] - t[b]))
        out["curve"] = self._fit(
            "curve", np.abs(t[a] - t[b]), np.sqrt(((anchor_values[a] - anchor_values[b]) ** 2).sum(axis=1))
        )
        return out

    def dimension_ratio(self, cloud: PointCloud, image: np.ndarray) -> Optional[float]:
        """像と元の点群のボックス次元の比（座標を持つ点群のみ）"""
        if cloud.mode != "euclidean":
            return None
        try:
            source = box_dimension(cloud.points, DIMENSION_RADII).estimate
            target = box_dimension(image, DIMENSION_RADII).estimate
        except ValidationRejected:
            return None
        if source <= 0:
            return None
        return float(target / source)


def pipeline_map_onto_cube(
    cloud: PointCloud, m: int, weights: Optional[np.ndarray] = None, params: Optional[PipelineParams] = None
) -> PipelineReport:
    """点群から [0,1]^m への写像を構成"""
    return CubeMappingPipeline(params).run(cloud, m, weights)
