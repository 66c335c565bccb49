"""
Scale-by-scale Assouad coloring and the torus embedding of finite metric spaces
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from src.errors import NormalizationError, ValidationRejected
from src.metric.core import torus_dist_many
from src.metric.covering import SeparatedSet, local_ball_bound, maximal_separated
from src.metric.models import PointCloud, SlowSchedule, TorusPoint
from src.utils import parallel_map

logger = logging.getLogger(__name__)

EMBEDDING_CAVEAT = (
    "G(n) は有限点群に対して厳密ですが、点群が連続体のサンプルの場合は真の G(n) がより大きい可能性があります"
)


@dataclass
class ScaleStage:
    """スケール n のネット S_n と彩色 χ_n"""
    n: int
    eps: float
    net: SeparatedSet
    palette_size: int
    colors: np.ndarray

    def members_of(self, j: int) -> np.ndarray:
        return np.asarray(self.net.members, dtype=np.int64)[self.colors == j]


@dataclass
class Embedding:
    """切断トーラスへの埋め込み"""
    schedule: SlowSchedule
    images: np.ndarray
    phi: np.ndarray
    stages: List[ScaleStage]
    n_min: int
    n_max: int

    def image(self, i: int) -> TorusPoint:
        return TorusPoint(self.images[i])

    def to_dict(self) -> Dict:
        return {
            "schedule": {"G": list(self.schedule.counts), "K": self.schedule.K},
            "n_min": self.n_min,
            "n_max": self.n_max,
            "images": self.images.tolist(),
        }


def color_stage(cloud: PointCloud, n: int) -> ScaleStage:
    """ε_n ネットを作り、8ε_n 以内のネット点に異なる色を最小色番号で割り当てる"""
    eps = math.ldexp(1.0, -n)
    net = maximal_separated(cloud, eps)
    G = local_ball_bound(cloud, net, 8 * eps)
    members = list(net.members)
    colors = np.full(len(members), -1, dtype=np.int64)
    if members:
        block = cloud.block(members, members)
        for a in range(len(members)):
            used = set(colors[:a][block[a, :a] <= 8 * eps].tolist())
            c = 0
            while c in used:
                c += 1
            colors[a] = c
        if colors.max() >= G:
            raise ValidationRejected(f"n={n}: 色数 {colors.max() + 1} が G(n)={G} を超えました")
    logger.debug(f"n={n}: ネット {len(members)} 点, G(n)={G}, 使用色 {len(set(colors.tolist()))}")
    return ScaleStage(n=n, eps=eps, net=net, palette_size=G, colors=colors)


def phi_matrix(cloud: PointCloud, stage: ScaleStage) -> np.ndarray:
    """全点・全色の φ_j(x) = min{d(x, χ^{-1}(j)), (3/2)ε_n}（形状 (N, G(n))）"""
    cap = 1.5 * stage.eps
    out = np.full((cloud.size, stage.palette_size), cap)
    everyone = np.arange(cloud.size)
    for j in range(stage.palette_size):
        members = stage.members_of(j)
        if len(members):
            out[:, j] = np.minimum(cloud.block(everyone, members).min(axis=1), cap)
    return out


def phi_coordinate(cloud: PointCloud, x: int, stage: ScaleStage, j: int) -> float:
    """点 x の色 j 座標 φ_j(x)"""
    if not 0 <= j < stage.palette_size:
        raise ValidationRejected(f"色 {j} はパレット外です (G(n)={stage.palette_size})")
    cap = 1.5 * stage.eps
    members = stage.members_of(j)
    if not len(members):
        return cap
    return float(min(cloud.block([x], members).min(), cap))


def normalize_diameter(cloud: PointCloud) -> PointCloud:
    """計算上の直径が 1 以下になるまで縮小"""
    diam = cloud.diameter
    if diam <= 1.0:
        return cloud
    scale = 1.0 / diam
    while True:
        if cloud.mode == "matrix":
            scaled = PointCloud.from_matrix(cloud.matrix * scale)
        else:
            scaled = PointCloud.from_points(cloud.points * scale)
        if scaled.diameter <= 1.0:
            logger.info(f"直径を正規化: {diam} → {scaled.diameter}")
            return scaled
        scale = float(np.nextafter(scale, 0.0))


def embed_cloud(cloud: PointCloud, n_min: int, n_max: int, workers: int = 1) -> Embedding:
    """各スケールの φ 座標を (2^n/3) 倍してトーラス座標とする"""
    if n_min < 0 or n_min > n_max:
        raise ValidationRejected(f"スケール範囲が不正です: n_min={n_min}, n_max={n_max}")
    if cloud.size == 0:
        raise ValidationRejected("空の点群は埋め込めません")
    if cloud.diameter > 1.0:
        raise NormalizationError(f"点群の直径が 1 を超えています: {cloud.diameter!r}", witness=cloud.diameter)

    logger.info(f"埋め込み開始: {cloud.size} 点, n={n_min}..{n_max}")
    scales = list(range(n_min, n_max + 1))
    stages = parallel_map(lambda n: color_stage(cloud, n), scales, workers)

    counts = [0] * n_min + [stage.palette_size for stage in stages]
    schedule = SlowSchedule.from_counts(counts)
    blocks = []
    for stage in tqdm(stages, desc="φ座標計算", disable=None):
        blocks.append(phi_matrix(cloud, stage))
    phi = np.concatenate(blocks, axis=1)
    images = np.concatenate(
        [np.ldexp(block, stage.n) / 3.0 for block, stage in zip(blocks, stages)], axis=1
    )
    logger.info(f"埋め込み完了: K={schedule.K}, G={counts}")
    return Embedding(schedule, images, phi, stages, n_min, n_max)


@dataclass
class DistortionReport:
    """埋め込みの Lipschitz 上界と帯域ごとの下界の検証結果"""
    pairs: int = 0
    banded_pairs: int = 0
    unbanded_pairs: int = 0
    lipschitz_ok: bool = True
    band_ok: bool = True
    phi1_ok: bool = True
    phi2_ok: bool = True
    lipschitz_violations: int = 0
    band_violations: int = 0
    max_ratio: Optional[float] = None
    min_band_ratio: Optional[float] = None
    worst_pairs: List[Dict] = field(default_factory=list)
    caveat: str = EMBEDDING_CAVEAT

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def _band_of(d: np.ndarray, n_min: int, n_max: int) -> np.ndarray:
    """(5/2)ε_n < d ≤ 5ε_n を満たす n（該当なしは -1）"""
    band = np.full(d.shape, -1, dtype=np.int64)
    for n in range(n_min, n_max + 1):
        eps = math.ldexp(1.0, -n)
        band[(d > 2.5 * eps) & (d <= 5 * eps)] = n
    return band


def distortion_report(cloud: PointCloud, emb: Embedding, workers: int = 1, worst: int = 5) -> DistortionReport:
    """全点対で d_G ≤ d/3、帯域内の点対で d_G ≥ d/30 と座標レベルの補題を検証"""
    report = DistortionReport()
    N = cloud.size
    block_of = emb.schedule.block_of
    stage_by_n = {stage.n: stage for stage in emb.stages}

    def row_stats(i: int) -> Dict:
        js = np.arange(i + 1, N)
        if not len(js):
            return {}
        d = cloud.block([i], js)[0]
        dg = torus_dist_many(emb.images[js], emb.images[i][None, :], emb.schedule)
        dphi = np.abs(emb.phi[js] - emb.phi[i][None, :])
        phi1 = bool(np.all(dphi.max(axis=1) <= d))
        band = _band_of(d, emb.n_min, emb.n_max)
        return {"js": js, "d": d, "dg": dg, "dphi": dphi, "phi1": phi1, "band": band}

    rows = parallel_map(row_stats, range(N), workers)
    ratios, band_ratios = [], []
    candidates = []
    for i, stats in enumerate(rows):
        if not stats:
            continue
        js, d, dg, dphi, band = stats["js"], stats["d"], stats["dg"], stats["dphi"], stats["band"]
        positive = d > 0
        report.pairs += int(positive.sum())
        report.phi1_ok &= stats["phi1"]

        lip = dg[positive] <= d[positive] / 3.0
        report.lipschitz_violations += int((~lip).sum())
        if positive.any():
            ratios.append((dg[positive] / d[positive]).max())

        banded = positive & (band >= 0)
        report.banded_pairs += int(banded.sum())
        report.unbanded_pairs += int((positive & (band < 0)).sum())
        for t in np.flatnonzero(banded):
            n = int(band[t])
            ratio = dg[t] / d[t]
            band_ratios.append(ratio)
            ok = dg[t] >= d[t] / 30.0
            if not ok:
                report.band_violations += 1
            witness_color, witness_point, phi2 = _phi2_witness(cloud, emb, stage_by_n[n], i, t, dphi, d[t], block_of)
            report.phi2_ok &= phi2
            candidates.append({
                "i": i, "j": int(js[t]), "distance": float(d[t]), "torus_distance": float(dg[t]),
                "ratio": float(ratio), "band_n": n, "witness_color": witness_color,
                "witness_net_point": witness_point, "band_ok": bool(ok),
            })

    report.lipschitz_ok = report.lipschitz_violations == 0
    report.band_ok = report.band_violations == 0
    report.max_ratio = float(max(ratios)) if ratios else None
    report.min_band_ratio = float(min(band_ratios)) if band_ratios else None
    candidates.sort(key=lambda c: (c["ratio"], c["i"], c["j"]))
    report.worst_pairs = candidates[:worst]

    logger.info(
        f"歪み検証: {report.pairs} 対, 帯域内 {report.banded_pairs} 対, "
        f"lipschitz_ok={report.lipschitz_ok}, band_ok={report.band_ok}, "
        f"max_ratio={report.max_ratio}, min_band_ratio={report.min_band_ratio}"
    )
    return report


def _phi2_witness(cloud, emb, stage, i, t, dphi, d, block_of):
    """x から ε_n 以内のネット点とその色を証拠として返す"""
    members = np.asarray(stage.net.members, dtype=np.int64)
    dist = cloud.block([i], members)[0]
    nearest = int(np.argmin(dist))
    color = int(stage.colors[nearest])
    k = int(emb.schedule.offsets[stage.n]) + color
    if dphi[t, k] >= d / 10.0:
        return color, int(members[nearest]), True
    # 最近ネット点の色で不足する場合は同ブロックの全色を探す
    cols = np.flatnonzero(block_of == stage.n)
    ok = bool(np.any(dphi[t, cols] >= d / 10.0))
    return color, int(members[nearest]), ok
