"""
Separated nets, greedy covering counts and the non-exploding profile
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import DomainError
from src.metric.models import PointCloud
from src.utils import parallel_map

logger = logging.getLogger(__name__)

PROFILE_CAVEAT = (
    "Qhat は最小被覆数の貪欲上界であり、サンプル点上の最大値は連続体に対してはヒューリスティックです"
)


@dataclass(frozen=True)
class SeparatedSet:
    """極大 ε 分離集合（元の点群へのインデックス）"""
    scale: float
    members: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class ProfileRow:
    n: int
    eps: float
    G: int
    qhat8: int
    qhat4: int
    qhat2: int
    qhat1: int

    @property
    def claim_ok(self) -> bool:
        return self.G <= self.qhat8 * self.qhat4 * self.qhat2 * self.qhat1


@dataclass
class CoveringProfile:
    """スケールごとの G(n) と貪欲被覆数 Qhat"""
    rows: List[ProfileRow]
    series: List[Tuple[float, int, Optional[float]]]
    caveat: str = PROFILE_CAVEAT

    @property
    def claim_all_ok(self) -> bool:
        return all(row.claim_ok for row in self.rows)

    @property
    def max_log_ratio(self) -> Optional[float]:
        ratios = [ratio for _, _, ratio in self.series if ratio is not None]
        return max(ratios) if ratios else None

    @property
    def monotone(self) -> bool:
        """半径について Qhat が非増加か（貪欲法では保証されない）"""
        counts = [q for _, q, _ in sorted(self.series)]
        return all(a >= b for a, b in zip(counts, counts[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"n": r.n, "eps": r.eps, "G": r.G, "Qhat8": r.qhat8, "Qhat4": r.qhat4,
             "Qhat2": r.qhat2, "Qhat1": r.qhat1, "claim_ok": r.claim_ok}
            for r in self.rows
        ], columns=["n", "eps", "G", "Qhat8", "Qhat4", "Qhat2", "Qhat1", "claim_ok"])

    def series_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"r": r, "Qhat": q, "log_ratio": ratio} for r, q, ratio in sorted(self.series, reverse=True)],
            columns=["r", "Qhat", "log_ratio"],
        )

    def summary(self) -> Dict:
        return {
            "max_log_ratio": self.max_log_ratio,
            "claim_all_ok": self.claim_all_ok,
            "qhat_monotone": self.monotone,
            "caveat": self.caveat,
        }


def maximal_separated(cloud: PointCloud, eps: float) -> SeparatedSet:
    """インデックス順の走査で、採用済み全点から ε より遠い点を採用"""
    if not eps > 0:
        raise DomainError(f"ε は正である必要があります: {eps}")
    members: List[int] = []
    nearest = np.full(cloud.size, np.inf)
    for i in range(cloud.size):
        if nearest[i] > eps:
            members.append(i)
            nearest = np.minimum(nearest, cloud.row(i))
    return SeparatedSet(scale=float(eps), members=tuple(members))


def greedy_cover_count(cloud: PointCloud, r: float) -> int:
    """
    未被覆の最小インデックス点を中心に閉球を除去する貪欲被覆の中心数
    中心列は半径 r の maximal_separated と一致する
    """
    if not r > 0:
        raise DomainError(f"半径は正である必要があります: {r}")
    return len(maximal_separated(cloud, r))


def local_ball_bound(cloud: PointCloud, net: SeparatedSet, radius: float) -> int:
    """max_x |S ∩ B(x, radius)|（閉球、全点で厳密に計算）"""
    if cloud.size == 0 or len(net) == 0:
        return 0
    block = cloud.block(np.arange(cloud.size), list(net.members))
    return int((block <= radius).sum(axis=1).max())


def nonexploding_profile(cloud: PointCloud, n_range: Sequence[int], workers: int = 1) -> CoveringProfile:
    """各 n で G(n) と Qhat(8ε_n), Qhat(4ε_n), Qhat(2ε_n), Qhat(ε_n) を計算"""
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values:
        raise DomainError("n_range が空です")
    radii = sorted({math.ldexp(factor, -n) for n in n_values for factor in (8, 4, 2, 1)}, reverse=True)
    logger.info(f"被覆プロファイル計算開始: n={n_values[0]}..{n_values[-1]}, 半径 {len(radii)} 種")

    nets = dict(zip(radii, parallel_map(lambda r: maximal_separated(cloud, r), radii, workers)))

    rows = []
    for n in n_values:
        eps = math.ldexp(1.0, -n)
        G = local_ball_bound(cloud, nets[eps], 8 * eps)
        row = ProfileRow(n, eps, G, *(len(nets[factor * eps]) for factor in (8, 4, 2, 1)))
        if not row.claim_ok:
            logger.warning(f"n={n}: G(n)={G} が Qhat の積を超えています")
        rows.append(row)

    series = []
    for r in radii:
        q = len(nets[r])
        ratio = math.log(q) / math.log(1.0 / r) if r < 1 and q > 0 else None
        series.append((r, q, ratio))

    profile = CoveringProfile(rows=rows, series=series)
    logger.info(f"被覆プロファイル完了: claim_all_ok={profile.claim_all_ok}, max_log_ratio={profile.max_log_ratio}")
    return profile


def slowness_profile(counts: Sequence[int]) -> pd.DataFrame:
    """log₂ G(n)/n の推移（n ≥ 1, G(n) > 0）"""
    rows = []
    for n, g in enumerate(counts):
        if n == 0 or g <= 0:
            continue
        rows.append({"n": n, "G": int(g), "log_ratio": math.log2(g) / n})
    return pd.DataFrame(rows, columns=["n", "G", "log_ratio"])
