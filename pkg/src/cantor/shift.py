"""
Dyadic shift search that captures the mass of a discrete measure inside a Cantor system
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np
from tqdm import tqdm

try:
    from itertools import batched
except ImportError:
    from more_itertools import batched

from src.cantor.models import CantorSystem, DiscreteMeasure
from src.errors import DepthError, ShapeError
from src.utils import parallel_map
from config.settings import SHIFT_CHUNK_SIZE

logger = logging.getLogger(__name__)


@dataclass
class ShiftResult:
    """最良シフトと捕捉質量"""
    shift: List[Fraction]
    grid_depth: int
    captured: float
    total: float
    captured_mask: np.ndarray

    @property
    def shift_float(self) -> np.ndarray:
        return np.array([float(s) for s in self.shift])

    @property
    def captured_fraction(self) -> float:
        return self.captured / self.total if self.total > 0 else 0.0

    def to_dict(self) -> Dict:
        return {
            "shift": self.shift,
            "grid_depth": self.grid_depth,
            "captured": self.captured,
            "total": self.total,
            "captured_fraction": self.captured_fraction,
            "captured_atoms": int(self.captured_mask.sum()),
        }


def level_intervals(sys: CantorSystem, n: int, depth: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    ブロック n の深さ depth の全区間（昇順）の浮動小数端点
    厳密値を正しく丸めるので、符号化した点は必ず自分の区間に含まれる
    """
    if depth > sys.p_max:
        raise DepthError(f"深さ {depth} は p_max={sys.p_max} を超えています")
    table = sys.tables[n]
    lefts = [0]
    for p in range(depth):
        step = table.step_numerators[p]
        lefts = [v for left in lefts for v in (left, left + step)]
    length = table.lengths[depth]
    lo = np.array([float(Fraction(v, table.denominator)) for v in lefts])
    hi = np.array([float(Fraction(v, table.denominator) + length) for v in lefts])
    return lo, hi


def member_mask(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """値が区間の和集合に含まれるか"""
    idx = np.searchsorted(lo, values, side="right") - 1
    safe = np.clip(idx, 0, len(lo) - 1)
    return (idx >= 0) & (values <= hi[safe])


def shift_fit(sys: CantorSystem, mu: DiscreteMeasure, shift_grid_depth: int, workers: int = 1) -> ShiftResult:
    """
    座標ごとに j/2^depth のシフト候補を調べ、生き残った原子の質量を最大化する
    探索は座標ごとの貪欲法で、前の座標の選択を固定して次の座標を選ぶ
    （全座標の組み合わせに対する真の最大値は保証しない）
    同点は最小シフト、最後にゼロシフトと比較する
    """
    depth = shift_grid_depth
    if depth > sys.p_max:
        raise DepthError(f"シフト格子の深さ {depth} は p_max={sys.p_max} を超えています")
    if mu.K != sys.K:
        raise ShapeError(f"測度の座標数 {mu.K} が K={sys.K} と一致しません")

    block_of = sys.schedule.block_of
    intervals = {n: level_intervals(sys, n, depth) for n in sys.tables}
    candidates = np.ldexp(np.arange(2 ** depth, dtype=float), -depth)
    chunks = [np.asarray(ch) for ch in batched(range(2 ** depth), SHIFT_CHUNK_SIZE)]
    logger.info(f"シフト探索開始: 原子 {len(mu.points)}, K={sys.K}, 候補 {2 ** depth}/座標")

    zero_mask = np.ones(len(mu.points), dtype=bool)
    for k in range(sys.K):
        lo, hi = intervals[int(block_of[k])]
        zero_mask &= member_mask(mu.points[:, k], lo, hi)
    zero_mass = float(mu.weights[zero_mask].sum())

    alive = np.ones(len(mu.points), dtype=bool)
    steps = [0] * sys.K
    for k in tqdm(range(sys.K), desc="シフト探索", disable=None):
        lo, hi = intervals[int(block_of[k])]
        y = mu.points[alive, k]
        w = mu.weights[alive]
        if not len(y):
            break

        def masses(js):
            vals = np.mod(y[None, :] + candidates[js][:, None], 1.0)
            return (member_mask(vals, lo, hi) * w[None, :]).sum(axis=1)

        totals = np.concatenate(parallel_map(masses, chunks, workers))
        best = int(np.argmax(totals))
        steps[k] = best
        inside = member_mask(np.mod(y + candidates[best], 1.0), lo, hi)
        alive[np.flatnonzero(alive)[~inside]] = False
        logger.debug(f"座標 {k}: シフト {best}/{2 ** depth}, 生存原子 {int(alive.sum())}")

    greedy_mass = float(mu.weights[alive].sum())
    if zero_mass >= greedy_mass:
        steps, alive, greedy_mass = [0] * sys.K, zero_mask, zero_mass

    result = ShiftResult(
        shift=[Fraction(j, 2 ** depth) for j in steps],
        grid_depth=depth,
        captured=greedy_mass,
        total=mu.total,
        captured_mask=alive,
    )
    logger.info(f"シフト探索完了: 捕捉率 {result.captured_fraction:.4f} ({int(alive.sum())} 原子)")
    return result


def apply_shift(points: np.ndarray, result: ShiftResult) -> np.ndarray:
    """x ↦ x + shift (mod 1)"""
    out = np.mod(np.asarray(points, dtype=float) + result.shift_float[None, :], 1.0)
    out[out >= 1.0] = 0.0
    return out
