"""
Empirical Holder-modulus fitting by log-log upper envelope
"""
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.errors import DomainError, ValidationRejected
from config.settings import MIN_MODULUS_PAIRS, MODULUS_BINS

logger = logging.getLogger(__name__)


@dataclass
class ModulusFit:
    """d_Y ≤ C d_X^β̂ を全点対で満たす上側包絡線"""
    pairs_used: int
    beta_hat: float
    log_c: float
    max_residual: float
    bins: int

    @property
    def constant(self) -> float:
        return float(np.exp(self.log_c))

    def to_dict(self) -> Dict:
        return {
            "pairs_used": self.pairs_used,
            "beta_hat": self.beta_hat,
            "log_c": self.log_c,
            "constant": self.constant,
            "max_residual": self.max_residual,
            "bins": self.bins,
        }


def modulus_fit(pairs, bins: int = MODULUS_BINS) -> ModulusFit:
    """
    log d_X のビンごとの最大 log d_Y に最小二乗直線を当て、
    切片を全点対の最大残差まで持ち上げる
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"点対は (d_X, d_Y) の2列である必要があります: shape={arr.shape}")
    if len(arr) < MIN_MODULUS_PAIRS:
        raise ValidationRejected(f"点対が {MIN_MODULUS_PAIRS} 組未満です: {len(arr)}")
    dx, dy = arr[:, 0], arr[:, 1]
    if np.any(dx < 0) or np.any(dy < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("距離は非負の有限値である必要があります")
    bad = np.flatnonzero((dx == 0) & (dy > 0))
    if len(bad):
        t = int(bad[0])
        raise ValidationRejected(
            f"d_X = 0 で d_Y > 0 の点対があります（写像になっていません）: index {t}", witness=t
        )

    keep = (dx > 0) & (dy > 0)
    x, y = np.log(dx[keep]), np.log(dy[keep])
    if len(x) < 2 or x.max() == x.min():
        raise ValidationRejected("包絡線の当てはめには2種類以上の d_X が必要です")

    edges = np.linspace(x.min(), x.max(), bins + 1)
    which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    env_x, env_y = [], []
    for b in range(bins):
        members = np.flatnonzero(which == b)
        if len(members):
            top = members[np.argmax(y[members])]
            env_x.append(x[top])
            env_y.append(y[top])
    env_x, env_y = np.asarray(env_x), np.asarray(env_y)
    if len(env_x) < 2 or env_x.max() == env_x.min():
        raise ValidationRejected("包絡線のビンが2つ未満です")

    slope, _ = np.polyfit(env_x, env_y, 1)
    log_c = float(np.max(y - slope * x))
    residual = float(np.max(y - (slope * x + log_c)))
    fit = ModulusFit(int(keep.sum()), float(slope), log_c, residual, len(env_x))
    logger.debug(f"モジュラス当てはめ: β̂={fit.beta_hat:.4f}, C={fit.constant:.4g}, 点対 {fit.pairs_used}")
    return fit
