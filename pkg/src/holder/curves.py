"""
Space-filling surjections onto cubes: Hilbert curves and digit interleaving
"""
import logging
import math
from typing import Dict, Optional

import numpy as np

from src.errors import DepthError, DomainError
from src.holder.modulus import ModulusFit, modulus_fit
from src.utils import make_rng
from config.settings import CURVE_MODULUS_SKIP, CURVE_MODULUS_TOP, HILBERT_MAX_ORDER

logger = logging.getLogger(__name__)


def _check_order(m: int, p: int):
    if m < 1:
        raise DomainError(f"次元 m は 1 以上が必要です: {m}")
    if not 1 <= p <= HILBERT_MAX_ORDER:
        raise DepthError(f"次数 p は 1..{HILBERT_MAX_ORDER} である必要があります: {p}")
    if m * p > 62:
        raise DepthError(f"m·p = {m * p} が 62 を超えています")


def hilbert_index_to_axes(index: np.ndarray, m: int, p: int) -> np.ndarray:
    """
    ヒルベルト指数から格子座標 (N, m) を計算（Skilling の転置形式）
    """
    index = np.asarray(index, dtype=np.int64)
    X = np.zeros((len(index), m), dtype=np.int64)
    # 指数のビットを転置形式に配る（上位ビットから X[0], X[1], ...）
    for level in range(p):
        for i in range(m):
            pos = level * m + (m - 1 - i)
            X[:, i] |= ((index >> pos) & 1) << level

    # Gray 復号
    t = X[:, m - 1] >> 1
    for i in range(m - 1, 0, -1):
        X[:, i] ^= X[:, i - 1]
    X[:, 0] ^= t

    # 余分な変換を戻す
    Q = 2
    top = 1 << p
    while Q != top:
        P = Q - 1
        for i in range(m - 1, -1, -1):
            flip = (X[:, i] & Q) != 0
            X[flip, 0] ^= P
            swap = ~flip
            t = (X[swap, 0] ^ X[swap, i]) & P
            X[swap, 0] ^= t
            X[swap, i] ^= t
        Q <<= 1
    return X


def hilbert_lattice(m: int, p: int) -> np.ndarray:
    """次数 p の全格子点を曲線順に並べたもの（整数座標）"""
    _check_order(m, p)
    return hilbert_index_to_axes(np.arange(1 << (m * p), dtype=np.int64), m, p)


def hilbert_curve(m: int, p: int, t) -> np.ndarray:
    """
    次数 p の m 次元ヒルベルト曲線を t ∈ [0,1] で評価
    格子点（セルの角）を 2^{-p} 倍し、連続する指数の間は線形補間
    """
    _check_order(m, p)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise DomainError("t は [0,1] の範囲である必要があります")
    last = (1 << (m * p)) - 1
    u = t * last
    i0 = np.minimum(np.floor(u).astype(np.int64), max(last - 1, 0))
    frac = (u - i0)[:, None]
    a = hilbert_index_to_axes(i0, m, p).astype(float)
    b = hilbert_index_to_axes(np.minimum(i0 + 1, last), m, p).astype(float)
    out = np.ldexp((1.0 - frac) * a + frac * b, -p)
    return out[0] if scalar else out


def curve_modulus_pairs(m: int, p: int, count: int, seed: Optional[int] = None) -> np.ndarray:
    """
    |t−s| を対数一様に取った (|t−s|, |H(t)−H(s)|) の組
    下端は線形補間の領域を避けて格子の数ステップ分から
    """
    rng = make_rng(seed)
    hi = CURVE_MODULUS_TOP
    lo = math.ldexp(1.0, -m * (p - CURVE_MODULUS_SKIP))
    if lo >= hi:
        lo = math.ldexp(1.0, -m * p - 2)
    dt = np.exp(rng.uniform(np.log(lo), np.log(hi), size=count))
    t = rng.uniform(0.0, 1.0 - dt)
    a = hilbert_curve(m, p, t)
    b = hilbert_curve(m, p, np.minimum(t + dt, 1.0))
    dy = np.sqrt(np.sum((a - b) ** 2, axis=-1))
    return np.column_stack([dt, dy])


def hilbert_modulus(m: int, p: int, count: int = 10_000, seed: Optional[int] = None) -> ModulusFit:
    return modulus_fit(curve_modulus_pairs(m, p, count, seed))


def _digits(x: np.ndarray, p: int) -> np.ndarray:
    """[0,1] の各座標の先頭 p 桁の2進数字 (N, n, p)（x = 1 は全桁1）"""
    scaled = np.minimum(np.floor(np.ldexp(x, p)).astype(np.int64), (1 << p) - 1)
    shifts = np.arange(p - 1, -1, -1)
    return (scaled[..., None] >> shifts) & 1


def interleave_map(x, m: int, p: int) -> np.ndarray:
    """
    n 座標の先頭 p 桁を桁ごとに順番に並べ、その列を m 個の出力座標へ順番に配る
    2進有理数の格子境界では不連続
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n = x.shape[1]
    if n > m:
        raise DomainError(f"入力次元 n={n} が出力次元 m={m} を超えています")
    if p < 1 or n * p > 52:
        raise DepthError(f"精度 p は 1 ≤ p ≤ 52/n である必要があります: p={p}, n={n}")
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("入力は [0,1]^n の範囲である必要があります")

    digits = _digits(x, p)
    # 桁レベル b、座標 c の順で並べた数字列
    stream = digits.transpose(0, 2, 1).reshape(len(x), n * p)
    out = np.zeros((len(x), m))
    for s in range(n * p):
        o, level = s % m, s // m
        out[:, o] += np.ldexp(stream[:, s].astype(float), -(level + 1))
    return out[0] if single else out


def grid_cells_hit(points: np.ndarray, level: int) -> int:
    """辺 2^{-level} の格子セルのうち点が入る数（x = 1 は最後のセル）"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cells = np.minimum(np.floor(np.ldexp(pts, level)).astype(np.int64), (1 << level) - 1)
    return len(np.unique(cells, axis=0))


def interleave_surjectivity(n: int, m: int, p: int) -> Dict:
    """深さ p の全2進格子点の像が 2^{⌊np/m⌋} 分解能の全セルに入るか"""
    if n * p > 24:
        raise DepthError(f"全列挙には n·p ≤ 24 が必要です: {n * p}")
    axes = np.meshgrid(*[np.arange(1 << p)] * n, indexing="ij")
    inputs = np.ldexp(np.stack([a.ravel() for a in axes], axis=1).astype(float), -p)
    image = interleave_map(inputs, m, p)
    level = (n * p) // m
    hit = grid_cells_hit(image, level)
    return {"resolution": level, "cells_hit": hit, "cells_total": 1 << (level * m), "surjective": hit == 1 << (level * m)}


def interleave_modulus_report(n: int, m: int, p: int, count: int = 10_000, seed: Optional[int] = None) -> Dict:
    """
    同じ深さ q の2進セル内の点対について ‖Δout‖_∞ ≤ 2·(2^{-q})^{n/m} を検証
    （セル境界をまたぐ点対は対象外）
    """
    rng = make_rng(seed)
    q = rng.integers(1, p, size=count)
    cell = rng.integers(0, 1 << 30, size=(count, n)) % (1 << q)[:, None]
    base = np.ldexp(cell.astype(float), -q[:, None])
    width = np.ldexp(1.0, -q)[:, None]
    x = base + rng.uniform(0, 1, size=(count, n)) * width
    y = base + rng.uniform(0, 1, size=(count, n)) * width
    dout = np.abs(interleave_map(x, m, p) - interleave_map(y, m, p)).max(axis=1)
    bound = 2.0 * np.ldexp(1.0, -q) ** (n / m)
    ok = dout <= bound
    report = {
        "pairs": int(count),
        "violations": int((~ok).sum()),
        "ok": bool(ok.all()),
        "max_ratio": float((dout / bound).max()),
    }
    logger.info(f"インターリーブ写像のモジュラス検証: {report}")
    return report
