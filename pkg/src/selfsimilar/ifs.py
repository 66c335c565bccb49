"""
Similarity dimension, attractor sampling and open-set checks for iterated function systems
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from src.errors import BudgetError
from src.selfsimilar.models import IFS, AttractorSample, Box, Similarity
from src.utils import make_rng, parallel_map
from config.settings import MAX_ATTRACTOR_POINTS, MORAN_XTOL, SIMILARITY_TOLERANCE

logger = logging.getLogger(__name__)


def moran_dimension(ifs: IFS) -> float:
    """Σ c_i^s = 1 の唯一の根を二分法で求める"""
    ratios = ifs.ratios

    def residual(s: float) -> float:
        return float(np.sum(ratios ** s) - 1.0)

    hi = 2.0 * ifs.dim
    while residual(hi) > 0:
        hi *= 2.0
    s = optimize.bisect(residual, 0.0, hi, xtol=MORAN_XTOL)
    logger.debug(f"相似次元: s={s:.12f}, 残差 {residual(s):.3g}")
    return float(s)


def fixed_point(f: Similarity) -> np.ndarray:
    """x = c·Ox + t の解"""
    return np.linalg.solve(np.eye(f.dim) - f.ratio * f.orth, f.translate)


def attractor_points(ifs: IFS, depth: int, workers: int = 1) -> AttractorSample:
    """長さ depth の全ワードを写像0の不動点に適用（ワードの辞書式順）"""
    if depth < 0:
        raise BudgetError(f"深さは非負である必要があります: {depth}")
    count = len(ifs.maps) ** depth
    if count > MAX_ATTRACTOR_POINTS:
        raise BudgetError(
            f"点数 {len(ifs.maps)}^{depth} = {count} が上限 {MAX_ATTRACTOR_POINTS} を超えています", witness=count
        )
    points = fixed_point(ifs.maps[0]).reshape(1, -1)
    labels = np.zeros((1, 0), dtype=np.int64)
    for _ in range(depth):
        images = parallel_map(lambda f: f.apply(points), list(ifs.maps), workers)
        n = len(points)
        labels = np.concatenate(
            [np.concatenate([np.full((n, 1), i, dtype=np.int64), labels], axis=1) for i in range(len(ifs.maps))]
        )
        points = np.concatenate(images)
    logger.info(f"アトラクタ標本: 深さ {depth}, {len(points)} 点")
    return AttractorSample(depth=depth, points=points, labels=labels)


def chaos_game(ifs: IFS, count: int, seed: Optional[int] = None) -> np.ndarray:
    """
    自然測度（重み c_i^s）に従うランダム反復で count 点を生成
    各点は不動点から独立に十分な回数だけ写像を適用する
    """
    rng = make_rng(seed)
    s = moran_dimension(ifs)
    probs = ifs.ratios ** s
    probs = probs / probs.sum()
    steps = max(1, math.ceil(math.log(1e-16) / math.log(float(ifs.ratios.max()))))
    points = np.repeat(fixed_point(ifs.maps[0]).reshape(1, -1), count, axis=0)
    for _ in range(steps):
        choice = rng.choice(len(ifs.maps), size=count, p=probs)
        for i, f in enumerate(ifs.maps):
            sel = choice == i
            if sel.any():
                points[sel] = f.apply(points[sel])
    return points


def _image_box_exact(f: Similarity, box: Box) -> Tuple[List[Fraction], List[Fraction]]:
    c = f.ratio_exact if f.ratio_exact is not None else Fraction(f.ratio)
    t = f.translate_exact if f.translate_exact is not None else [Fraction(v) for v in f.translate]
    lo = [Fraction(v) for v in box.lo]
    hi = [Fraction(v) for v in box.hi]
    out_lo, out_hi = [], []
    for i, v in enumerate(f.perm):
        j = abs(v) - 1
        if v > 0:
            out_lo.append(c * lo[j] + t[i])
            out_hi.append(c * hi[j] + t[i])
        else:
            out_lo.append(-c * hi[j] + t[i])
            out_hi.append(-c * lo[j] + t[i])
    return out_lo, out_hi


def _image_box_bounding(f: Similarity, box: Box) -> Tuple[np.ndarray, np.ndarray, bool]:
    corners = np.array(list(itertools.product(*zip(box.lo, box.hi))), dtype=float)
    images = f.apply(corners)
    lo, hi = np.asarray(box.lo, dtype=float), np.asarray(box.hi, dtype=float)
    contained = bool(np.all(images >= lo) and np.all(images <= hi))
    return images.min(axis=0), images.max(axis=0), contained


def _interiors_disjoint(a_lo, a_hi, b_lo, b_hi) -> bool:
    return any(max(al, bl) >= min(ah, bh) for al, ah, bl, bh in zip(a_lo, a_hi, b_lo, b_hi))


def osc_check(ifs: IFS, box: Optional[Box] = None) -> Dict:
    """
    f_i(box) ⊆ box と f_i(box) の内部の互いの素を確認
    軸置換の系は有理数演算で厳密、それ以外は外接箱による保守的判定（disjoint は None になり得る）
    """
    box = box or ifs.open_set
    if box is None:
        raise BudgetError("開集合の箱が指定されていません")
    exact = ifs.axis_permutation
    boxes, contained = [], True
    for f in ifs.maps:
        if exact:
            lo, hi = _image_box_exact(f, box)
            inside = all(Fraction(a) <= l for a, l in zip(box.lo, lo)) and all(h <= Fraction(b) for b, h in zip(box.hi, hi))
        else:
            lo, hi, inside = _image_box_bounding(f, box)
        boxes.append((lo, hi))
        contained = contained and inside

    disjoint: Optional[bool] = True
    witness = None
    for (i, (alo, ahi)), (j, (blo, bhi)) in itertools.combinations(enumerate(boxes), 2):
        if not _interiors_disjoint(alo, ahi, blo, bhi):
            disjoint = False if exact else None
            witness = (i, j)
            break
    report = {"mode": "exact" if exact else "bounding_box", "contained": contained, "disjoint": disjoint, "witness": witness}
    logger.info(f"開集合条件の判定: {report}")
    return report


def similarity_check(f: Similarity, samples: int = 1000, seed: Optional[int] = None) -> Tuple[bool, float]:
    """ランダムな点対で |f(x)−f(y)| = c|x−y| を相対誤差で確認"""
    rng = make_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(samples, f.dim))
    y = rng.uniform(-1.0, 1.0, size=(samples, f.dim))
    lhs = np.linalg.norm(f.apply(x) - f.apply(y), axis=1)
    rhs = f.ratio * np.linalg.norm(x - y, axis=1)
    err = float(np.max(np.abs(lhs - rhs) / rhs))
    return err <= SIMILARITY_TOLERANCE, err
