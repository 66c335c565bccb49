"""
Circle, torus and code-space metrics, triangle validation and ultrametric trees
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.cluster import hierarchy
from scipy.spatial.distance import squareform

from src.errors import DomainError, ShapeError, ValidationRejected
from src.metric.models import (
    CodePoint, PointCloud, SlowSchedule, TorusPoint, TreeNode, UltrametricTree
)
from src.utils import make_rng
from config.settings import EXHAUSTIVE_TRIPLE_LIMIT, SAMPLED_TRIPLES

logger = logging.getLogger(__name__)


def circle_dist(x: float, y: float) -> float:
    """円周 [0,1) 上の距離 min(|x−y|, 1−|x−y|)"""
    for v in (x, y):
        if not (0.0 <= v < 1.0):
            raise DomainError(f"円周座標は [0,1) の範囲外です: {v}")
    z = abs(x - y)
    return min(z, 1.0 - z)


def circle_dist_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return np.minimum(z, 1.0 - z)


def torus_shift(point: TorusPoint, shift: TorusPoint) -> TorusPoint:
    """座標ごとの mod 1 加算 a ⊕ c"""
    if point.K != shift.K:
        raise ShapeError(f"座標数が一致しません: {point.K} != {shift.K}")
    return TorusPoint(point.coords + shift.coords)


def torus_dist(a: TorusPoint, b: TorusPoint, sched: SlowSchedule) -> float:
    """d_G(a,b) = max_k r_k ‖a_k − b_k‖"""
    if a.K != sched.K or b.K != sched.K:
        raise ShapeError(f"トーラス点の座標数がスケジュールの K={sched.K} と一致しません: {a.K}, {b.K}")
    return float(np.max(sched.weights * circle_dist_array(a.coords, b.coords)))


def torus_dist_many(left: np.ndarray, right: np.ndarray, sched: SlowSchedule) -> np.ndarray:
    """行ごとの d_G（left, right は (M, K) 配列）"""
    return np.max(sched.weights * circle_dist_array(left, right), axis=-1)


def code_divergence(left_bits: np.ndarray, right_bits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    座標ごとの共通接頭辞長と不一致フラグ
    left_bits, right_bits: (..., K, depth)
    """
    mismatch = left_bits != right_bits
    differs = mismatch.any(axis=-1)
    if mismatch.shape[-1] == 0:
        # 深さ0のコードは常に一致
        return np.zeros(differs.shape, dtype=np.int64), differs
    prefix = np.argmax(mismatch, axis=-1)
    return prefix, differs


def code_dist_many(left_bits: np.ndarray, right_bits: np.ndarray, sched: SlowSchedule) -> np.ndarray:
    prefix, differs = code_divergence(left_bits, right_bits)
    terms = np.where(differs, np.ldexp(sched.weights, -prefix), 0.0)
    return terms.max(axis=-1)


def code_dist(a: CodePoint, b: CodePoint, sched: SlowSchedule) -> float:
    """ρ_G(a,b) = max_k r_k 2^{-|a_k ∧ b_k|}"""
    if a.K != sched.K or b.K != sched.K:
        raise ShapeError(f"コード点の座標数がスケジュールの K={sched.K} と一致しません: {a.K}, {b.K}")
    if a.depth != b.depth:
        raise ShapeError(f"コードの深さが一致しません: {a.depth} != {b.depth}")
    return float(code_dist_many(a.bits, b.bits, sched))


@dataclass
class MetricReport:
    """三角不等式／超距離不等式の検証結果"""
    mode: str
    ok: bool
    slack: float
    worst_triple: Optional[Tuple[int, int, int]]
    sampled: bool
    triples_checked: int

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "ok": self.ok,
            "slack": self.slack,
            "worst_triple": list(self.worst_triple) if self.worst_triple else None,
            "sampled": self.sampled,
            "triples_checked": self.triples_checked,
        }


def _violation(d_ik, d_ij, d_jk, mode: str):
    if mode == "ultra":
        return d_ik - np.maximum(d_ij, d_jk)
    return d_ik - (d_ij + d_jk)


def validate_metric(cloud: PointCloud, mode: str = "triangle", seed: Optional[int] = None) -> MetricReport:
    """
    全三つ組（大規模時はサンプル）で d(i,k) ≤ d(i,j)+d(j,k) または ≤ max を検証
    slack > 0 が違反、worst_triple は (i, j, k)
    """
    if mode not in ("triangle", "ultra"):
        raise DomainError(f"未知の検証モード: {mode}")
    n = cloud.size
    if n == 0:
        return MetricReport(mode, True, 0.0, None, False, 0)

    if n <= EXHAUSTIVE_TRIPLE_LIMIT:
        D = cloud.distances
        best, best_triple = -np.inf, None
        for j in range(n):
            V = _violation(D, D[:, j][:, None], D[j, :][None, :], mode)
            flat = int(np.argmax(V))
            value = V.flat[flat]
            if value > best:
                best = float(value)
                best_triple = (flat // n, j, flat % n)
        sampled, checked = False, n ** 3
    else:
        rng = make_rng(seed)
        triples = rng.integers(0, n, size=(SAMPLED_TRIPLES, 3))
        i, j, k = triples[:, 0], triples[:, 1], triples[:, 2]
        V = _violation(cloud.pair_distances(i, k), cloud.pair_distances(i, j), cloud.pair_distances(j, k), mode)
        flat = int(np.argmax(V))
        best = float(V[flat])
        best_triple = tuple(int(v) for v in triples[flat])
        sampled, checked = True, SAMPLED_TRIPLES
        logger.debug(f"三つ組検証をサンプリングで実施: {checked} 組 / 点数 {n}")

    ok = best <= 0.0
    if not ok:
        logger.debug(f"{mode} 不等式の違反: triple={best_triple}, slack={best}")
    return MetricReport(mode, ok, best, None if ok else best_triple, sampled, checked)


def ultrametric_to_tree(cloud: PointCloud) -> UltrametricTree:
    """超距離点群から球の木を構築（単連結法の併合を同じ高さごとにまとめ、子は最小インデックス順）"""
    report = validate_metric(cloud, "ultra")
    if not report.ok:
        raise ValidationRejected(
            f"超距離不等式を満たしません: triple={report.worst_triple}, slack={report.slack}",
            witness=report.worst_triple,
        )
    n = cloud.size
    if n == 0:
        raise ValidationRejected("空の点群から木は作れません")
    if n == 1:
        return UltrametricTree(root=0, size=1)

    D = cloud.distances
    duplicates = np.argwhere(np.triu(D == 0.0, k=1))
    if len(duplicates):
        pair = tuple(int(v) for v in duplicates[0])
        raise ValidationRejected(f"距離0の重複点があります: {pair}", witness=pair)

    Z = hierarchy.linkage(squareform(D, checks=False), method="single")
    return UltrametricTree(root=_collapse_merges(hierarchy.to_tree(Z)), size=n)


def _collapse_merges(cluster: hierarchy.ClusterNode) -> TreeNode:
    """同じ高さで連続する二分併合を1つの多分岐ノードにまとめる"""
    root = TreeNode(diameter=float(cluster.dist))
    stack: List[Tuple[TreeNode, hierarchy.ClusterNode]] = [(root, cluster)]
    while stack:
        node, current = stack.pop()
        children = []
        frontier = [current.get_left(), current.get_right()]
        while frontier:
            sub = frontier.pop()
            if not sub.is_leaf() and sub.dist == current.dist:
                frontier.extend((sub.get_left(), sub.get_right()))
            else:
                children.append(sub)
        for sub in sorted(children, key=lambda c: min(c.pre_order())):
            if sub.is_leaf():
                node.children.append(int(sub.id))
            else:
                child = TreeNode(diameter=float(sub.dist))
                node.children.append(child)
                stack.append((child, sub))
    return root


def tree_leaf_distances(tree: UltrametricTree) -> PointCloud:
    """木の最小共通祖先の直径から距離行列を再構成"""
    D = np.zeros((tree.size, tree.size))
    for node in tree.nodes():
        groups = [child.leaves() if isinstance(child, TreeNode) else [child] for child in node.children]
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                D[np.ix_(groups[a], groups[b])] = node.diameter
                D[np.ix_(groups[b], groups[a])] = node.diameter
    return PointCloud.from_matrix(D)
