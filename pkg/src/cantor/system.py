"""
Construction of Cantor systems with exact rational endpoints, the coding map,
measure accounting and two-sided modulus verification
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

try:
    from itertools import batched
except ImportError:
    from more_itertools import batched

from src.cantor.models import BlockTable, CantorSystem, CodePairs, DiscreteMeasure, Interval, a_seq
from src.errors import DepthError, DomainError, ShapeError, SpecParseError, ValidationRejected
from src.metric.core import code_divergence, torus_dist_many
from src.metric.models import CodePoint, SlowSchedule, TorusPoint
from src.utils import make_rng, parallel_map
from config.settings import DEFAULT_P_MAX

logger = logging.getLogger(__name__)

PI2_OVER_12 = math.pi ** 2 / 12
VERIFY_CHUNK = 2000


def parse_epsilon(value: Union[str, int, Fraction]) -> Fraction:
    """ε を厳密な有理数として解釈（"p/q" または有限小数文字列）"""
    if isinstance(value, bool) or isinstance(value, float):
        raise SpecParseError(f"ε は有理数表記で指定してください（浮動小数は不可）: {value!r}")
    try:
        eps = Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SpecParseError(f"ε を解析できません: '{value}'")
    if not 0 < eps < 1:
        raise DomainError(f"ε は (0,1) の範囲である必要があります: {eps}")
    return eps


def build_system(epsilon: Union[str, int, Fraction], sched: SlowSchedule, p_max: int = DEFAULT_P_MAX) -> CantorSystem:
    """
    len_0 = 1 − b_k, len_{p+1} = (len_p − 2^{-p} a_p b_k)/2 を厳密に計算
    b_k = ε/(4(n+1)² G(n))
    """
    eps = parse_epsilon(epsilon)
    if p_max < 0:
        raise DepthError(f"p_max は非負である必要があります: {p_max}")

    tables: Dict[int, BlockTable] = {}
    for n, g in enumerate(sched.counts):
        if g == 0:
            continue
        b = eps / (4 * (n + 1) ** 2 * g)
        lengths, gaps, steps = [1 - b], [], []
        for p in range(p_max):
            gap = a_seq(p) * b / 2 ** p
            nxt = (lengths[-1] - gap) / 2
            assert nxt > 0, f"区間長が正ではありません: n={n}, p={p + 1}"
            lengths.append(nxt)
            gaps.append(gap)
            steps.append(nxt + gap)
        denominator = math.lcm(*(s.denominator for s in steps)) if steps else 1
        numerators = tuple(s.numerator * (denominator // s.denominator) for s in steps)
        tables[n] = BlockTable(n, b, tuple(lengths), tuple(gaps), tuple(steps), numerators, denominator)

    sum_b = sum((tables[n].b * g for n, g in enumerate(sched.counts) if g), Fraction(0))
    if not (sum_b < eps / 2):
        raise ValidationRejected(f"Σb_k < ε/2 を満たしません: Σb={float(sum_b)}")
    logger.info(f"Cantor系構築: ε={eps}, K={sched.K}, p_max={p_max}, Σb={float(sum_b):.6g}")
    return CantorSystem(eps, sched, p_max, tables)


def _check_depth(sys: CantorSystem, depth: int):
    if depth > sys.p_max:
        raise DepthError(f"深さ {depth} は p_max={sys.p_max} を超えています")


def interval(sys: CantorSystem, k: int, s: str) -> Interval:
    """J_s の厳密な端点"""
    _check_depth(sys, len(s))
    if any(ch not in "01" for ch in s):
        raise DomainError(f"2進文字列ではありません: '{s}'")
    table = sys.table_of(k)
    lo = sum((table.steps[p] for p, ch in enumerate(s) if ch == "1"), Fraction(0))
    return Interval(lo, lo + table.lengths[len(s)])


def encode_exact(sys: CantorSystem, code: CodePoint) -> List[Fraction]:
    """各座標で J_{code_k} の左端点（厳密値）"""
    if code.K != sys.K:
        raise ShapeError(f"コードの座標数 {code.K} が K={sys.K} と一致しません")
    _check_depth(sys, code.depth)
    out = []
    for k, bits in enumerate(code.codes):
        table = sys.table_of(k)
        num = sum(table.step_numerators[p] for p, ch in enumerate(bits) if ch == "1")
        out.append(Fraction(num, table.denominator))
    return out


def encode(sys: CantorSystem, code: CodePoint) -> TorusPoint:
    """コード点 x ↦ x̂（厳密値を正しく丸めた浮動小数）"""
    return TorusPoint(np.array([float(v) for v in encode_exact(sys, code)]))


def encode_many(sys: CantorSystem, bits: np.ndarray) -> np.ndarray:
    """ビット配列 (M, K, depth) の一括符号化（浮動小数の和）"""
    bits = np.asarray(bits)
    if bits.ndim != 3 or bits.shape[1] != sys.K:
        raise ShapeError(f"ビット配列の形状が不正です: {bits.shape} (K={sys.K})")
    depth = bits.shape[2]
    _check_depth(sys, depth)
    return (bits * sys.step_matrix[None, :, :depth]).sum(axis=-1)


def decode(sys: CantorSystem, points: np.ndarray, depth: int) -> np.ndarray:
    """各座標で最も近い区間を辿り、深さ depth のビット配列 (M, K, depth) を返す"""
    _check_depth(sys, depth)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != sys.K:
        raise ShapeError(f"点の形状が不正です: {pts.shape} (K={sys.K})")
    lo = np.zeros_like(pts)
    bits = np.zeros(pts.shape + (depth,), dtype=np.uint8)
    for p in range(depth):
        mid = lo + sys.length_matrix[:, p + 1] + sys.gap_matrix[:, p] / 2
        right = pts >= mid
        bits[:, :, p] = right
        lo = lo + np.where(right, sys.step_matrix[:, p], 0.0)
    return bits


@dataclass
class MeasureReport:
    """Cantor系の測度の厳密な収支"""
    per_block: List[Dict] = field(default_factory=list)
    sum_b: Fraction = Fraction(0)
    sum_b_closed_form: float = 0.0
    product: float = 0.0
    product_lower: float = 0.0
    product_ok: bool = True
    sum_bound_ok: bool = True
    omitted_exact_ok: bool = True
    gap_ok: bool = True
    tiling_ok: bool = True
    delta_trunc: float = 0.0

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def measure_account(sys: CantorSystem) -> MeasureReport:
    """打ち切り深さでの除外質量 b_k(1+Σ_{p<p_max} a_p) と積の下界を検証"""
    report = MeasureReport()
    P = sys.p_max
    sum_a_trunc = sum((a_seq(p) for p in range(P)), Fraction(0))
    log_product = 0.0

    for n, g in enumerate(sys.schedule.counts):
        if not g:
            continue
        t = sys.tables[n]
        omitted = 1 - 2 ** P * t.lengths[P]
        expected = t.b * (1 + sum_a_trunc)
        exact_ok = omitted == expected
        # 各レベルの隙間 ≤ b_k、総隙間 = a_p b_k、親 = 左子 ∪ 隙間 ∪ 右子
        gap_ok = all(gap <= t.b for gap in t.gaps)
        level_ok = all(2 ** p * t.gaps[p] == a_seq(p) * t.b for p in range(P))
        tiling_ok = all(2 * t.lengths[p + 1] + t.gaps[p] == t.lengths[p] for p in range(P))
        telescoping, partial = True, Fraction(0)
        for p in range(P + 1):
            telescoping &= 2 ** p * t.lengths[p] + t.b * (1 + partial) == 1
            if p < P:
                partial += a_seq(p)

        report.omitted_exact_ok &= exact_ok and telescoping
        report.gap_ok &= gap_ok
        report.tiling_ok &= tiling_ok and level_ok
        report.sum_b += t.b * g
        log_product += g * math.log1p(-2 * float(t.b))
        report.delta_trunc += g * float(t.b) * (PI2_OVER_12 - float(sum_a_trunc))
        report.per_block.append({
            "n": n,
            "coordinates": g,
            "b": f"{t.b.numerator}/{t.b.denominator}",
            "omitted_truncated": float(omitted),
            "omitted_full": float(t.b) * (1 + PI2_OVER_12),
            "lambda_lower_bound": 1 - 2 * float(t.b),
            "omitted_exact_ok": exact_ok,
            "gap_ok": gap_ok,
        })

    report.sum_b_closed_form = float(sys.epsilon) * math.pi ** 2 / 24
    report.product = math.exp(log_product)
    report.product_lower = 1 - 2 * float(report.sum_b)
    report.product_ok = report.product >= report.product_lower - 1e-10
    report.sum_bound_ok = 1 - 2 * report.sum_b > 1 - sys.epsilon
    logger.info(
        f"測度収支: Σb={float(report.sum_b):.6g}, ∏(1−2b)={report.product:.10f}, "
        f"omitted_exact_ok={report.omitted_exact_ok}, gap_ok={report.gap_ok}"
    )
    return report


@dataclass
class ModulusReport:
    """コード写像の両側モジュラス検証"""
    pairs: int = 0
    skipped: int = 0
    ratio_checked: int = 0
    violations: Dict[str, int] = field(default_factory=lambda: {"a": 0, "b": 0, "c": 0})
    max_ratio: Optional[float] = None
    bound_c_margin: Optional[float] = None
    envelope_ok: bool = True
    envelope_margin: Optional[float] = None
    witnesses: List[Dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return sum(self.violations.values()) == 0

    def to_dict(self) -> Dict:
        out = dict(self.__dict__)
        out["ok"] = self.ok
        return out


def _verify_chunk(sys: CantorSystem, left: np.ndarray, right: np.ndarray) -> Dict:
    sched = sys.schedule
    block_of = sched.block_of
    prefix, differs = code_divergence(left, right)
    active = differs.any(axis=1)
    left, right, prefix, differs = left[active], right[active], prefix[active], differs[active]
    out = {"skipped": int((~active).sum()), "pairs": int(active.sum())}
    if not len(left):
        return out

    exponents = np.where(differs, block_of[None, :] + prefix, np.iinfo(np.int64).max)
    k_star = np.argmin(exponents, axis=1)
    rows = np.arange(len(left))
    j = exponents[rows, k_star]
    n = block_of[k_star]
    p = prefix[rows, k_star]
    rho = np.ldexp(1.0, -j)

    dG = torus_dist_many(encode_many(sys, left), encode_many(sys, right), sched)
    a_p = 1.0 / (2.0 * (p + 1.0) ** 2)
    lower = np.ldexp(sys.b_float[k_star] * a_p, -j)
    ok_a = dG <= rho
    ok_b = dG >= lower

    counts = np.asarray(sched.counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log2(dG) / -j
        log_eps = math.log2(sys.epsilon)
        bound = (j + 2 * np.log2(p + 1) + 3 + 2 * np.log2(n + 1) + np.log2(counts[n]) - log_eps) / j
        g_tilde = sched.running_max()[np.minimum(j, sched.n_max)]
        envelope = (j + 4 * np.log2(j + 1) + 3 + np.log2(g_tilde) - log_eps) / j
    deep = j >= 1
    ok_c = ~deep | (ratio <= bound)

    out.update({
        "a": int((~ok_a).sum()),
        "b": int((~ok_b).sum()),
        "c": int((~ok_c).sum()),
        "ratio_checked": int(deep.sum()),
        "max_ratio": float(ratio[deep].max()) if deep.any() else None,
        "margin": float((bound - ratio)[deep].min()) if deep.any() else None,
        "envelope_margin": float((envelope - ratio)[deep].min()) if deep.any() else None,
        "witnesses": [
            {"k": int(k_star[t]), "n": int(n[t]), "p": int(p[t]), "j": int(j[t]),
             "torus_distance": float(dG[t]), "code_distance": float(rho[t])}
            for t in np.flatnonzero(~(ok_a & ok_b & ok_c))[:5]
        ],
    })
    return out


def verify_modulus(sys: CantorSystem, pairs: CodePairs, workers: int = 1) -> ModulusReport:
    """
    各コード対について (a) d_G ≤ ρ_G, (b) d_G ≥ 2^{-j} b_k a_p,
    (c) log d_G / log ρ_G ≤ (j + 2log(p+1) + 3 + 2log(n+1) + log G(n) − log ε)/j を検証
    """
    left, right = np.asarray(pairs.left), np.asarray(pairs.right)
    if left.shape != right.shape or left.ndim != 3 or left.shape[1] != sys.K:
        raise ShapeError(f"コード対の形状が不正です: {left.shape}, {right.shape} (K={sys.K})")
    _check_depth(sys, left.shape[2])

    chunks = [list(ch) for ch in batched(range(len(left)), VERIFY_CHUNK)]
    results = parallel_map(lambda idx: _verify_chunk(sys, left[idx], right[idx]), chunks, workers)

    report = ModulusReport()
    for res in results:
        report.pairs += res["pairs"]
        report.skipped += res["skipped"]
        if not res["pairs"]:
            continue
        report.ratio_checked += res["ratio_checked"]
        for key in ("a", "b", "c"):
            report.violations[key] += res[key]
        if res["max_ratio"] is not None:
            report.max_ratio = res["max_ratio"] if report.max_ratio is None else max(report.max_ratio, res["max_ratio"])
            report.bound_c_margin = res["margin"] if report.bound_c_margin is None else min(report.bound_c_margin, res["margin"])
            report.envelope_margin = (
                res["envelope_margin"] if report.envelope_margin is None
                else min(report.envelope_margin, res["envelope_margin"])
            )
        report.witnesses.extend(res["witnesses"])
    report.witnesses = report.witnesses[:5]
    report.envelope_ok = report.envelope_margin is None or report.envelope_margin >= 0
    logger.info(
        f"モジュラス検証: {report.pairs} 対 (skip {report.skipped}), 違反 {report.violations}, "
        f"max_ratio={report.max_ratio}"
    )
    return report


def random_code_pairs(sys: CantorSystem, count: int, depth: int, seed: Optional[int] = None) -> CodePairs:
    """
    半数は一様乱数のコード対、残りは座標 k・位置 p で初めて分岐する対
    （後者で深い j を網羅する）
    """
    _check_depth(sys, depth)
    if depth < 1:
        raise DepthError("コード対の深さは 1 以上が必要です")
    rng = make_rng(seed)
    left = rng.integers(0, 2, size=(count, sys.K, depth), dtype=np.uint8)
    right = rng.integers(0, 2, size=(count, sys.K, depth), dtype=np.uint8)
    structured = np.arange(count) >= count // 2
    ks = rng.integers(0, sys.K, size=count)
    ps = rng.integers(0, depth, size=count)
    for t in np.flatnonzero(structured):
        k, p = ks[t], ps[t]
        right[t] = left[t]
        right[t, k, p] = 1 - left[t, k, p]
        right[t, k, p + 1:] = rng.integers(0, 2, size=depth - p - 1, dtype=np.uint8)
    return CodePairs(left, right)


def haar_measure(K: int, count: int, seed: Optional[int] = None) -> DiscreteMeasure:
    """切断トーラス上の一様乱数原子（等重み）"""
    rng = make_rng(seed)
    return DiscreteMeasure.uniform(rng.random((count, K)))
