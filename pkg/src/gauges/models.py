"""
Gauge (Hausdorff function) model and spec-string parsing
"""
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.errors import DomainError, SpecParseError

GAUGE_RE = re.compile(r"^(pow|logpow|table):(.+)$")
E_INV = math.exp(-1.0)


@dataclass(frozen=True, eq=False)
class Gauge:
    """
    ゲージ h（pow(β), logpow(β,γ), table の3形式）
    scale は全体の定数倍、table は log-log 線形補間
    """
    kind: str
    beta: float = 1.0
    gamma: float = 0.0
    table_r: Optional[np.ndarray] = None
    table_h: Optional[np.ndarray] = None
    tail_beta: Optional[float] = None
    scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("pow", "logpow", "table"):
            raise SpecParseError(f"未知のゲージ形式: {self.kind}")
        if self.kind in ("pow", "logpow") and not self.beta > 0:
            raise DomainError(f"β は正である必要があります: {self.beta}")
        if not self.scale > 0:
            raise DomainError(f"スケールは正である必要があります: {self.scale}")
        if self.kind == "table":
            r = np.asarray(self.table_r, dtype=float)
            h = np.asarray(self.table_h, dtype=float)
            if r.ndim != 1 or len(r) < 2 or len(r) != len(h):
                raise SpecParseError("ゲージ表には2行以上の (r, h) が必要です")
            if np.any(r <= 0) or np.any(h <= 0) or np.any(np.diff(r) <= 0):
                raise SpecParseError("ゲージ表は r 昇順・正値である必要があります")
            if np.any(np.diff(h) < 0):
                raise SpecParseError("ゲージ表の h が非減少ではありません")
            object.__setattr__(self, "table_r", r)
            object.__setattr__(self, "table_h", h)
            if self.tail_beta is None:
                slope = math.log(h[-1] / h[-2]) / math.log(r[-1] / r[-2])
                object.__setattr__(self, "tail_beta", slope)

    @classmethod
    def power(cls, beta: float, scale: float = 1.0) -> "Gauge":
        return cls("pow", beta=float(beta), scale=float(scale), label=f"pow:{beta}")

    @classmethod
    def logpow(cls, beta: float, gamma: float) -> "Gauge":
        return cls("logpow", beta=float(beta), gamma=float(gamma), label=f"logpow:{beta},{gamma}")

    @classmethod
    def table(cls, r, h, tail_beta: Optional[float] = None, label: str = "table") -> "Gauge":
        return cls("table", table_r=np.asarray(r, dtype=float), table_h=np.asarray(h, dtype=float),
                   tail_beta=tail_beta, label=label)

    def scaled(self, factor: float) -> "Gauge":
        return replace(self, scale=self.scale * float(factor))

    @property
    def claimed_ord(self) -> Optional[float]:
        return self.beta if self.kind in ("pow", "logpow") else None

    def _logpow_core(self, r: np.ndarray) -> np.ndarray:
        return r ** self.beta * np.log(1.0 / r) ** self.gamma

    @property
    def logpow_slope(self) -> float:
        """e^{-1} での傾き（正でなければ割線の傾き）"""
        slope = math.exp(-(self.beta - 1.0)) * (self.beta - self.gamma)
        if slope > 0:
            return slope
        return math.exp(-self.beta) / E_INV

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        shape = r.shape
        r = r.ravel()
        if np.any(~np.isfinite(r)) or np.any(r < 0):
            raise DomainError("ゲージの引数は非負の有限値である必要があります")
        out = np.zeros_like(r)
        pos = r > 0
        x = r[pos]
        if self.kind == "pow":
            vals = x ** self.beta
        elif self.kind == "logpow":
            vals = np.empty_like(x)
            low = x <= E_INV
            vals[low] = self._logpow_core(x[low])
            top = math.exp(-self.beta)
            vals[~low] = top + self.logpow_slope * (x[~low] - E_INV)
        else:
            vals = np.exp(self._table_log(np.log(x)))
        out[pos] = self.scale * vals
        return out.reshape(shape)

    def _table_log(self, log_r: np.ndarray) -> np.ndarray:
        lr, lh = np.log(self.table_r), np.log(self.table_h)
        out = np.interp(log_r, lr, lh)
        below = log_r < lr[0]
        first_slope = (lh[1] - lh[0]) / (lr[1] - lr[0])
        out[below] = lh[0] + first_slope * (log_r[below] - lr[0])
        above = log_r > lr[-1]
        out[above] = lh[-1] + self.tail_beta * (log_r[above] - lr[-1])
        return out

    def log_ratio(self, r: np.ndarray) -> np.ndarray:
        """log h(r) / log r（pow はスケール1で厳密に β）"""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        log_r = np.log(r)
        if self.kind == "pow":
            return self.beta + math.log(self.scale) / log_r
        if self.kind == "logpow":
            core = self.beta * log_r + self.gamma * np.log(np.log(1.0 / r))
            return (core + math.log(self.scale)) / log_r
        return (self._table_log(log_r) + math.log(self.scale)) / log_r

    def describe(self) -> dict:
        out = {"kind": self.kind, "label": self.label, "scale": self.scale}
        if self.kind in ("pow", "logpow"):
            out["beta"] = self.beta
        if self.kind == "logpow":
            out["gamma"] = self.gamma
        if self.kind == "table":
            out["grid_points"] = len(self.table_r)
            out["tail_beta"] = self.tail_beta
        return out


def evaluate(h: Gauge, r):
    """h(r) を評価（スカラーならスカラーを返す）"""
    out = h(r)
    return float(out) if np.ndim(out) == 0 else out


def parse_gauge(spec: str) -> Gauge:
    """ゲージ仕様文字列 pow:<β> | logpow:<β>,<γ> | table:<path.csv> を解析"""
    m = GAUGE_RE.match(spec.strip())
    if not m:
        raise SpecParseError(f"ゲージ仕様を解析できません: '{spec}'")
    kind, body = m.group(1), m.group(2).strip()
    if kind == "table":
        return load_gauge_table(Path(body))
    try:
        values = [float(tok) for tok in body.split(",")]
    except ValueError:
        raise SpecParseError(f"ゲージ仕様の数値が不正です: '{spec}'")
    if kind == "pow" and len(values) == 1:
        return Gauge.power(values[0])
    if kind == "logpow" and len(values) == 2:
        return Gauge.logpow(values[0], values[1])
    raise SpecParseError(f"ゲージ仕様のパラメータ数が不正です: '{spec}'")


def load_gauge_table(path: Path) -> Gauge:
    """r,h の2列 CSV（r 昇順、ヘッダー行は任意）を読み込み"""
    df = pd.read_csv(path, header=None, comment="#")
    if df.shape[1] != 2:
        raise SpecParseError(f"ゲージ表は2列である必要があります: {path}")
    df = df.apply(pd.to_numeric, errors="coerce").dropna()
    return Gauge.table(df[0].to_numpy(), df[1].to_numpy(), label=f"table:{path.name}")
