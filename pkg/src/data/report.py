"""
Canonical JSON reports and sibling CSV series
"""
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.errors import ReportError
from config.settings import FLOAT_FORMAT

INDENT = "  "


def _float(value: float, where: str) -> str:
    if not math.isfinite(value):
        raise ReportError(f"有限でない値はレポートに書けません: {where} = {value}")
    return FLOAT_FORMAT % value


def _encode(value: Any, where: str, level: int) -> str:
    pad, inner = INDENT * level, INDENT * (level + 1)
    if hasattr(value, "to_dict") and not isinstance(value, pd.DataFrame):
        value = value.to_dict()
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _float(float(value), where)
    if isinstance(value, Fraction):
        return json.dumps(f"{value.numerator}/{value.denominator}")
    if isinstance(value, (str, Path)):
        return json.dumps(str(value), ensure_ascii=False)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = sorted((str(k), v) for k, v in value.items())
        body = ",\n".join(
            f"{inner}{json.dumps(k, ensure_ascii=False)}: {_encode(v, f'{where}.{k}', level + 1)}" for k, v in items
        )
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        body = ",\n".join(f"{inner}{_encode(v, f'{where}[{i}]', level + 1)}" for i, v in enumerate(value))
        return "[\n" + body + "\n" + pad + "]"
    raise ReportError(f"レポートに書けない型です: {where} ({type(value).__name__})")


def canonical_json(report: Any) -> str:
    """キー整列・浮動小数 %.17g の決定的な JSON 文字列（NaN/inf は拒否）"""
    return _encode(report, "$", 0) + "\n"


class ReportWriter:
    """レポート JSON と CSV 系列の出力を担当するクラス"""

    def __init__(self, output_dir: Path):
        self.logger = logging.getLogger(__name__)
        self.output_dir = Path(output_dir)

    def emit_report(self, report: Any, name: str, series: Optional[Dict[str, pd.DataFrame]] = None) -> Path:
        """<name>.json と <name>_<series>.csv を書き出す（書き込み前に全体を検証）"""
        text = canonical_json(report)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / f"{name}.json"
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        self.logger.info(f"レポート保存: {path}")
        for key, frame in sorted((series or {}).items()):
            self.emit_series(frame, f"{name}_{key}")
        return path

    def emit_series(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.output_dir / f"{name}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
        self.logger.info(f"系列保存: {path} ({len(frame)} 行)")
        return path
