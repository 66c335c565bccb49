"""
Exception hierarchy shared by all metrifract modules
"""
from typing import Any, Optional


class MetrifractError(Exception):
    """metrifract共通の基底例外"""
    exit_code = 1


class ValidationRejected(MetrifractError):
    """入力が前提条件を満たさない場合の例外（witnessに違反箇所を保持）"""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness


class DomainError(ValidationRejected):
    """値が定義域外"""


class ShapeError(ValidationRejected):
    """座標数・深さ・行列サイズの不一致"""


class NormalizationError(ValidationRejected):
    """直径が1を超える点群"""


class DepthError(ValidationRejected):
    """構成済みの深さを超える要求"""


class BudgetError(ValidationRejected):
    """生成点数などの上限超過"""


class SpecParseError(MetrifractError):
    """仕様文字列・入力ファイルの解析失敗"""
    exit_code = 2


class ReportError(MetrifractError):
    """レポートに書き出せない値（NaNなど）"""
