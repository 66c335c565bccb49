"""
Run configuration for the command-line entry point
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from config.settings import DEFAULT_SEED, DEFAULT_THREADS, OUTPUT_DIR, OUTPUT_ENV

COMMANDS = ("profile", "embed", "cantor", "shift", "gauge", "extend", "curve", "ifs", "dimension", "pipeline")


@dataclass
class RunConfig:
    """1回の実行の設定（コマンド、入力パス、パラメータ文字列）"""
    command: str
    points: Optional[Path] = None
    matrix: Optional[Path] = None
    epsilon: Optional[str] = None
    G: Optional[str] = None
    depth: Optional[int] = None
    gauge: Optional[str] = None
    beta: Optional[float] = None
    m: Optional[int] = None
    n: Optional[int] = None
    order: Optional[int] = None
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS
    out: Path = Path(OUTPUT_DIR)
    nmin: int = 0
    nmax: Optional[int] = None
    verify: int = 0
    atoms: Optional[int] = None
    decades: Optional[int] = None
    ifs: Optional[Path] = None
    anchors: Optional[Path] = None
    delta: Optional[float] = None
    count: Optional[int] = None
    debug: bool = False

    @property
    def output_dir(self) -> Path:
        """環境変数 METRIFRACT_OUT が --out より優先"""
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) if env else Path(self.out)
