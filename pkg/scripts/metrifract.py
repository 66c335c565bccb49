#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
metrifract.py
距離空間の埋め込み・Cantor系・ゲージ・Hölder写像・自己相似集合のコマンドラインツール

Usage:
    python scripts/metrifract.py profile --points data/input/points.csv --nmax 6
    python scripts/metrifract.py cantor --epsilon 1/2 --G list:1 --depth 10 --verify 1000

Features:
- 全コマンドは (入力ファイル, 設定, シード) の純粋関数で、再実行すると同一の出力になる
- レポートはキー整列の JSON と、プロット用の CSV 系列
"""

import argparse
import logging
import sys
from pathlib import Path

# プロジェクトルートをPythonパスに追加
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.cli.config import COMMANDS, RunConfig
from src.cli.dispatcher import dispatch
from config.settings import DEFAULT_SEED, DEFAULT_THREADS, LOG_FILE, LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR


def setup_logging(log_file: str = LOG_FILE, debug: bool = False):
    """ログ設定を初期化"""
    logging.basicConfig(
        level=logging.DEBUG if debug else getattr(logging, LOG_LEVEL),
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(sys.stdout)
        ]
    )
    return logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="計量幾何ツールキット（埋め込み・Cantor系・ゲージ・Hölder写像・自己相似集合）",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
コマンド:
    {', '.join(COMMANDS)}

使用例:
    python scripts/metrifract.py embed --points data/input/points.csv --nmax 8
    python scripts/metrifract.py gauge --gauge pow:2 --beta 1
    python scripts/metrifract.py curve --m 2 --order 6
    python scripts/metrifract.py ifs --ifs data/input/sierpinski.json --depth 8
    python scripts/metrifract.py pipeline --ifs data/input/sierpinski.json --count 500 --m 1

出力:
    - <command>.json: レポート（キー整列、浮動小数 %.17g）
    - <command>_<series>.csv: プロット用の系列
    環境変数 METRIFRACT_OUT が --out より優先されます
        """
    )

    parser.add_argument("command", help="実行するコマンド")
    parser.add_argument("--points", type=Path, help="点群の座標 CSV")
    parser.add_argument("--matrix", type=Path, help="距離行列 CSV")
    parser.add_argument("--epsilon", help="ε（有理数 p/q）")
    parser.add_argument("--G", help="G仕様 const:<g> | poly:<c>,<d> | list:<g0>,...")
    parser.add_argument("--depth", type=int, help="深さ")
    parser.add_argument("--gauge", help="ゲージ仕様 pow:<β> | logpow:<β>,<γ> | table:<path.csv>")
    parser.add_argument("--beta", type=float, help="hat変換の β")
    parser.add_argument("--m", type=int, help="出力次元")
    parser.add_argument("--n", type=int, help="入力次元（インターリーブ写像）")
    parser.add_argument("--order", type=int, help="曲線の次数・精度、またはボックス数え上げの最細レベル")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"乱数シード (default: {DEFAULT_SEED})")
    parser.add_argument("--threads", type=int, default=DEFAULT_THREADS, help=f"スレッド数 (default: {DEFAULT_THREADS})")
    parser.add_argument("--out", type=Path, default=Path(OUTPUT_DIR), help=f"出力ディレクトリ (default: {OUTPUT_DIR})")
    parser.add_argument("--nmin", type=int, default=0, help="最小スケール n (default: 0)")
    parser.add_argument("--nmax", type=int, help="最大スケール n")
    parser.add_argument("--verify", type=int, default=0, help="検証するコード対の数")
    parser.add_argument("--atoms", type=int, help="一様測度の原子数")
    parser.add_argument("--decades", type=int, help="ord推定の桁数")
    parser.add_argument("--ifs", type=Path, help="IFS の JSON ファイル")
    parser.add_argument("--anchors", type=Path, help="アンカー CSV (index,v1,...,vm)")
    parser.add_argument("--delta", type=float, help="前測度の最細 δ")
    parser.add_argument("--count", type=int, help="標本数")
    parser.add_argument("--log", default=LOG_FILE, help=f"ログファイル名 (default: {LOG_FILE})")
    parser.add_argument("--debug", action="store_true", help="DEBUG ログを出力")
    return parser


def cli(argv=None) -> int:
    """コマンドライン インターフェース"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log, args.debug)

    options = vars(args)
    options.pop("log")
    config = RunConfig(**options)
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(cli())
