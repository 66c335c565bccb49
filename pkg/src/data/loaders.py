"""
Input file loaders: point CSVs, distance matrices, IFS descriptions and anchor tables
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.errors import SpecParseError
from src.holder.extension import SampledMap
from src.metric.models import PointCloud
from src.selfsimilar.models import IFS, Box, Similarity

logger = logging.getLogger(__name__)


def _read_numeric(path: Path) -> np.ndarray:
    try:
        df = pd.read_csv(path, header=None, comment="#")
    except pd.errors.EmptyDataError:
        raise SpecParseError(f"空のファイルです: {path}")
    except UnicodeDecodeError as e:
        raise SpecParseError(f"{path}: UTF-8 として読めません (byte {e.start})")
    except (pd.errors.ParserError, ValueError) as e:
        detail = " ".join(str(e).split())
        raise SpecParseError(f"{path}: CSV を解析できません: {detail}")
    df = df.apply(pd.to_numeric, errors="coerce").dropna(how="all")
    if df.isna().any().any():
        raise SpecParseError(f"数値でない値が含まれています: {path}")
    return df.to_numpy(dtype=float)


def load_points(path: Path) -> PointCloud:
    """1行1点の座標 CSV（ヘッダー行は任意）"""
    arr = _read_numeric(Path(path))
    logger.info(f"点群読み込み: {path} ({arr.shape[0]} 点, {arr.shape[1]} 次元)")
    return PointCloud.from_points(arr)


def load_matrix(path: Path) -> PointCloud:
    """正方の距離行列 CSV"""
    arr = _read_numeric(Path(path))
    logger.info(f"距離行列読み込み: {path} ({arr.shape[0]} 点)")
    return PointCloud.from_matrix(arr)


def load_anchors(path: Path) -> SampledMap:
    """index,v1,...,vm の CSV"""
    arr = _read_numeric(Path(path))
    if arr.shape[1] < 2:
        raise SpecParseError(f"アンカー CSV には index と値の2列以上が必要です: {path}")
    if np.any(arr[:, 0] != np.round(arr[:, 0])):
        raise SpecParseError(f"アンカーの index が整数ではありません: {path}")
    return SampledMap(arr[:, 0].astype(np.int64), arr[:, 1:])


def _number(value: Union[str, int, float]) -> Union[Fraction, float, int]:
    """"1/3" のような文字列は厳密な有理数として読む"""
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise SpecParseError(f"数値を解析できません: '{value}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecParseError(f"数値を解析できません: '{value}'")
    return value


def load_ifs(path: Path) -> IFS:
    """
    IFS の JSON を読み込む
    {dim, maps: [{ratio, perm, translate}], open_set: {lo, hi}}
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SpecParseError(f"IFS ファイルの JSON が不正です: {path}: {e}")
        except UnicodeDecodeError as e:
            raise SpecParseError(f"{path}: UTF-8 として読めません (byte {e.start})")
    try:
        dim = int(data["dim"])
        maps = []
        for entry in data["maps"]:
            perm = entry.get("perm", list(range(1, dim + 1)))
            translate = [_number(v) for v in entry["translate"]]
            ratio = _number(entry["ratio"])
            if "orth" in entry:
                maps.append(Similarity(float(ratio), np.asarray(entry["orth"], dtype=float),
                                       np.array([float(v) for v in translate])))
            else:
                maps.append(Similarity.from_perm(ratio, perm, translate))
        box = None
        if data.get("open_set"):
            box = Box(tuple(_number(v) for v in data["open_set"]["lo"]),
                      tuple(_number(v) for v in data["open_set"]["hi"]))
    except (KeyError, TypeError) as e:
        raise SpecParseError(f"IFS ファイルの項目が不足しています: {path}: {e}")
    ifs = IFS(tuple(maps), box)
    if ifs.dim != dim:
        raise SpecParseError(f"dim={dim} が写像の次元 {ifs.dim} と一致しません")
    logger.info(f"IFS 読み込み: {path} ({len(maps)} 写像, {dim} 次元)")
    return ifs
