"""
Shared pytest fixtures
"""
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

# プロジェクトルートをPythonパスに追加
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cantor.system import build_system
from src.embedding.assouad import normalize_diameter
from src.metric.models import PointCloud, SlowSchedule
from src.selfsimilar.models import IFS, Box, Similarity

INPUT_DIR = Path(__file__).parent.parent / "data" / "input"


@pytest.fixture
def square_cloud():
    """[0,1]² の一様乱数200点（直径 ≤ 1 に正規化）"""
    rng = np.random.default_rng(0)
    return normalize_diameter(PointCloud.from_points(rng.random((200, 2))))


@pytest.fixture
def half_system():
    """ε = 1/2, G = list:1 の1座標系"""
    return build_system("1/2", SlowSchedule.parse("list:1"), 10)


@pytest.fixture
def cantor_ifs():
    third = Fraction(1, 3)
    return IFS(
        (Similarity.from_perm(third, [1], [0]), Similarity.from_perm(third, [1], [Fraction(2, 3)])),
        Box((0,), (1,)),
    )


@pytest.fixture
def sierpinski_ifs():
    """直角 Sierpinski 三角形（平行移動 (0,0), (1/2,0), (0,1/2)）"""
    half = Fraction(1, 2)
    return IFS(
        tuple(Similarity.from_perm(half, [1, 2], t) for t in ([0, 0], [half, 0], [0, half])),
        Box((0, 0), (1, 1)),
    )


@pytest.fixture
def input_dir():
    return INPUT_DIR
