"""
Shared helpers: seeded generators and thread-parallel map
"""
import logging
import threading
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

try:
    from itertools import batched
except ImportError:
    from more_itertools import batched

from config.settings import DEFAULT_SEED

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """シード固定の乱数生成器を作成"""
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """
    itemsを複数スレッドで処理し、入力順に結果を返す
    ワーカー内の例外は全スレッド終了後に再送出する
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    out, failures, lock = {}, [], threading.Lock()

    def worker(sub):
        for idx, item in sub:
            try:
                value = func(item)
            except Exception as e:
                with lock:
                    failures.append((idx, e))
                return
            with lock:
                out[idx] = value

    size = -(-len(items) // workers)
    chunks = list(batched(list(enumerate(items)), size))
    threads = [threading.Thread(target=worker, args=(ch,)) for ch in chunks]
    logger.debug(f"並列処理開始: {len(items)} 件を {len(threads)} スレッドで処理")

    for t in threads:
        t.start()
    for t in threads:
        t.join()

    if failures:
        idx, err = min(failures, key=lambda f: f[0])
        logger.warning(f"並列処理でエラー発生 (item {idx}): {err}")
        raise err
    return [out[i] for i in range(len(items))]
