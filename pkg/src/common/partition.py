# // Copyright (c) 2025 Bytedance Ltd. and/or its affiliates
# //
# // Licensed under the Apache License, Version 2.0 (the "License");
# // you may not use this file except in compliance with the License.
# // You may obtain a copy of the License at
# //
# //     http://www.apache.org/licenses/LICENSE-2.0
# //
# // Unless required by applicable law or agreed to in writing, software
# // distributed under the License is distributed on an "AS IS" BASIS,
# // WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# // See the License for the specific language governing permissions and
# // limitations under the License.

"""
Partition utility functions and the order-preserving worker map.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar

import numpy as np

from ..utils.constants import get_thread_count

T = TypeVar("T")
R = TypeVar("R")


def partition_by_size(data: Sequence[Any], size: int) -> List[Sequence[Any]]:
    """
    Partition a sequence by size.
    When indivisible, the last group contains fewer items than the target size.

    Examples:
        - data: [1,2,3,4,5]
        - size: 2
        - return: [[1,2], [3,4], [5]]
    """
    assert size > 0
    return [data[i : (i + size)] for i in range(0, len(data), size)]


def chunked_apply(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, size: int = 65536) -> np.ndarray:
    """
    Apply a vectorized ``fn`` to rows of ``points`` in bounded-size chunks
    and concatenate the results in input order.
    """
    points = np.asarray(points, dtype=float)
    if len(points) <= size:
        return np.asarray(fn(points))
    return np.concatenate([np.asarray(fn(chunk)) for chunk in partition_by_size(points, size)], axis=0)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """
    Map ``fn`` over ``items`` keeping input order.

    Uses a thread pool when more than one worker is allowed by
    CONVEXLAB_THREADS (or the explicit ``threads`` argument); results are
    always returned sorted by item index, so output never depends on
    scheduling.
    """
    items = list(items)
    workers = get_thread_count() if threads is None else max(1, int(threads))
    workers = min(workers, len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
