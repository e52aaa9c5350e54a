"""Order-preserving parallel map used by the Monte Carlo machinery.

Every task owns a pre-derived random stream, so results are identical for
any worker count; parallelism only changes wall time.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    """Thread count from the ABCGOF_THREADS environment variable, or 1."""
    raw = os.environ.get("ABCGOF_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def parallel_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
