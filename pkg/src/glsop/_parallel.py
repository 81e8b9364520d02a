"""Order-preserving parallel map capped by the GLSOP_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def n_threads() -> int:
    raw = os.environ.get("GLSOP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def pmap(fn, items):
    """``list(map(fn, items))``, threaded when GLSOP_THREADS > 1.

    Results come back in input order, so reductions over them stay
    deterministic whatever the thread count.
    """
    items = list(items)
    n = min(n_threads(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
