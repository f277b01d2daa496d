"""Deterministic thread-pool mapping for independent work items."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count(explicit=None):
    """Worker count: explicit argument, then TYPPERT_THREADS, then 1."""
    if explicit is not None and explicit > 0:
        return int(explicit)
    env = os.environ.get("TYPPERT_THREADS", "")
    return int(env) if env.strip() else 1


def parallel_map(fn, items, threads=None):
    """Map `fn` over `items`; results keep the input order regardless of
    worker count, so reductions over them stay deterministic."""
    n = thread_count(threads)
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
