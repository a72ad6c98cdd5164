"""Ordered parallel map used by the tuner and the interval counters."""

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, threads=1):
    """``[fn(x) for x in items]``, optionally on a thread pool.

    Results come back in input order whatever the completion order, so any
    reduction over them is deterministic. The compiled kernels release the GIL.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
