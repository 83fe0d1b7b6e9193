"""Order-preserving map over independent tasks, optionally across processes."""

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, workers=1):
    """``list(map(fn, items))``, run in *workers* processes when ``workers > 1``.

    Results always come back in input order, so downstream aggregation is
    independent of the worker count.  *fn* must be picklable.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
