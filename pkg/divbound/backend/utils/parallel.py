import logging
import concurrent.futures

from divbound.backend.utils import config

logger = logging.getLogger(__name__)


def map_ordered(fn, items, max_workers=None):
    """
    Apply fn to every item, possibly in parallel, keeping input order.

    Args:
        fn: Callable applied to each item
        items: Iterable of inputs
        max_workers: Worker cap (defaults to DIVBOUND_THREADS)

    Returns:
        List of results, results[i] = fn(items[i])
    """
    items = list(items)
    workers = config.thread_count() if max_workers is None else max(1, int(max_workers))
    workers = min(workers, len(items))
    if workers <= 1:
        return [fn(item) for item in items]

    logger.debug("map_ordered: %d items on %d workers", len(items), workers)
    results = [None] * len(items)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {executor.submit(fn, item): i for i, item in enumerate(items)}
        for future in concurrent.futures.as_completed(future_to_index):
            # Results are placed by index, never by completion order
            results[future_to_index[future]] = future.result()
    return results
