"""
Ordered data-parallel map over independent work units.
"""
import logging
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def _apply(packed):
    fn, args = packed
    return fn(*args)


def map_ordered(fn, arg_tuples, threads: int = 1):
    """[fn(*args) for args in arg_tuples], results in input order.

    fn must be a module-level function so worker processes can import it.
    """
    arg_tuples = list(arg_tuples)
    if threads <= 1 or len(arg_tuples) <= 1:
        return [fn(*args) for args in arg_tuples]
    logger.debug("Dispatching %d units of %s to %d processes", len(arg_tuples), fn.__name__, threads)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_apply, [(fn, args) for args in arg_tuples]))
