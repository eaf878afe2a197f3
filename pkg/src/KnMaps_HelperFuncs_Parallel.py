from more_itertools import divide
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar
import logging
import psutil

########################################################################################################################
# PREFACE
# Fan-out helpers. Work items are split into contiguous, ordered blocks with more_itertools.divide, one block per
# worker, and each block is processed by one thread; numpy releases the GIL inside the heavy kernels. Results come back
# in the order of the items, so reductions do not depend on the number of workers.
########################################################################################################################
T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger("KnMaps.Parallel")


def get_nworkers(requested: Optional[int] = None) -> int:
    """
    Number of worker threads to use

    :param requested: explicit worker count; None picks the number of physical cores
    :return: a positive integer
    """
    if requested is not None and requested > 0:
        return int(requested)
    n_physical = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1
    return max(1, n_physical)


def run_partitioned(func: Callable[[T], R], items: Iterable[T], nworkers: Optional[int] = None) -> List[R]:
    """
    Applies func to every item using up to nworkers threads

    :param func: function of a single work item
    :param items: the work items
    :param nworkers: worker count; see get_nworkers
    :return: the results, in item order
    """
    items = list(items)
    if len(items) == 0:
        return []
    nworkers = min(get_nworkers(nworkers), len(items))
    blocks = [list(block) for block in divide(nworkers, items)]
    logger.debug(f"Dispatching {len(items)} items over {nworkers} workers")
    if nworkers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=nworkers) as executor:
        block_results = list(executor.map(lambda block: [func(item) for item in block], blocks))
    return [result for block in block_results for result in block]
