#Adapted from the job-mapping helpers of toil_rnaseq; jobs become joblib tasks

from typing import Callable, Any, Iterator, Sequence
import logging

from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

def partitions(l: Sequence[Any], partition_size: int) -> Iterator[Sequence[Any]]:
    """Yield consecutive slices of `l` holding at most `partition_size` items

    Parameters
    ----------
    l : sequence
        Items to be partitioned
    partition_size : int
        Size of each slice; the last one may be shorter

    >>> list(partitions([], 10))
    []
    >>> list(partitions([1,2,3,4,5], 1))
    [[1], [2], [3], [4], [5]]
    >>> list(partitions([1,2,3,4,5], 2))
    [[1, 2], [3, 4], [5]]
    >>> list(partitions([1,2,3,4,5], 5))
    [[1, 2, 3, 4, 5]]
    """
    for i in range(0, len(l), partition_size):
        yield l[i:i + partition_size]

def _run_partition(func: Callable, partition: Sequence[Any], *args, **kwds) -> list[Any]:
    return [func(i, *args, **kwds) for i in partition]

def loop_rv(func: Callable, inputs: Sequence[Any], *args, n_jobs: int = 1, partition_size: int = 64, **kwds) -> list[Any]:
    """Apply func to every input, in input order. With n_jobs != 1 the inputs
    are batched into partitions and each partition runs as one joblib task.

    >>> loop_rv(pow, [1, 2, 3], 2)
    [1, 4, 9]
    """
    if n_jobs == 1 or len(inputs) <= partition_size:
        logger.debug("Looping over {} inputs".format(len(inputs)))
        return [func(i, *args, **kwds) for i in inputs]

    logger.info("Looping over {} inputs in PARALLEL with {} jobs".format(len(inputs), n_jobs))
    results = Parallel(n_jobs=n_jobs)(delayed(_run_partition)(func, partition, *args, **kwds) \
        for partition in partitions(inputs, partition_size))
    return [rv for partition in results for rv in partition]
