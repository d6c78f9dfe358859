"""Producer/worker thread pool for lock-free parallel training.

Workers share the parameter arrays and update them without locks; each
job gets its own random stream so a single worker run is reproducible.
"""

import logging
import threading
from queue import Queue
from typing import Callable, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

J = TypeVar("J")

QUEUE_FACTOR = 2


def run_jobs(
    jobs: Sequence[J],
    work: Callable[[J, np.random.Generator], float],
    workers: int,
    seed: Sequence[int],
) -> float:
    """Run `work(job, rng)` over all jobs and return the summed results.

    With one worker, jobs run in order on the calling thread. Job i
    always gets the generator seeded by (*seed, i).
    """
    if workers <= 1:
        return sum(work(job, np.random.default_rng([*seed, i])) for i, job in enumerate(jobs))

    job_queue: Queue = Queue(maxsize=QUEUE_FACTOR * workers)
    results: list[float] = []
    errors: list[BaseException] = []
    lock = threading.Lock()

    def worker_loop():
        processed, subtotal = 0, 0.0
        while True:
            item = job_queue.get()
            if item is None:
                break
            if errors:
                continue  # drain the queue after a failure
            i, job = item
            try:
                subtotal += work(job, np.random.default_rng([*seed, i]))
            except BaseException as e:  # re-raised on the calling thread
                with lock:
                    errors.append(e)
            processed += 1
        with lock:
            results.append(subtotal)
        logger.debug("worker exiting, processed %i jobs", processed)

    threads = [threading.Thread(target=worker_loop, daemon=True) for _ in range(workers)]
    for thread in threads:
        thread.start()
    for item in enumerate(jobs):
        job_queue.put(item)
    for _ in threads:
        job_queue.put(None)
    for thread in threads:
        thread.join()

    if errors:
        raise errors[0]
    return sum(results)


def chunked(items: Sequence[J], size: int) -> list[Sequence[J]]:
    """Split a sequence into consecutive chunks of at most `size` items."""
    return [items[i:i + size] for i in range(0, len(items), size)]
