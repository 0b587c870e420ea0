"""Ordered parallel map used for per-sample variational solves.

The shared context (trajectory interpolant, anchor, solver config) is
pickled once per worker through the pool initializer; results are always
gathered in submission order, so reductions downstream are independent of
the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

_WORKER_JOB = None


def _init_worker(job):
    global _WORKER_JOB
    _WORKER_JOB = job


def _run_item(item):
    fn, payload = _WORKER_JOB
    return fn(payload, item)


def ordered_map(fn, payload, items, workers: int = 1) -> list:
    """[fn(payload, x) for x in items], optionally across processes.

    ``fn`` and ``payload`` must be picklable when workers > 1.  The output
    order matches ``items`` regardless of scheduling.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(payload, x) for x in items]
    chunk = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=((fn, payload),)) as ex:
        return list(ex.map(_run_item, items, chunksize=chunk))
