"""Concurrent batch executor with strictly ordered output.

Topology: a coordinator starts a reader thread (batches the source and
assigns gapless sequence numbers), N worker threads fed from one bounded task
queue, and a writer thread that buffers out-of-order results and emits them
to the sink strictly in input order.  All stages communicate only through
bounded queues; an admission window (a semaphore over in-flight batches)
caps the writer's reorder buffer at ``workers x channel_capacity`` entries,
so memory stays bounded no matter how unevenly workers finish.

Workers are threads.  Pure-Python work functions therefore time-share one
core under the interpreter lock; real multi-core speedup comes from work
functions that release the GIL, such as the compiled classification kernel
(see :mod:`emtk.classify`).  Correctness and output ordering never depend on
the worker count: for a pure work function the sink transcript is identical
whether the run uses 1 or 16 workers, which is what makes the speedup
benchmark an apples-to-apples comparison.

A work function failure on one document produces an error outcome for that
document and the run continues.  A failing source stops intake, drains the
in-flight work, and raises :class:`PipelineError` carrying the partial count.
"""

from __future__ import annotations

import os
import queue
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

from .corpus import Document
from .errors import PipelineError


def default_workers() -> int:
    """Detected CPU core count (at least 1)."""
    return os.cpu_count() or 1


@dataclass(frozen=True)
class PipelineConfig:
    workers: int = 0  # 0 = detected core count
    batch_size: int = 64
    channel_capacity: int = 0  # 0 = 4 x workers

    def resolved(self) -> "PipelineConfig":
        workers = self.workers if self.workers > 0 else default_workers()
        capacity = self.channel_capacity if self.channel_capacity > 0 else 4 * workers
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        return PipelineConfig(workers=workers, batch_size=self.batch_size, channel_capacity=capacity)


@dataclass(frozen=True)
class TaskOutcome:
    """Result of one document: a value, or an error description."""

    doc_id: str
    ok: bool
    value: Any = None
    error: str | None = None


@dataclass
class RunStats:
    processed: int = 0
    errors: int = 0
    reader_seconds: float = 0.0
    worker_seconds: float = 0.0  # summed busy time across workers
    writer_seconds: float = 0.0
    total_seconds: float = 0.0
    max_reorder_buffer: int = 0


WorkFn = Callable[[Document], Any]
BatchWorkFn = Callable[[Sequence[Document]], Sequence[Any]]
SinkFn = Callable[[TaskOutcome], None]

_DONE = object()


def _apply_work(
    docs: Sequence[Document], work: WorkFn, work_batch: BatchWorkFn | None
) -> list[TaskOutcome]:
    if work_batch is not None:
        try:
            values = list(work_batch(docs))
            if len(values) == len(docs):
                return [TaskOutcome(doc.id, True, value) for doc, value in zip(docs, values)]
        except Exception:
            pass  # fall back to per-document calls so the failure is localized
    outcomes = []
    for doc in docs:
        try:
            outcomes.append(TaskOutcome(doc.id, True, work(doc)))
        except Exception as exc:
            outcomes.append(TaskOutcome(doc.id, False, None, f"{type(exc).__name__}: {exc}"))
    return outcomes


def run_pipeline(
    source: Iterable[Document],
    work: WorkFn,
    sink: SinkFn,
    config: PipelineConfig | None = None,
    work_batch: BatchWorkFn | None = None,
) -> RunStats:
    """Run the staged executor; returns per-stage timings and counts.

    ``work`` must be pure.  ``work_batch``, when given, processes a whole
    batch in one call (the fast path for the compiled kernel); it must return
    exactly one value per document or the batch falls back to ``work``.
    """
    cfg = (config or PipelineConfig()).resolved()
    task_q: queue.Queue = queue.Queue(maxsize=cfg.channel_capacity)
    result_q: queue.Queue = queue.Queue(maxsize=cfg.channel_capacity)
    window = threading.Semaphore(cfg.workers * cfg.channel_capacity)
    stats = RunStats()
    source_error: list[BaseException] = []
    started = time.perf_counter()

    def reader() -> None:
        t0 = time.perf_counter()
        seq = 0
        batch: list[Document] = []
        try:
            for doc in source:
                batch.append(doc)
                if len(batch) >= cfg.batch_size:
                    window.acquire()
                    task_q.put((seq, batch))
                    seq += 1
                    batch = []
            if batch:
                window.acquire()
                task_q.put((seq, batch))
        except Exception as exc:
            source_error.append(exc)
        finally:
            for _ in range(cfg.workers):
                task_q.put(_DONE)
            stats.reader_seconds = time.perf_counter() - t0

    worker_busy = [0.0] * cfg.workers

    def worker(slot: int) -> None:
        while True:
            item = task_q.get()
            if item is _DONE:
                result_q.put(_DONE)
                return
            seq, docs = item
            t0 = time.perf_counter()
            outcomes = _apply_work(docs, work, work_batch)
            worker_busy[slot] += time.perf_counter() - t0
            result_q.put((seq, outcomes))

    def writer() -> None:
        t0 = time.perf_counter()
        buffered: dict[int, list[TaskOutcome]] = {}
        next_seq = 0
        done = 0
        while done < cfg.workers:
            item = result_q.get()
            if item is _DONE:
                done += 1
                continue
            seq, outcomes = item
            buffered[seq] = outcomes
            if len(buffered) > stats.max_reorder_buffer:
                stats.max_reorder_buffer = len(buffered)
            while next_seq in buffered:
                for outcome in buffered.pop(next_seq):
                    sink(outcome)
                    stats.processed += 1
                    if not outcome.ok:
                        stats.errors += 1
                window.release()
                next_seq += 1
        stats.writer_seconds = time.perf_counter() - t0

    threads = [threading.Thread(target=reader, name="emtk-reader", daemon=True)]
    threads.extend(
        threading.Thread(target=worker, args=(slot,), name=f"emtk-worker-{slot}", daemon=True)
        for slot in range(cfg.workers)
    )
    threads.append(threading.Thread(target=writer, name="emtk-writer", daemon=True))
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    stats.worker_seconds = sum(worker_busy)
    stats.total_seconds = time.perf_counter() - started
    if source_error:
        raise PipelineError(
            f"source failed after {stats.processed} documents: {source_error[0]}",
            processed=stats.processed,
        ) from source_error[0]
    return stats


def sequential_baseline(
    source: Iterable[Document],
    work: WorkFn,
    sink: SinkFn,
    batch_size: int = 64,
    work_batch: BatchWorkFn | None = None,
) -> RunStats:
    """Single-threaded reference with the same outcome contract as
    :func:`run_pipeline`; used for equivalence checks and T1 measurement."""
    if batch_size <= 0:
        raise ValueError("batch_size must be positive")
    stats = RunStats()
    started = time.perf_counter()
    batch: list[Document] = []

    def flush() -> None:
        t0 = time.perf_counter()
        outcomes = _apply_work(batch, work, work_batch)
        stats.worker_seconds += time.perf_counter() - t0
        for outcome in outcomes:
            sink(outcome)
            stats.processed += 1
            if not outcome.ok:
                stats.errors += 1

    try:
        for doc in source:
            batch.append(doc)
            if len(batch) >= batch_size:
                flush()
                batch = []
    except Exception as exc:
        if batch:
            flush()
        stats.total_seconds = time.perf_counter() - started
        raise PipelineError(
            f"source failed after {stats.processed} documents: {exc}",
            processed=stats.processed,
        ) from exc
    if batch:
        flush()
    stats.total_seconds = time.perf_counter() - started
    return stats
