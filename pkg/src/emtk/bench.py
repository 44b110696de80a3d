"""Sequential-versus-parallel measurement with an equivalence gate.

Speedup is the ratio of sequential to parallel wall time; a result is only
emitted when the parallel prediction transcript is byte-identical to the
sequential one (a correctness bug outranks any timing number).  Timing uses a
monotonic clock, discards one warm-up run, and takes the median over the
requested repetitions.

The report is a plain-text table plus a machine-readable CSV with columns
``task,workers,seconds,speedup,outputs_equal``.
"""

from __future__ import annotations

import random
import re
import statistics
import time
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .corpus import Document
from .errors import EquivalenceError
from .pipeline import (
    BatchWorkFn,
    PipelineConfig,
    TaskOutcome,
    WorkFn,
    run_pipeline,
    sequential_baseline,
)


@dataclass(frozen=True)
class BenchmarkResult:
    task: str
    workers: int
    t1_seconds: float
    tp_seconds: float
    speedup: float
    outputs_equal: bool
    backend: str = ""


@dataclass(frozen=True)
class BenchTask:
    name: str
    work: WorkFn
    work_batch: BatchWorkFn | None = None
    backend: str = ""


def speedup(t1: float, tp: float) -> float:
    """S = T1 / TP; both times must be positive."""
    if t1 <= 0 or tp <= 0:
        raise ValueError(f"execution times must be positive, got T1={t1}, TP={tp}")
    return t1 / tp


def format_speedup(t1: float, tp: float) -> str:
    """The reported ratio: exact division, rounded half-up to 2 decimals.

    Uses rational arithmetic so e.g. 3406/80 reports 42.58, not the 42.57 a
    naive float-then-round path would produce.
    """
    if t1 <= 0 or tp <= 0:
        raise ValueError(f"execution times must be positive, got T1={t1}, TP={tp}")
    ratio = Fraction(t1) / Fraction(tp)
    with localcontext() as ctx:
        ctx.prec = 50
        value = Decimal(ratio.numerator) / Decimal(ratio.denominator)
        return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


_DURATION_RE = re.compile(
    r"^\s*(?:(\d+)\s*h)?\s*(?:(\d+)\s*m)?\s*(?:(\d+)\s*s)?\s*$"
)


def parse_duration(text: str) -> int:
    """``"1h 4m 41s"`` -> seconds; components are optional but ordered."""
    match = _DURATION_RE.match(text)
    if not match or not any(match.groups()):
        raise ValueError(f"cannot parse duration {text!r}")
    hours, minutes, seconds = (int(g) if g else 0 for g in match.groups())
    return hours * 3600 + minutes * 60 + seconds


def format_duration(total_seconds: int) -> str:
    """Canonical form: leading zero units omitted, e.g. ``56m 46s``, ``0s``."""
    if total_seconds < 0:
        raise ValueError("duration must be non-negative")
    hours, rest = divmod(int(total_seconds), 3600)
    minutes, seconds = divmod(rest, 60)
    if hours:
        return f"{hours}h {minutes}m {seconds}s"
    if minutes:
        return f"{minutes}m {seconds}s"
    return f"{seconds}s"


def outcome_line(outcome: TaskOutcome) -> str:
    if outcome.ok:
        return f"{outcome.doc_id};{outcome.value}"
    return f"{outcome.doc_id};ERROR:{outcome.error}"


def _transcript_diff(reference: Sequence[str], candidate: Sequence[str], limit: int = 5) -> list[str]:
    diff = []
    if len(reference) != len(candidate):
        diff.append(f"length {len(reference)} != {len(candidate)}")
    for i, (ref, got) in enumerate(zip(reference, candidate)):
        if ref != got:
            diff.append(f"line {i + 1}: expected {ref!r}, got {got!r}")
            if len(diff) >= limit:
                break
    return diff


def run_benchmark(
    corpus: Sequence[Document],
    task: BenchTask,
    worker_counts: Sequence[int],
    repetitions: int = 3,
    batch_size: int = 64,
    clock: Callable[[], float] = time.perf_counter,
) -> list[BenchmarkResult]:
    """Measure T1 and TP per worker count; abort on transcript divergence.

    One warm-up run per configuration is excluded from timing; the parallel
    transcript of every repetition must equal the sequential reference.
    """
    if not corpus:
        raise ValueError("benchmark corpus is empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if any(w < 1 for w in worker_counts):
        raise ValueError("worker counts must be >= 1")

    def sequential_run() -> tuple[float, list[str]]:
        lines: list[str] = []
        started = clock()
        sequential_baseline(
            corpus, task.work, lambda o: lines.append(outcome_line(o)),
            batch_size=batch_size, work_batch=task.work_batch,
        )
        return clock() - started, lines

    def parallel_run(workers: int) -> tuple[float, list[str]]:
        lines: list[str] = []
        config = PipelineConfig(workers=workers, batch_size=batch_size)
        started = clock()
        run_pipeline(
            corpus, task.work, lambda o: lines.append(outcome_line(o)),
            config=config, work_batch=task.work_batch,
        )
        return clock() - started, lines

    _, reference = sequential_run()  # warm-up, transcript kept as the oracle
    t1 = statistics.median(sequential_run()[0] for _ in range(repetitions))

    results = []
    for workers in worker_counts:
        _, warm = parallel_run(workers)
        diff = _transcript_diff(reference, warm)
        times = []
        for _ in range(repetitions):
            elapsed, lines = parallel_run(workers)
            diff = diff or _transcript_diff(reference, lines)
            times.append(elapsed)
        if diff:
            raise EquivalenceError(
                f"parallel transcript with {workers} workers diverged from the sequential run",
                diff_sample=diff,
            )
        tp = statistics.median(times)
        results.append(
            BenchmarkResult(
                task=task.name,
                workers=workers,
                t1_seconds=t1,
                tp_seconds=tp,
                speedup=speedup(t1, tp),
                outputs_equal=True,
                backend=task.backend,
            )
        )
    return results


def render_report(results: Sequence[BenchmarkResult]) -> str:
    """Plain-text table: task, workers, times, and the speedup column."""
    if not results:
        return "(no benchmark results)\n"
    lines = []
    header = f"{'task':<28} {'backend':<9} {'workers':>7} {'T1 (s)':>10} {'TP (s)':>10} {'speedup':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in results:
        lines.append(
            f"{r.task:<28} {r.backend or '-':<9} {r.workers:>7} "
            f"{r.t1_seconds:>10.3f} {r.tp_seconds:>10.3f} "
            f"{format_speedup(r.t1_seconds, r.tp_seconds):>8}"
        )
    return "\n".join(lines) + "\n"


def results_to_csv(results: Iterable[BenchmarkResult]) -> str:
    lines = ["task,workers,seconds,speedup,outputs_equal"]
    for r in results:
        task = f"{r.task}[{r.backend}]" if r.backend else r.task
        lines.append(
            f"{task},{r.workers},{r.tp_seconds:.6f},"
            f"{format_speedup(r.t1_seconds, r.tp_seconds)},{str(r.outputs_equal).lower()}"
        )
    return "\n".join(lines) + "\n"


_POSITIVE_MARKERS = (
    "great", "excellent", "awesome", "love", "nice", "perfect", "helpful", "happy", "thanks",
)
_NEGATIVE_MARKERS = (
    "terrible", "awful", "broken", "hate", "bug", "error", "slow", "wrong", "sad",
)


def synthetic_corpus(
    n_docs: int,
    seed: int = 0,
    tokens_per_doc: int = 40,
    vocab_size: int = 500,
) -> list[Document]:
    """Deterministic labeled corpus for benchmarks and load tests.

    Documents cycle through the three polarity classes and carry
    class-correlated marker words, so a model trained on the corpus does real
    classification work on it.
    """
    if n_docs <= 0:
        raise ValueError("n_docs must be positive")
    rng = random.Random(seed)
    classes = ("positive", "negative", "neutral")
    docs = []
    spread = max(1, tokens_per_doc // 4)
    for i in range(n_docs):
        cls = classes[i % 3]
        n_tokens = max(3, tokens_per_doc + rng.randrange(-spread, spread + 1))
        words = []
        for _ in range(n_tokens):
            roll = rng.random()
            if cls == "positive" and roll < 0.18:
                words.append(rng.choice(_POSITIVE_MARKERS))
            elif cls == "negative" and roll < 0.18:
                words.append(rng.choice(_NEGATIVE_MARKERS))
            else:
                words.append(f"w{rng.randrange(vocab_size):03d}")
            if rng.random() < 0.08:
                words[-1] += "."
        docs.append(Document(id=str(i + 1), text=" ".join(words), gold=cls))
    return docs
