"""Batch classification facade over the compiled and pure engines.

``backend="auto"`` picks the compiled kernel when it was built and the task
supports it, otherwise the pure engine.  Politeness/mood features need
sentence-level heuristics the kernel does not implement, so tasks with them
enabled always run pure; requesting ``backend="compiled"`` for such a task is
a configuration error.

Both engines predict the same labels for the same task; scores can differ in
the last few ulps because the kernel accumulates per token occurrence while
the pure path multiplies term frequencies.  Within one engine, results are
bit-reproducible, which is the property the benchmark's equivalence gate
relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from . import _kernel
from ._kernel.fallback import PureEmotionScorer, PurePolarityScorer
from ._kernel.plan import ScoringPlan, build_plan
from .corpus import Document
from .errors import ConfigurationError
from .features import EmotionLexicon, FeatureConfig, SentimentLexicon, WordSpace
from .learner import LinearModel, PolarityModel, PolarityTrainResult
from .textproc import NgramModel

BACKENDS = ("auto", "compiled", "pure")


def resolve_backend(requested: str, supports_compiled: bool = True) -> str:
    if requested not in BACKENDS:
        raise ConfigurationError(f"unknown backend {requested!r} (expected auto, compiled or pure)")
    if requested == "pure":
        return "pure"
    compiled_ok = supports_compiled and _kernel.compiled_available()
    if requested == "compiled":
        if not _kernel.compiled_available():
            raise ConfigurationError("the compiled kernel is not available in this installation")
        if not supports_compiled:
            raise ConfigurationError(
                "this task uses politeness/mood features, which the compiled kernel does not support"
            )
        return "compiled"
    return "compiled" if compiled_ok else "pure"


def _compiled_batch_fn(plan: ScoringPlan) -> Callable[[Sequence[str]], list[tuple[str, float]]]:
    speed = _kernel._speed

    def classify_batch(texts: Sequence[str]) -> list[tuple[str, float]]:
        labels_idx, scores = speed.classify_batch(
            list(texts),
            plan.binary,
            plan.biases,
            plan.use_vocab,
            plan.use_bigrams,
            plan.vocab_offsets,
            plan.vocab_blob,
            plan.vocab_contrib,
            plan.use_emotion,
            plan.emo_offsets,
            plan.emo_blob,
            plan.emo_contrib,
            plan.use_sentiment,
            plan.pos_offsets,
            plan.pos_blob,
            plan.neg_offsets,
            plan.neg_blob,
            plan.negation_offsets,
            plan.negation_blob,
            plan.sentiment_weights,
            plan.use_semantic,
            plan.sem_offsets,
            plan.sem_blob,
            plan.sem_contrib,
            plan.abbrev_offsets,
            plan.abbrev_blob,
        )
        return [
            (plan.labels[i], s) for i, s in zip(labels_idx.tolist(), scores.tolist())
        ]

    return classify_batch


@dataclass
class BatchClassifier:
    """Uniform (label, score) batch interface plus pipeline work adapters."""

    backend: str
    _batch_fn: Callable[[Sequence[str]], list[tuple[str, float]]]

    def classify_batch(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        return self._batch_fn(texts)

    def classify(self, text: str) -> tuple[str, float]:
        return self._batch_fn([text])[0]

    def work(self, doc: Document) -> str:
        return self._batch_fn([doc.text])[0][0]

    def work_batch(self, docs: Sequence[Document]) -> list[str]:
        return [label for label, _ in self._batch_fn([d.text for d in docs])]


def polarity_classifier(bundle: PolarityTrainResult, backend: str = "auto") -> BatchClassifier:
    config = bundle.config
    supports_compiled = not (config.mode == "A" and config.politeness_mood)
    resolved = resolve_backend(backend, supports_compiled)
    if resolved == "compiled":
        mode = config.mode
        plan = build_plan(
            rows=[(label, bundle.model.models[label]) for label in bundle.model.priority],
            binary=False,
            ngram_model=bundle.ngram_model if mode in ("A", "K") else None,
            emotion_lexicon=bundle.emotion_lexicon if mode in ("A", "L") else None,
            sentiment_lexicon=bundle.sentiment_lexicon if mode in ("A", "L") else None,
            wordspace=bundle.wordspace if mode in ("A", "S") else None,
            unigram_allowlist=config.unigram_allowlist,
            bigram_allowlist=config.bigram_allowlist,
        )
        return BatchClassifier(backend=resolved, _batch_fn=_compiled_batch_fn(plan))
    scorer = PurePolarityScorer(
        bundle.model,
        config,
        bundle.ngram_model,
        bundle.emotion_lexicon,
        bundle.sentiment_lexicon,
        bundle.wordspace,
    )
    return BatchClassifier(backend=resolved, _batch_fn=scorer.classify_batch)


def emotion_classifier(
    model: LinearModel,
    ngram_model: NgramModel,
    lexicon: EmotionLexicon,
    politeness_mood: bool = False,
    backend: str = "auto",
) -> BatchClassifier:
    resolved = resolve_backend(backend, supports_compiled=not politeness_mood)
    if resolved == "compiled":
        plan = build_plan(
            rows=[(model.target or "yes", model)],
            binary=True,
            ngram_model=ngram_model,
            emotion_lexicon=lexicon,
        )
        return BatchClassifier(backend=resolved, _batch_fn=_compiled_batch_fn(plan))
    scorer = PureEmotionScorer(model, ngram_model, lexicon, politeness_mood)
    return BatchClassifier(backend=resolved, _batch_fn=scorer.classify_batch)
