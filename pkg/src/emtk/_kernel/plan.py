"""Packed scoring plans for the compiled kernel.

A plan flattens one classification task (feature resources plus linear
models) into contiguous arrays: sorted UTF-8 string tables with offset
indexes, and per-class contribution rows aligned with them.  Scoring a
document then reduces to byte-level tokenization plus table lookups, all of
which runs without the GIL.

Rows are ordered by prediction priority; multi-class argmax uses strict
``>`` so earlier rows win ties.  Binary plans have one row and use the
``score >= 0`` rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..features import (
    EmotionLexicon,
    SentimentLexicon,
    WordSpace,
    EMOTION_PREFIX,
    SEMANTIC_PREFIX,
    SENT_NEG,
    SENT_NEGATIONS,
    SENT_NET,
    SENT_POS,
)
from ..corpus import EMOTIONS
from ..learner import LinearModel
from ..textproc import ABBREVIATIONS, BIGRAM_PREFIX, NgramModel, UNIGRAM_PREFIX

_EMPTY_OFFSETS = np.zeros(1, dtype=np.int32)
_EMPTY_BLOB = np.zeros(0, dtype=np.uint8)


def pack_strings(strings: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Sorted strings -> (int32 offsets, uint8 blob).  Python string order
    equals UTF-8 byte order, so the packed table stays binary-searchable."""
    encoded = [s.encode("utf-8") for s in strings]
    offsets = np.zeros(len(encoded) + 1, dtype=np.int32)
    for i, raw in enumerate(encoded):
        offsets[i + 1] = offsets[i] + len(raw)
    blob = np.frombuffer(b"".join(encoded), dtype=np.uint8).copy() if encoded else _EMPTY_BLOB
    return offsets, blob


@dataclass
class ScoringPlan:
    labels: tuple[str, ...]  # row order = tie priority; binary -> ("yes", "no")
    binary: bool
    biases: np.ndarray  # (k,)
    use_vocab: bool
    use_bigrams: bool
    vocab_offsets: np.ndarray
    vocab_blob: np.ndarray
    vocab_contrib: np.ndarray  # (k, n) weight x idf per occurrence
    use_emotion: bool
    emo_offsets: np.ndarray
    emo_blob: np.ndarray
    emo_contrib: np.ndarray  # (k, m)
    use_sentiment: bool
    pos_offsets: np.ndarray
    pos_blob: np.ndarray
    neg_offsets: np.ndarray
    neg_blob: np.ndarray
    negation_offsets: np.ndarray
    negation_blob: np.ndarray
    sentiment_weights: np.ndarray  # (k, 4): pos, neg, net, negations
    use_semantic: bool
    sem_offsets: np.ndarray
    sem_blob: np.ndarray
    sem_contrib: np.ndarray  # (k, s) projection of each word vector
    abbrev_offsets: np.ndarray
    abbrev_blob: np.ndarray


def _abbrev_tables() -> tuple[np.ndarray, np.ndarray]:
    return pack_strings(sorted(ABBREVIATIONS))


def abbreviation_tables() -> tuple[np.ndarray, np.ndarray]:
    """Packed abbreviation table (shared by the tokenizer parity tests)."""
    return _abbrev_tables()


def build_plan(
    rows: Sequence[tuple[str, LinearModel]],
    binary: bool,
    ngram_model: NgramModel | None = None,
    emotion_lexicon: EmotionLexicon | None = None,
    sentiment_lexicon: SentimentLexicon | None = None,
    wordspace: WordSpace | None = None,
    unigram_allowlist: frozenset[str] | None = None,
    bigram_allowlist: frozenset[str] | None = None,
) -> ScoringPlan:
    """Flatten models and resources into one scoring plan.

    ``rows`` lists (label, model) in priority order.  Fragment tables are
    only built for the resources that are present; a binary plan must have
    exactly one row.
    """
    if binary and len(rows) != 1:
        raise ValueError("binary plans take exactly one model row")
    k = len(rows)
    models = [m for _, m in rows]
    if binary:
        labels: tuple[str, ...] = ("yes", "no")
    else:
        labels = tuple(label for label, _ in rows)
    biases = np.array([m.bias for m in models], dtype=np.float64)

    use_vocab = ngram_model is not None
    use_bigrams = False
    vocab_offsets, vocab_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    vocab_contrib = np.zeros((k, 0), dtype=np.float64)
    if use_vocab:
        unigrams = [
            t for t in ngram_model.unigrams
            if unigram_allowlist is None or t in unigram_allowlist
        ]
        bigrams = [
            t for t in ngram_model.bigrams
            if bigram_allowlist is None or t in bigram_allowlist
        ]
        use_bigrams = bool(bigrams)
        terms = sorted(unigrams + bigrams)  # bigrams contain a space: no collisions
        vocab_offsets, vocab_blob = pack_strings(terms)
        vocab_contrib = np.zeros((k, len(terms)), dtype=np.float64)
        for c, model in enumerate(models):
            weights = model.weights
            for i, term in enumerate(terms):
                prefix = BIGRAM_PREFIX if " " in term else UNIGRAM_PREFIX
                w = weights.get(prefix + term)
                if w is not None:
                    vocab_contrib[c, i] = w * ngram_model.idf[term]

    use_emotion = emotion_lexicon is not None
    emo_offsets, emo_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    emo_contrib = np.zeros((k, 0), dtype=np.float64)
    if use_emotion:
        words = sorted(emotion_lexicon.all_words())
        emo_offsets, emo_blob = pack_strings(words)
        emo_contrib = np.zeros((k, len(words)), dtype=np.float64)
        for c, model in enumerate(models):
            for e in EMOTIONS:
                w = model.weights.get(EMOTION_PREFIX + e)
                if w is None:
                    continue
                members = emotion_lexicon.words.get(e, frozenset())
                for i, word in enumerate(words):
                    if word in members:
                        emo_contrib[c, i] += w * emotion_lexicon.weight(word)

    use_sentiment = sentiment_lexicon is not None
    pos_offsets, pos_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    neg_offsets, neg_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    negation_offsets, negation_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    sentiment_weights = np.zeros((k, 4), dtype=np.float64)
    if use_sentiment:
        pos_offsets, pos_blob = pack_strings(sorted(sentiment_lexicon.positive))
        neg_offsets, neg_blob = pack_strings(sorted(sentiment_lexicon.negative))
        negation_offsets, negation_blob = pack_strings(sorted(sentiment_lexicon.negations))
        for c, model in enumerate(models):
            for j, name in enumerate((SENT_POS, SENT_NEG, SENT_NET, SENT_NEGATIONS)):
                sentiment_weights[c, j] = model.weights.get(name, 0.0)

    use_semantic = wordspace is not None
    sem_offsets, sem_blob = _EMPTY_OFFSETS, _EMPTY_BLOB
    sem_contrib = np.zeros((k, 0), dtype=np.float64)
    if use_semantic:
        words = sorted(wordspace.vectors)
        sem_offsets, sem_blob = pack_strings(words)
        dense = np.zeros((k, wordspace.dim), dtype=np.float64)
        for c, model in enumerate(models):
            for name, w in model.weights.items():
                if name.startswith(SEMANTIC_PREFIX):
                    dense[c, int(name[len(SEMANTIC_PREFIX):])] = w
        matrix = np.stack([wordspace.vectors[w] for w in words]) if words else np.zeros((0, wordspace.dim))
        sem_contrib = np.ascontiguousarray(dense @ matrix.T)  # (k, s)

    abbrev_offsets, abbrev_blob = _abbrev_tables()
    return ScoringPlan(
        labels=labels,
        binary=binary,
        biases=biases,
        use_vocab=use_vocab,
        use_bigrams=use_bigrams,
        vocab_offsets=vocab_offsets,
        vocab_blob=vocab_blob,
        vocab_contrib=np.ascontiguousarray(vocab_contrib),
        use_emotion=use_emotion,
        emo_offsets=emo_offsets,
        emo_blob=emo_blob,
        emo_contrib=np.ascontiguousarray(emo_contrib),
        use_sentiment=use_sentiment,
        pos_offsets=pos_offsets,
        pos_blob=pos_blob,
        neg_offsets=neg_offsets,
        neg_blob=neg_blob,
        negation_offsets=negation_offsets,
        negation_blob=negation_blob,
        sentiment_weights=np.ascontiguousarray(sentiment_weights),
        use_semantic=use_semantic,
        sem_offsets=sem_offsets,
        sem_blob=sem_blob,
        sem_contrib=np.ascontiguousarray(sem_contrib),
        abbrev_offsets=abbrev_offsets,
        abbrev_blob=abbrev_blob,
    )
