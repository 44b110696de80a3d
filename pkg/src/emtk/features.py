"""Feature extractors and per-document feature assembly.

Fragments use disjoint name prefixes so any union is collision-free:

* ``uni:`` / ``bi:``  tf-idf weighted n-grams (keyword suite),
* ``lex:emo:``        emotion-lexicon hit weights,
* ``lex:sent:``       sentiment-lexicon counters,
* ``sem:``            word-space document embedding components,
* ``pol:`` / ``mood:`` optional politeness and sentence-mood heuristics.

The feature mode letters select the fragments: K keyword only, L lexicons
only, S semantic only, A all of them (politeness/mood only in mode A and only
when enabled).  A word space is required for modes S and A.

Word spaces are built by seeded random indexing: every word owns a sparse
ternary index vector derived from a hash of (seed, word), and a word's
embedding is the sum of the index vectors of its neighbors within a token
window across the corpus.  The construction is deterministic bit-for-bit for
a fixed (corpus, dim, window, seed) and needs no external model; externally
trained spaces can be supplied through the documented file format instead.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._data import read_data_text, read_word_list
from .corpus import EMOTIONS, Document
from .errors import ConfigurationError, ResourceFormatError
from .textproc import (
    NgramModel,
    split_sentences,
    tfidf_vector,
    token_surfaces,
)

EMOTION_PREFIX = "lex:emo:"
SENT_POS = "lex:sent:pos"
SENT_NEG = "lex:sent:neg"
SENT_NET = "lex:sent:net"
SENT_NEGATIONS = "lex:sent:negations"
SEMANTIC_PREFIX = "sem:"
POLITENESS_FEATURE = "pol:politeness"
MOOD_PREFIX = "mood:"

MOODS = ("indicative", "imperative", "conditional")
NEGATION_WINDOW = 2  # tokens looked back for a sentiment-flip

WORDSPACE_MAGIC = "EMTK-DSM1"

CONDITIONAL_MODALS = frozenset({"would", "could", "should", "might", "may"})
IMPERATIVE_VERBS = read_word_list("imperative_verbs.txt")

_POLITENESS_MARKERS = tuple(
    sorted(read_word_list("politeness_markers.txt"), key=len, reverse=True)
)
_POLITENESS_RE = re.compile(
    r"\b(?:" + "|".join(re.escape(m) for m in _POLITENESS_MARKERS) + r")\b"
)


@dataclass(frozen=True)
class EmotionLexicon:
    """Per-emotion word sets, optionally weighted by a word idf table."""

    words: Mapping[str, frozenset[str]]
    idf: Mapping[str, float] | None = None

    def weight(self, word: str) -> float:
        if self.idf is None:
            return 1.0
        return self.idf.get(word, 1.0)

    def with_idf(self, idf: Mapping[str, float]) -> "EmotionLexicon":
        return EmotionLexicon(words=self.words, idf=dict(idf))

    def all_words(self) -> frozenset[str]:
        out: set[str] = set()
        for words in self.words.values():
            out |= words
        return frozenset(out)


@dataclass(frozen=True)
class SentimentLexicon:
    positive: frozenset[str]
    negative: frozenset[str]
    negations: frozenset[str]

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ValueError(f"positive/negative lexicons overlap: {sorted(overlap)[:5]}")


@dataclass(frozen=True)
class WordSpace:
    """A distributional semantic model: word -> dense vector of size dim."""

    dim: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("word-space dimension must be positive")


@dataclass(frozen=True)
class FeatureConfig:
    mode: str = "A"
    politeness_mood: bool = False
    vector_dim: int = 600
    unigram_allowlist: frozenset[str] | None = None
    bigram_allowlist: frozenset[str] | None = None

    def __post_init__(self):
        if self.mode not in ("A", "S", "L", "K"):
            raise ConfigurationError(f"unknown feature mode {self.mode!r} (expected A, S, L or K)")
        if self.vector_dim <= 0:
            raise ConfigurationError("vector size must be positive")


def load_emotion_lexicon(data: bytes | str) -> EmotionLexicon:
    """Parse ``emotion<TAB>word`` lines; unknown emotion names are rejected."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    words: dict[str, set[str]] = {e: set() for e in EMOTIONS}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        emotion, sep, word = line.partition("\t")
        emotion = emotion.strip()
        word = word.strip().lower()
        if not sep or not word:
            raise ResourceFormatError(f"emotion lexicon line {line_no}: expected emotion<TAB>word")
        if emotion not in EMOTIONS:
            raise ResourceFormatError(f"emotion lexicon line {line_no}: unknown emotion {emotion!r}")
        words[emotion].add(word)
    return EmotionLexicon(words={e: frozenset(w) for e, w in words.items()})


def default_emotion_lexicon() -> EmotionLexicon:
    return load_emotion_lexicon(read_data_text("emotion_lexicon.tsv"))


def default_sentiment_lexicon() -> SentimentLexicon:
    return SentimentLexicon(
        positive=read_word_list("sentiment_positive.txt"),
        negative=read_word_list("sentiment_negative.txt"),
        negations=read_word_list("sentiment_negations.txt"),
    )


def load_allowlist(path: Path) -> frozenset[str]:
    """One n-gram per line (the ``-ul``/``-bl`` file format)."""
    return frozenset(
        line.strip().lower()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    )


def emotion_lexicon_features(tokens: Sequence[str], lexicon: EmotionLexicon) -> dict[str, float]:
    """Per-emotion sum of hit weights over token occurrences; zeros omitted."""
    vector: dict[str, float] = {}
    for emotion in EMOTIONS:
        words = lexicon.words.get(emotion, frozenset())
        if not words:
            continue
        total = 0.0
        for token in tokens:
            if token in words:
                total += lexicon.weight(token)
        if total != 0.0:
            vector[EMOTION_PREFIX + emotion] = total
    return vector


def sentiment_lexicon_features(tokens: Sequence[str], lexicon: SentimentLexicon) -> dict[str, float]:
    """Positive/negative word counts, their net score, and negation count.

    A sentiment word flips its contribution when one of the two preceding
    tokens is a negation word ("not great" counts as negative).
    """
    pos = neg = negations = 0
    for i, token in enumerate(tokens):
        negated = any(
            tokens[j] in lexicon.negations for j in range(max(0, i - NEGATION_WINDOW), i)
        )
        if token in lexicon.positive:
            if negated:
                neg += 1
            else:
                pos += 1
        elif token in lexicon.negative:
            if negated:
                pos += 1
            else:
                neg += 1
        if token in lexicon.negations:
            negations += 1
    vector: dict[str, float] = {}
    for name, value in ((SENT_POS, pos), (SENT_NEG, neg), (SENT_NET, pos - neg), (SENT_NEGATIONS, negations)):
        if value != 0:
            vector[name] = float(value)
    return vector


def _index_vector(word: str, dim: int, seed: int, nnz: int) -> np.ndarray:
    """Sparse ternary index vector from a counter-mode hash of (seed, word)."""
    v = np.zeros(dim, dtype=np.float64)
    key = f"{seed}\x1f{word}".encode("utf-8")
    placed = 0
    counter = 0
    while placed < nnz:
        digest = hashlib.sha256(key + counter.to_bytes(4, "big")).digest()
        counter += 1
        for off in range(0, 32, 8):
            chunk = int.from_bytes(digest[off : off + 8], "big")
            pos = (chunk >> 1) % dim
            if v[pos] != 0.0:
                continue
            v[pos] = 1.0 if chunk & 1 else -1.0
            placed += 1
            if placed == nnz:
                break
    return v


def build_wordspace(
    corpus: Sequence[Document],
    dim: int,
    window: int = 2,
    seed: int = 0,
) -> WordSpace:
    """Random-indexing word space over the corpus token stream.

    Deterministic for fixed (corpus, dim, window, seed); a word's embedding is
    the sum of the index vectors of every neighbor within ``window`` tokens.
    """
    if dim <= 0:
        raise ValueError("dim must be positive")
    if window <= 0:
        raise ValueError("window must be positive")
    if not corpus:
        raise ValueError("cannot build a word space from an empty corpus")
    nnz = min(8, max(2, dim // 8))
    index_cache: dict[str, np.ndarray] = {}

    def index_of(word: str) -> np.ndarray:
        vec = index_cache.get(word)
        if vec is None:
            vec = _index_vector(word, dim, seed, nnz)
            index_cache[word] = vec
        return vec

    vectors: dict[str, np.ndarray] = {}
    for doc in corpus:
        tokens = token_surfaces(doc.text)
        for i, word in enumerate(tokens):
            acc = vectors.get(word)
            if acc is None:
                acc = np.zeros(dim, dtype=np.float64)
                vectors[word] = acc
            lo = max(0, i - window)
            hi = min(len(tokens), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    acc += index_of(tokens[j])
    return WordSpace(dim=dim, vectors=vectors)


def save_wordspace(ws: WordSpace) -> bytes:
    """Serialize to the ``dsm.bin`` format: a ``EMTK-DSM1 <count> <dim>``
    header line, then one ``word<TAB>v1 v2 ...`` line per word, sorted."""
    lines = [f"{WORDSPACE_MAGIC} {len(ws.vectors)} {ws.dim}"]
    for word in sorted(ws.vectors):
        values = " ".join(repr(x) for x in ws.vectors[word].tolist())
        lines.append(f"{word}\t{values}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_wordspace(data: bytes) -> WordSpace:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ResourceFormatError(f"word space is not valid UTF-8: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ResourceFormatError("word space file is empty")
    header = lines[0].split()
    if len(header) != 3 or header[0] != WORDSPACE_MAGIC:
        raise ResourceFormatError(f"bad word-space header {lines[0]!r}")
    try:
        count, dim = int(header[1]), int(header[2])
    except ValueError as exc:
        raise ResourceFormatError(f"bad word-space header {lines[0]!r}") from exc
    if dim <= 0:
        raise ResourceFormatError("word-space dimension must be positive")
    records = [line for line in lines[1:] if line]
    if len(records) != count:
        raise ResourceFormatError(
            f"word space declares {count} words but contains {len(records)} records"
        )
    vectors: dict[str, np.ndarray] = {}
    for line_no, line in enumerate(records, start=2):
        word, sep, values = line.partition("\t")
        if not sep:
            raise ResourceFormatError(f"word space line {line_no}: expected word<TAB>values")
        if word in vectors:
            raise ResourceFormatError(f"word space line {line_no}: duplicate word {word!r}")
        try:
            vec = np.array([float(x) for x in values.split()], dtype=np.float64)
        except ValueError as exc:
            raise ResourceFormatError(f"word space line {line_no}: bad vector value") from exc
        if vec.shape != (dim,):
            raise ResourceFormatError(
                f"word space line {line_no}: expected {dim} values, found {vec.size}"
            )
        vectors[word] = vec
    return WordSpace(dim=dim, vectors=vectors)


def document_vector(tokens: Sequence[str], ws: WordSpace) -> np.ndarray:
    """Arithmetic mean of in-vocabulary token vectors; zero vector when none."""
    known = [ws.vectors[t] for t in tokens if t in ws.vectors]
    if not known:
        return np.zeros(ws.dim, dtype=np.float64)
    return np.mean(np.stack(known), axis=0)


def semantic_features(tokens: Sequence[str], ws: WordSpace) -> dict[str, float]:
    vec = document_vector(tokens, ws)
    return {f"{SEMANTIC_PREFIX}{i}": v for i, v in enumerate(vec.tolist()) if v != 0.0}


def politeness_score(sentences: Sequence[str]) -> float:
    """Fraction of sentences containing a politeness marker."""
    if not sentences:
        return 0.0
    hits = sum(1 for s in sentences if _POLITENESS_RE.search(s.lower()))
    return hits / len(sentences)


def _sentence_mood(sentence: str) -> str:
    tokens = token_surfaces(sentence)
    if not tokens:
        return "indicative"
    if tokens[0] == "if" or any(t in CONDITIONAL_MODALS for t in tokens):
        return "conditional"
    lead = tokens[0]
    if lead == "please" and len(tokens) > 1:
        lead = tokens[1]
    if lead in IMPERATIVE_VERBS:
        return "imperative"
    return "indicative"


def mood_features(sentences: Sequence[str]) -> dict[str, float]:
    """One-hot majority sentence mood; ties resolve indicative, then
    imperative, then conditional."""
    if not sentences:
        return {}
    counts = Counter(_sentence_mood(s) for s in sentences)
    best = max(MOODS, key=lambda m: (counts.get(m, 0), -MOODS.index(m)))
    return {MOOD_PREFIX + best: 1.0}


def politeness_mood_features(sentences: Sequence[str]) -> dict[str, float]:
    vector = mood_features(sentences)
    score = politeness_score(sentences)
    if score != 0.0:
        vector[POLITENESS_FEATURE] = score
    return vector


def _keyword_fragment(doc: Document, model: NgramModel, config: FeatureConfig) -> dict[str, float]:
    fragment = tfidf_vector(doc, model)
    if config.unigram_allowlist is None and config.bigram_allowlist is None:
        return fragment
    out = {}
    for name, value in fragment.items():
        if name.startswith("uni:"):
            if config.unigram_allowlist is not None and name[4:] not in config.unigram_allowlist:
                continue
        elif config.bigram_allowlist is not None and name[3:] not in config.bigram_allowlist:
            continue
        out[name] = value
    return out


def assemble_features(
    doc: Document,
    config: FeatureConfig,
    model: NgramModel | None = None,
    emotion_lexicon: EmotionLexicon | None = None,
    sentiment_lexicon: SentimentLexicon | None = None,
    wordspace: WordSpace | None = None,
) -> dict[str, float]:
    """Assemble the polarity feature vector for one document.

    Mode K needs the n-gram model, L the lexicons, S the word space, and A all
    of them; a missing required resource raises ConfigurationError.
    """
    mode = config.mode
    if mode in ("A", "K") and model is None:
        raise ConfigurationError(f"feature mode {mode} requires an n-gram model")
    if mode in ("A", "L") and (emotion_lexicon is None or sentiment_lexicon is None):
        raise ConfigurationError(f"feature mode {mode} requires the lexicons")
    if mode in ("A", "S") and wordspace is None:
        raise ConfigurationError(f"feature mode {mode} requires a word space")

    vector: dict[str, float] = {}
    if mode in ("A", "K"):
        vector.update(_keyword_fragment(doc, model, config))
    if mode in ("A", "L"):
        tokens = token_surfaces(doc.text)
        vector.update(emotion_lexicon_features(tokens, emotion_lexicon))
        vector.update(sentiment_lexicon_features(tokens, sentiment_lexicon))
    if mode in ("A", "S"):
        vector.update(semantic_features(token_surfaces(doc.text), wordspace))
    if mode == "A" and config.politeness_mood:
        vector.update(politeness_mood_features(split_sentences(doc.text)))
    return vector


def emotion_feature_vector(
    doc: Document,
    model: NgramModel,
    lexicon: EmotionLexicon,
    politeness_mood: bool = False,
) -> dict[str, float]:
    """The emotion classifier's suite: tf-idf n-grams plus emotion-lexicon
    weights, with politeness/mood only when enabled."""
    vector = tfidf_vector(doc, model)
    vector.update(emotion_lexicon_features(token_surfaces(doc.text), lexicon))
    if politeness_mood:
        vector.update(politeness_mood_features(split_sentences(doc.text)))
    return vector


def compute_emotion_word_idf(corpus: Sequence[Document], lexicon: EmotionLexicon) -> dict[str, float]:
    """idf of every lexicon word over the corpus (only words that occur)."""
    if not corpus:
        raise ValueError("cannot compute idf over an empty corpus")
    words = lexicon.all_words()
    df: Counter[str] = Counter()
    for doc in corpus:
        present = set(token_surfaces(doc.text)) & words
        df.update(present)
    n_docs = len(corpus)
    return {w: float(np.log(n_docs / df[w])) for w in sorted(df)}
