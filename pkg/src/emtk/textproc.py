"""Tokenization, sentence splitting, n-grams, and tf-idf weighting.

The tokenizer lowercases its input and then emits, in order:

* ``<url>`` for anything starting ``http://``, ``https://`` or ``www.``
  (consumed up to the next whitespace), and for the literal ``<url>``;
* word tokens: maximal runs of ASCII letters/digits/apostrophes or non-ASCII
  non-space characters, with leading/trailing apostrophes trimmed;
* one ``!`` or ``?`` per maximal same-character run (kept because they carry
  emotional emphasis).

Everything else is dropped.  Sentence splitting breaks after ``.``, ``!`` or
``?`` followed by whitespace or end of text, except when the chunk before a
period is a known abbreviation (``e.g.``, ``etc.``, ...).  Bigrams never
cross sentence boundaries.

These rules are duplicated by the compiled scoring kernel
(:mod:`emtk._kernel`); change them in both places or the backends diverge.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._data import read_word_list
from .corpus import Document
from .errors import ResourceFormatError

URL_TOKEN = "<url>"
URL_PREFIXES = ("http://", "https://", "www.")

#: Non-ASCII code points treated as whitespace (every str.isspace() > U+007F).
UNICODE_SPACES = "                 　"
ASCII_SPACES = " \t\n\r\f\v"

ABBREVIATIONS = read_word_list("abbreviations.txt")

_NON_ASCII_WORD = r"[^\x00-\x7f" + UNICODE_SPACES + "]"
_WORD_CHAR = rf"(?:[a-z0-9']|{_NON_ASCII_WORD})"
_NON_SPACE = r"[^ \t\n\r\f\v" + UNICODE_SPACES + "]"
_TOKEN_RE = re.compile(
    rf"(?:https?://|www\.){_NON_SPACE}*|<url>|{_WORD_CHAR}+|!+|\?+"
)

UNIGRAM_PREFIX = "uni:"
BIGRAM_PREFIX = "bi:"

UNIGRAMS_FILENAME = "UnigramsList.txt"
BIGRAMS_FILENAME = "BigramsList.txt"
UNIGRAM_IDF_FILENAME = "UnigramsIDF.txt"
BIGRAM_IDF_FILENAME = "BigramsIDF.txt"


@dataclass(frozen=True)
class Token:
    """A lowercased surface form and its 0-based position in the stream."""

    surface: str
    position: int


@dataclass(frozen=True)
class NgramModel:
    """The trained vocabulary: sorted n-gram lists plus their idf table."""

    unigrams: tuple[str, ...]
    bigrams: tuple[str, ...]
    idf: Mapping[str, float]


def _is_space_char(ch: str) -> bool:
    return ch in ASCII_SPACES or ch in UNICODE_SPACES


def tokenize(text: str) -> list[Token]:
    """Lowercase and tokenize; returns an empty list for empty text."""
    tokens: list[Token] = []
    for match in _TOKEN_RE.finditer(text.lower()):
        s = match.group()
        first = s[0]
        if first == "!" or first == "?":
            surface = first
        elif first == "<" or s.startswith(URL_PREFIXES):
            surface = URL_TOKEN
        else:
            surface = s.strip("'")
            if not surface:
                continue
        tokens.append(Token(surface, len(tokens)))
    return tokens


def token_surfaces(text: str) -> list[str]:
    return [t.surface for t in tokenize(text)]


def _chunk_before(text: str, i: int) -> str:
    j = i
    while j > 0 and not _is_space_char(text[j - 1]):
        j -= 1
    return text[j:i]


def split_sentences(text: str) -> list[str]:
    """Split into sentences; never returns empty strings."""
    sentences: list[str] = []
    start = 0
    n = len(text)
    for i in range(n):
        ch = text[i]
        if ch not in ".!?":
            continue
        if i + 1 < n and not _is_space_char(text[i + 1]):
            continue
        if ch == "." and _chunk_before(text, i).lower() in ABBREVIATIONS:
            continue
        sentence = text[start : i + 1].strip()
        if sentence:
            sentences.append(sentence)
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def extract_ngrams(tokens: Sequence[Token] | Sequence[str], n: int) -> list[str]:
    """All contiguous n-token sequences, order and multiplicity preserved.

    Operates on one sentence's tokens; callers keep bigrams from crossing
    sentence boundaries by splitting first (see :func:`document_terms`).
    """
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    surfaces = [t.surface if isinstance(t, Token) else t for t in tokens]
    if n == 1:
        return surfaces
    return [f"{a} {b}" for a, b in zip(surfaces, surfaces[1:])]


def document_terms(text: str) -> tuple[list[str], list[str]]:
    """Unigrams and sentence-bounded bigrams for one document, in order."""
    unigrams: list[str] = []
    bigrams: list[str] = []
    for sentence in split_sentences(text):
        surfaces = token_surfaces(sentence)
        unigrams.extend(surfaces)
        bigrams.extend(extract_ngrams(surfaces, 2))
    return unigrams, bigrams


def build_ngram_model(corpus: Sequence[Document], min_df: int = 2) -> NgramModel:
    """Build the n-gram vocabulary and idf table from a corpus.

    Vocabulary keeps n-grams whose document frequency is at least ``min_df``;
    idf(t) = ln(N / df(t)).
    """
    if not corpus:
        raise ValueError("cannot build an n-gram model from an empty corpus")
    n_docs = len(corpus)
    uni_df: Counter[str] = Counter()
    bi_df: Counter[str] = Counter()
    for doc in corpus:
        unigrams, bigrams = document_terms(doc.text)
        uni_df.update(set(unigrams))
        bi_df.update(set(bigrams))

    unigrams = tuple(sorted(t for t, df in uni_df.items() if df >= min_df))
    bigrams = tuple(sorted(t for t, df in bi_df.items() if df >= min_df))
    idf = {t: math.log(n_docs / uni_df[t]) for t in unigrams}
    idf.update({t: math.log(n_docs / bi_df[t]) for t in bigrams})
    return NgramModel(unigrams=unigrams, bigrams=bigrams, idf=idf)


def tfidf_vector(doc: Document, model: NgramModel) -> dict[str, float]:
    """Sparse tf-idf features (``uni:``/``bi:`` namespaces); zero values and
    out-of-vocabulary n-grams are omitted."""
    unigrams, bigrams = document_terms(doc.text)
    uni_vocab = set(model.unigrams)
    bi_vocab = set(model.bigrams)
    vector: dict[str, float] = {}
    for counts, vocab, prefix in (
        (Counter(unigrams), uni_vocab, UNIGRAM_PREFIX),
        (Counter(bigrams), bi_vocab, BIGRAM_PREFIX),
    ):
        for term, tf in counts.items():
            if term not in vocab:
                continue
            value = tf * model.idf[term]
            if value != 0.0:
                vector[prefix + term] = value
    return vector


def save_word_lines(words: Iterable[str], path: Path) -> None:
    path.write_text("".join(f"{w}\n" for w in words), encoding="utf-8")


def load_word_lines(path: Path) -> list[str]:
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line]


def save_idf_table(idf: Mapping[str, float], path: Path) -> None:
    """One ``term<TAB>idf`` per line, sorted by term; floats via repr so the
    persisted table reloads bit-identically."""
    lines = [f"{term}\t{idf[term]!r}\n" for term in sorted(idf)]
    path.write_text("".join(lines), encoding="utf-8")


def load_idf_table(path: Path) -> dict[str, float]:
    table: dict[str, float] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        term, sep, value = line.partition("\t")
        if not sep:
            raise ResourceFormatError(f"{path.name} line {line_no}: expected term<TAB>idf")
        try:
            table[term] = float(value)
        except ValueError as exc:
            raise ResourceFormatError(
                f"{path.name} line {line_no}: bad idf value {value!r}"
            ) from exc
    return table


def save_ngram_model(model: NgramModel, ngrams_dir: Path, idfs_dir: Path) -> None:
    """Persist vocabulary lists and idf tables in their standard filenames."""
    ngrams_dir.mkdir(parents=True, exist_ok=True)
    idfs_dir.mkdir(parents=True, exist_ok=True)
    save_word_lines(model.unigrams, ngrams_dir / UNIGRAMS_FILENAME)
    save_word_lines(model.bigrams, ngrams_dir / BIGRAMS_FILENAME)
    save_idf_table({t: model.idf[t] for t in model.unigrams}, idfs_dir / UNIGRAM_IDF_FILENAME)
    save_idf_table({t: model.idf[t] for t in model.bigrams}, idfs_dir / BIGRAM_IDF_FILENAME)


def load_ngram_model(ngrams_dir: Path, idfs_dir: Path) -> NgramModel:
    unigrams = tuple(load_word_lines(ngrams_dir / UNIGRAMS_FILENAME))
    bigrams = tuple(load_word_lines(ngrams_dir / BIGRAMS_FILENAME))
    idf = load_idf_table(idfs_dir / UNIGRAM_IDF_FILENAME)
    idf.update(load_idf_table(idfs_dir / BIGRAM_IDF_FILENAME))
    missing = [t for t in unigrams + bigrams if t not in idf]
    if missing:
        raise ResourceFormatError(
            f"idf tables are missing {len(missing)} vocabulary entries (first: {missing[0]!r})"
        )
    return NgramModel(unigrams=unigrams, bigrams=bigrams, idf=idf)
