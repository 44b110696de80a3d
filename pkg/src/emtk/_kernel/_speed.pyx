# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch classifier: tokenize + score without the GIL.

Mirrors the pure-Python rules in emtk.textproc / emtk.features exactly:
lowercased input (the wrapper lowercases before encoding), word runs of
[a-z0-9'] plus non-ASCII non-space bytes, <url> collapsing, single-char
!/? run tokens, sentence breaks after terminators followed by whitespace
(with the abbreviation stop-list for periods), bigrams confined to
sentences, and the two-token negation window for sentiment counts.

Scores accumulate per token occurrence (w * idf per hit), which is
algebraically the pure path's tf * idf * w; floating-point rounding may
differ from the pure engine in the last ulp, so cross-backend tests compare
labels, while same-backend transcripts are bit-reproducible.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcmp, memcpy

import numpy as np

cdef const char* _URL_TOKEN = "<url>"
cdef const char* _URL_LITERAL = "<url>"
cdef const char* _HTTP = "http://"
cdef const char* _HTTPS = "https://"
cdef const char* _WWW = "www."


cdef inline bint _is_ascii_space(unsigned char c) nogil:
    return c == 32 or (9 <= c <= 13)


cdef inline int _space_seq(const unsigned char* s, Py_ssize_t i, Py_ssize_t n) nogil:
    """Byte length of the non-ASCII whitespace sequence starting at i, or 0."""
    cdef unsigned char c = s[i]
    if c < 0xC2:
        return 0
    if c == 0xC2 and i + 1 < n and (s[i + 1] == 0x85 or s[i + 1] == 0xA0):
        return 2
    if c == 0xE1 and i + 2 < n and s[i + 1] == 0x9A and s[i + 2] == 0x80:
        return 3
    if c == 0xE2 and i + 2 < n:
        if s[i + 1] == 0x80 and ((0x80 <= s[i + 2] <= 0x8A) or s[i + 2] == 0xA8 or s[i + 2] == 0xA9 or s[i + 2] == 0xAF):
            return 3
        if s[i + 1] == 0x81 and s[i + 2] == 0x9F:
            return 3
    if c == 0xE3 and i + 2 < n and s[i + 1] == 0x80 and s[i + 2] == 0x80:
        return 3
    return 0


cdef inline bint _is_word_char(const unsigned char* s, Py_ssize_t i, Py_ssize_t n) nogil:
    cdef unsigned char c = s[i]
    if (97 <= c <= 122) or (48 <= c <= 57) or c == 39:  # a-z 0-9 '
        return True
    if c >= 0x80:
        return _space_seq(s, i, n) == 0
    return False


cdef inline bint _is_space_at(const unsigned char* s, Py_ssize_t i, Py_ssize_t n) nogil:
    if _is_ascii_space(s[i]):
        return True
    return s[i] >= 0x80 and _space_seq(s, i, n) != 0


cdef inline bint _space_ends_at(const unsigned char* s, Py_ssize_t j, Py_ssize_t n) nogil:
    """True when a whitespace character's encoding ends exactly at index j."""
    if j <= 0:
        return False
    if _is_ascii_space(s[j - 1]):
        return True
    if j >= 2 and _space_seq(s, j - 2, n) == 2:
        return True
    if j >= 3 and _space_seq(s, j - 3, n) == 3:
        return True
    return False


cdef inline bint _starts_with(const unsigned char* s, Py_ssize_t i, Py_ssize_t n,
                              const char* lit, Py_ssize_t litlen) nogil:
    if i + litlen > n:
        return False
    return memcmp(s + i, lit, litlen) == 0


cdef inline int _lookup(const unsigned char* key, Py_ssize_t klen,
                        const int[::1] offsets, const unsigned char[::1] blob) nogil:
    """Binary search in a packed sorted string table; -1 when absent."""
    cdef int lo = 0
    cdef int hi = <int>offsets.shape[0] - 1  # number of entries
    cdef int mid, start, length, cmplen, c
    if hi <= 0 or klen <= 0:
        return -1
    while lo < hi:
        mid = (lo + hi) >> 1
        start = offsets[mid]
        length = offsets[mid + 1] - start
        cmplen = <int>klen if klen < length else length
        c = memcmp(&blob[start], key, cmplen)
        if c == 0:
            if length < klen:
                c = -1
            elif length > klen:
                c = 1
        if c < 0:
            lo = mid + 1
        elif c > 0:
            hi = mid
        else:
            return mid
    return -1


cdef inline bint _break_at(const unsigned char* s, Py_ssize_t term, Py_ssize_t n,
                           const int[::1] abbrev_offsets,
                           const unsigned char[::1] abbrev_blob) nogil:
    """Sentence break at terminator index ``term``?  The caller has already
    checked that the following character is whitespace or end of text."""
    cdef Py_ssize_t j
    if s[term] != 46:  # '!' and '?' always break
        return True
    j = term
    while j > 0 and not _space_ends_at(s, j, n):
        j -= 1
    return _lookup(s + j, term - j, abbrev_offsets, abbrev_blob) < 0


cdef bint _next_token(const unsigned char* s, Py_ssize_t n, Py_ssize_t* io,
                      const unsigned char** tok, Py_ssize_t* tlen,
                      bint* brk_before, bint* brk_after,
                      const int[::1] abbrev_offsets,
                      const unsigned char[::1] abbrev_blob) nogil:
    """Scan forward to the next token.  ``brk_before`` reports a sentence
    break among the skipped characters, ``brk_after`` one attached to the
    token's own terminator (a '!'/'?' token or a URL ending in .!?)."""
    cdef Py_ssize_t i = io[0]
    cdef Py_ssize_t start, end
    cdef unsigned char c
    cdef int sl
    brk_before[0] = False
    brk_after[0] = False
    while i < n:
        c = s[i]
        if _is_ascii_space(c):
            i += 1
            continue
        if c >= 0x80:
            sl = _space_seq(s, i, n)
            if sl:
                i += sl
                continue
        if c == 60 and _starts_with(s, i, n, _URL_LITERAL, 5):  # '<url>'
            io[0] = i + 5
            tok[0] = <const unsigned char*>_URL_TOKEN
            tlen[0] = 5
            return True
        if c == 33 or c == 63:  # '!' / '?'
            start = i
            while i < n and s[i] == c:
                i += 1
            if i >= n or _is_space_at(s, i, n):
                brk_after[0] = True
            io[0] = i
            tok[0] = s + start
            tlen[0] = 1
            return True
        if _is_word_char(s, i, n):
            if _starts_with(s, i, n, _HTTP, 7) or _starts_with(s, i, n, _HTTPS, 8) or _starts_with(s, i, n, _WWW, 4):
                while i < n and not _is_space_at(s, i, n):
                    i += 1
                c = s[i - 1]
                if (c == 46 or c == 33 or c == 63) and _break_at(s, i - 1, n, abbrev_offsets, abbrev_blob):
                    brk_after[0] = True
                io[0] = i
                tok[0] = <const unsigned char*>_URL_TOKEN
                tlen[0] = 5
                return True
            start = i
            while i < n and _is_word_char(s, i, n):
                i += 1
            end = i
            while start < end and s[start] == 39:
                start += 1
            while end > start and s[end - 1] == 39:
                end -= 1
            if end > start:
                io[0] = i
                tok[0] = s + start
                tlen[0] = end - start
                return True
            continue
        # Non-token character; a period here may still end the sentence.
        if c == 46 and (i + 1 >= n or _is_space_at(s, i + 1, n)):
            if _break_at(s, i, n, abbrev_offsets, abbrev_blob):
                brk_before[0] = True
        i += 1
    io[0] = i
    return False


cdef void _score_doc(const unsigned char* s, Py_ssize_t n,
                     Py_ssize_t k, bint binary,
                     const double[::1] biases,
                     bint use_vocab, bint use_bigrams,
                     const int[::1] vocab_offsets, const unsigned char[::1] vocab_blob,
                     const double[:, ::1] vocab_contrib,
                     bint use_emotion,
                     const int[::1] emo_offsets, const unsigned char[::1] emo_blob,
                     const double[:, ::1] emo_contrib,
                     bint use_sentiment,
                     const int[::1] pos_offsets, const unsigned char[::1] pos_blob,
                     const int[::1] neg_offsets, const unsigned char[::1] neg_blob,
                     const int[::1] negation_offsets, const unsigned char[::1] negation_blob,
                     const double[:, ::1] sentiment_weights,
                     bint use_semantic,
                     const int[::1] sem_offsets, const unsigned char[::1] sem_blob,
                     const double[:, ::1] sem_contrib,
                     const int[::1] abbrev_offsets, const unsigned char[::1] abbrev_blob,
                     unsigned char* bigram_buf,
                     double* scores, double* sem_acc,
                     int* out_label, double* out_score) nogil:
    cdef Py_ssize_t i = 0, c, blen
    cdef const unsigned char* tok = NULL
    cdef Py_ssize_t tlen = 0
    cdef const unsigned char* prev = NULL
    cdef Py_ssize_t prev_len = 0
    cdef bint brk_before = False, brk_after = False
    cdef bint neg1 = False, neg2 = False, negated, is_negation
    cdef long pos_count = 0, neg_count = 0, negation_count = 0
    cdef Py_ssize_t sem_n = 0
    cdef int idx, best

    for c in range(k):
        scores[c] = biases[c]
        sem_acc[c] = 0.0

    while _next_token(s, n, &i, &tok, &tlen, &brk_before, &brk_after,
                      abbrev_offsets, abbrev_blob):
        if brk_before:
            prev = NULL
        if use_vocab:
            idx = _lookup(tok, tlen, vocab_offsets, vocab_blob)
            if idx >= 0:
                for c in range(k):
                    scores[c] += vocab_contrib[c, idx]
            if use_bigrams and prev != NULL:
                memcpy(bigram_buf, prev, prev_len)
                bigram_buf[prev_len] = 32
                memcpy(bigram_buf + prev_len + 1, tok, tlen)
                blen = prev_len + 1 + tlen
                idx = _lookup(bigram_buf, blen, vocab_offsets, vocab_blob)
                if idx >= 0:
                    for c in range(k):
                        scores[c] += vocab_contrib[c, idx]
        if use_emotion:
            idx = _lookup(tok, tlen, emo_offsets, emo_blob)
            if idx >= 0:
                for c in range(k):
                    scores[c] += emo_contrib[c, idx]
        if use_sentiment:
            negated = neg1 or neg2
            if _lookup(tok, tlen, pos_offsets, pos_blob) >= 0:
                if negated:
                    neg_count += 1
                else:
                    pos_count += 1
            elif _lookup(tok, tlen, neg_offsets, neg_blob) >= 0:
                if negated:
                    pos_count += 1
                else:
                    neg_count += 1
            is_negation = _lookup(tok, tlen, negation_offsets, negation_blob) >= 0
            if is_negation:
                negation_count += 1
            neg2 = neg1
            neg1 = is_negation
        if use_semantic:
            idx = _lookup(tok, tlen, sem_offsets, sem_blob)
            if idx >= 0:
                for c in range(k):
                    sem_acc[c] += sem_contrib[c, idx]
                sem_n += 1
        prev = tok
        prev_len = tlen
        if brk_after:
            prev = NULL

    if use_sentiment:
        for c in range(k):
            scores[c] += (sentiment_weights[c, 0] * pos_count
                          + sentiment_weights[c, 1] * neg_count
                          + sentiment_weights[c, 2] * (pos_count - neg_count)
                          + sentiment_weights[c, 3] * negation_count)
    if use_semantic and sem_n > 0:
        for c in range(k):
            scores[c] += sem_acc[c] / sem_n

    if binary:
        out_label[0] = 0 if scores[0] >= 0.0 else 1
        out_score[0] = scores[0]
    else:
        best = 0
        for c in range(1, k):
            if scores[c] > scores[best]:
                best = <int>c
        out_label[0] = best
        out_score[0] = scores[best]


def classify_batch(texts,
                   bint binary,
                   const double[::1] biases,
                   bint use_vocab, bint use_bigrams,
                   const int[::1] vocab_offsets, const unsigned char[::1] vocab_blob,
                   const double[:, ::1] vocab_contrib,
                   bint use_emotion,
                   const int[::1] emo_offsets, const unsigned char[::1] emo_blob,
                   const double[:, ::1] emo_contrib,
                   bint use_sentiment,
                   const int[::1] pos_offsets, const unsigned char[::1] pos_blob,
                   const int[::1] neg_offsets, const unsigned char[::1] neg_blob,
                   const int[::1] negation_offsets, const unsigned char[::1] negation_blob,
                   const double[:, ::1] sentiment_weights,
                   bint use_semantic,
                   const int[::1] sem_offsets, const unsigned char[::1] sem_blob,
                   const double[:, ::1] sem_contrib,
                   const int[::1] abbrev_offsets, const unsigned char[::1] abbrev_blob):
    """Classify a list of texts; returns (label indices, scores).

    Lowercasing and UTF-8 encoding happen here under the GIL; the per-document
    tokenize/score loop runs with the GIL released, which is what lets the
    thread pipeline use multiple cores.
    """
    cdef Py_ssize_t ndocs = len(texts)
    cdef Py_ssize_t k = biases.shape[0]
    encoded = [t.lower().encode("utf-8") for t in texts]
    joined = b"".join(encoded)
    doc_offsets_arr = np.zeros(ndocs + 1, dtype=np.intp)
    cdef Py_ssize_t pos = 0, maxlen = 0, di
    for di in range(ndocs):
        pos += len(encoded[di])
        doc_offsets_arr[di + 1] = pos
        if len(encoded[di]) > maxlen:
            maxlen = len(encoded[di])

    labels_arr = np.zeros(ndocs, dtype=np.int32)
    scores_arr = np.zeros(ndocs, dtype=np.float64)
    blob_arr = np.frombuffer(joined, dtype=np.uint8)

    cdef const unsigned char[::1] blob = blob_arr
    cdef const Py_ssize_t[::1] doc_offsets = doc_offsets_arr
    cdef int[::1] labels = labels_arr
    cdef double[::1] scores_out = scores_arr

    cdef unsigned char* bigram_buf = <unsigned char*>malloc(2 * maxlen + 16)
    cdef double* scores = <double*>malloc(k * sizeof(double))
    cdef double* sem_acc = <double*>malloc(k * sizeof(double))
    if bigram_buf == NULL or scores == NULL or sem_acc == NULL:
        free(bigram_buf); free(scores); free(sem_acc)
        raise MemoryError()

    cdef const unsigned char* base = NULL
    if blob.shape[0] > 0:
        base = &blob[0]
    cdef Py_ssize_t start, length
    cdef int label = 0
    cdef double score = 0.0
    try:
        with nogil:
            for di in range(ndocs):
                start = doc_offsets[di]
                length = doc_offsets[di + 1] - start
                _score_doc(base + start, length, k, binary, biases,
                           use_vocab, use_bigrams, vocab_offsets, vocab_blob, vocab_contrib,
                           use_emotion, emo_offsets, emo_blob, emo_contrib,
                           use_sentiment, pos_offsets, pos_blob, neg_offsets, neg_blob,
                           negation_offsets, negation_blob, sentiment_weights,
                           use_semantic, sem_offsets, sem_blob, sem_contrib,
                           abbrev_offsets, abbrev_blob,
                           bigram_buf, scores, sem_acc, &label, &score)
                labels[di] = label
                scores_out[di] = score
    finally:
        free(bigram_buf)
        free(scores)
        free(sem_acc)
    return labels_arr, scores_arr


def debug_tokens(text, const int[::1] abbrev_offsets, const unsigned char[::1] abbrev_blob):
    """Token stream with sentence-break flags, for parity tests against the
    pure tokenizer: returns [(token, broke_before, breaks_after), ...]."""
    data = text.lower().encode("utf-8")
    cdef const unsigned char* s = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t i = 0, tlen = 0
    cdef const unsigned char* tok = NULL
    cdef bint brk_before = False, brk_after = False
    out = []
    while _next_token(s, n, &i, &tok, &tlen, &brk_before, &brk_after,
                      abbrev_offsets, abbrev_blob):
        out.append((tok[:tlen].decode("utf-8"), bool(brk_before), bool(brk_after)))
    return out
