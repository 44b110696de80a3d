from __future__ import annotations

import hashlib
import random

import numpy as np
import pytest

from emtk._data import read_data_text
from emtk.corpus import EMOTIONS, Document
from emtk.errors import ConfigurationError, ResourceFormatError
from emtk.features import (
    EmotionLexicon,
    FeatureConfig,
    SentimentLexicon,
    WordSpace,
    assemble_features,
    build_wordspace,
    compute_emotion_word_idf,
    default_emotion_lexicon,
    default_sentiment_lexicon,
    document_vector,
    emotion_feature_vector,
    emotion_lexicon_features,
    load_emotion_lexicon,
    load_wordspace,
    mood_features,
    politeness_score,
    save_wordspace,
    semantic_features,
    sentiment_lexicon_features,
    _index_vector,
)
from emtk.textproc import build_ngram_model, tfidf_vector, token_surfaces


class TestEmotionLexicon:
    def test_basic_parse(self):
        lex = load_emotion_lexicon("joy\thappy\nfear\tdread")
        assert "happy" in lex.words["joy"]
        assert "dread" in lex.words["fear"]

    def test_empty_file_six_empty_sets(self):
        lex = load_emotion_lexicon("")
        assert set(lex.words) == set(EMOTIONS)
        assert all(not words for words in lex.words.values())

    def test_malformed_line_number(self):
        with pytest.raises(ResourceFormatError, match="line 2"):
            load_emotion_lexicon("joy\thappy\nnot-a-tab-line")

    def test_unknown_emotion_rejected(self):
        with pytest.raises(ResourceFormatError, match="disgust"):
            load_emotion_lexicon("disgust\tyuck")

    def test_bundled_lexicon_matches_line_count_oracle(self):
        raw = read_data_text("emotion_lexicon.tsv")
        per_emotion = {}
        for line in raw.splitlines():
            if line.strip():
                emotion = line.split("\t")[0]
                per_emotion[emotion] = per_emotion.get(emotion, 0) + 1
        lex = default_emotion_lexicon()
        assert sum(per_emotion.values()) == 60
        for emotion, count in per_emotion.items():
            assert len(lex.words[emotion]) == count

    def test_feature_counting(self):
        lex = load_emotion_lexicon("joy\thappy")
        vec = emotion_lexicon_features(["happy", "happy"], lex)
        assert vec == {"lex:emo:joy": 2.0}

    def test_no_hits_empty_fragment(self):
        lex = default_emotion_lexicon()
        assert emotion_lexicon_features(["xylophone"], lex) == {}

    def test_matches_membership_oracle(self):
        lex = default_emotion_lexicon()
        rng = random.Random(2)
        pool = sorted(lex.all_words()) + ["noise", "words", "here"]
        tokens = [rng.choice(pool) for _ in range(60)]
        vec = emotion_lexicon_features(tokens, lex)
        for emotion in EMOTIONS:
            expected = float(sum(1 for t in tokens if t in lex.words[emotion]))
            assert vec.get(f"lex:emo:{emotion}", 0.0) == expected

    def test_idf_weighting(self):
        lex = EmotionLexicon(words={"joy": frozenset({"happy"})}, idf={"happy": 0.5})
        assert emotion_lexicon_features(["happy"], lex) == {"lex:emo:joy": 0.5}

    def test_compute_emotion_word_idf(self):
        lex = load_emotion_lexicon("joy\thappy\nfear\tdread")
        corpus = [Document(id="1", text="happy happy"), Document(id="2", text="calm")]
        idf = compute_emotion_word_idf(corpus, lex)
        assert idf == {"happy": pytest.approx(np.log(2))}


class TestSentimentFeatures:
    def test_positive_word(self):
        lex = default_sentiment_lexicon()
        vec = sentiment_lexicon_features(["great"], lex)
        assert vec["lex:sent:pos"] == 1.0
        assert vec["lex:sent:net"] == 1.0
        assert "lex:sent:neg" not in vec

    def test_negated_positive_counts_negative(self):
        lex = default_sentiment_lexicon()
        vec = sentiment_lexicon_features(["not", "great"], lex)
        assert vec == {
            "lex:sent:neg": 1.0,
            "lex:sent:net": -1.0,
            "lex:sent:negations": 1.0,
        }

    def test_empty_tokens(self):
        assert sentiment_lexicon_features([], default_sentiment_lexicon()) == {}

    def test_window_is_two_tokens(self):
        lex = default_sentiment_lexicon()
        within = sentiment_lexicon_features(["not", "so", "great"], lex)
        assert within["lex:sent:neg"] == 1.0
        beyond = sentiment_lexicon_features(["not", "so", "very", "great"], lex)
        assert beyond["lex:sent:pos"] == 1.0

    def test_negated_negative_counts_positive(self):
        lex = default_sentiment_lexicon()
        vec = sentiment_lexicon_features(["not", "bad"], lex)
        assert vec["lex:sent:pos"] == 1.0

    def test_overlapping_pos_neg_rejected(self):
        with pytest.raises(ValueError):
            SentimentLexicon(
                positive=frozenset({"x"}), negative=frozenset({"x"}), negations=frozenset()
            )


def _docs(*texts):
    return [Document(id=str(i), text=t) for i, t in enumerate(texts, start=1)]


class TestWordSpace:
    def test_roundtrip_small(self):
        ws = WordSpace(
            dim=4,
            vectors={
                "a": np.array([1.0, 0.0, -1.0, 0.25]),
                "b": np.array([0.5, 2.0, 0.0, -0.125]),
                "c": np.zeros(4),
            },
        )
        loaded = load_wordspace(save_wordspace(ws))
        assert loaded.dim == 4
        assert set(loaded.vectors) == {"a", "b", "c"}
        for w in ws.vectors:
            assert np.array_equal(loaded.vectors[w], ws.vectors[w])

    def test_dim_mismatch_rejected(self):
        data = b"EMTK-DSM1 1 600\nword\t" + b" ".join(b"0.0" for _ in range(599)) + b"\n"
        with pytest.raises(ResourceFormatError, match="600"):
            load_wordspace(data)

    def test_truncated_rejected(self):
        data = b"EMTK-DSM1 2 3\nword\t0.0 0.0 0.0\n"
        with pytest.raises(ResourceFormatError, match="2 words"):
            load_wordspace(data)

    def test_duplicate_word_rejected(self):
        data = b"EMTK-DSM1 2 1\nw\t1.0\nw\t2.0\n"
        with pytest.raises(ResourceFormatError, match="duplicate"):
            load_wordspace(data)

    def test_large_roundtrip_hash_equal(self):
        rng = random.Random(0)
        vectors = {
            f"word{i}": np.array([rng.uniform(-2, 2) for _ in range(8)]) for i in range(10_000)
        }
        ws = WordSpace(dim=8, vectors=vectors)
        blob = save_wordspace(ws)
        again = save_wordspace(load_wordspace(blob))
        assert hashlib.sha256(blob).hexdigest() == hashlib.sha256(again).hexdigest()

    def test_build_deterministic(self):
        corpus = _docs("alpha beta gamma", "beta gamma delta", "gamma delta alpha")
        a = build_wordspace(corpus, dim=16, window=2, seed=9)
        b = build_wordspace(corpus, dim=16, window=2, seed=9)
        assert set(a.vectors) == set(b.vectors)
        for w in a.vectors:
            assert np.array_equal(a.vectors[w], b.vectors[w])

    def test_two_token_doc_hand_unrolled(self):
        ws = build_wordspace(_docs("a b"), dim=32, window=1, seed=4)
        nnz = min(8, max(2, 32 // 8))
        assert np.array_equal(ws.vectors["a"], _index_vector("b", 32, 4, nnz))
        assert np.array_equal(ws.vectors["b"], _index_vector("a", 32, 4, nnz))

    def test_identical_contexts_cosine_one(self):
        # "left one right" and "left two right": one/two share every context.
        corpus = _docs("left one right", "left two right")
        ws = build_wordspace(corpus, dim=64, window=1, seed=1)
        one, two = ws.vectors["one"], ws.vectors["two"]
        cosine = float(one @ two / (np.linalg.norm(one) * np.linalg.norm(two)))
        assert cosine == pytest.approx(1.0, abs=1e-9)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_wordspace([], dim=8)


class TestDocumentVector:
    def _ws(self):
        return WordSpace(
            dim=3,
            vectors={"a": np.array([1.0, 2.0, 3.0]), "b": np.array([3.0, 0.0, -1.0])},
        )

    def test_single_known_token(self):
        assert np.array_equal(document_vector(["a"], self._ws()), [1.0, 2.0, 3.0])

    def test_all_oov_zero_vector(self):
        assert np.array_equal(document_vector(["zz"], self._ws()), np.zeros(3))

    def test_mean_matches_oracle(self):
        got = document_vector(["a", "b", "zz"], self._ws())
        assert np.allclose(got, [(1 + 3) / 2, (2 + 0) / 2, (3 - 1) / 2])

    def test_order_invariance(self):
        ws = self._ws()
        assert np.array_equal(document_vector(["a", "b"], ws), document_vector(["b", "a"], ws))

    def test_semantic_features_named_and_sparse(self):
        vec = semantic_features(["b"], self._ws())
        assert vec == {"sem:0": 3.0, "sem:2": -1.0}


class TestPolitenessMood:
    def test_all_sentences_polite(self):
        assert politeness_score(["Thanks!", "Please help."]) == 1.0

    def test_plain_sentence(self):
        assert politeness_score(["It crashes."]) == 0.0
        assert mood_features(["It crashes."]) == {"mood:indicative": 1.0}

    def test_mixed_fixture_hand_labeled(self):
        # Hand-labeled fixture: please / could you / thanks are markers, so
        # 3 of 4 sentences are polite; moods are imperative, indicative,
        # conditional, indicative -> indicative majority.
        sentences = [
            "Please restart the server.",
            "It fails on boot.",
            "Could you check the log?",
            "Thanks for the details.",
        ]
        assert politeness_score(sentences) == 0.75
        assert mood_features(sentences) == {"mood:indicative": 1.0}

    def test_imperative_majority(self):
        sentences = ["Run the tests.", "Fix the build.", "It worked."]
        assert mood_features(sentences) == {"mood:imperative": 1.0}

    def test_conditional_detection(self):
        assert mood_features(["If it fails, retry."]) == {"mood:conditional": 1.0}
        assert mood_features(["I would retry."]) == {"mood:conditional": 1.0}

    def test_tie_prefers_indicative(self):
        assert mood_features(["Run it.", "It ran."]) == {"mood:indicative": 1.0}

    def test_empty(self):
        assert politeness_score([]) == 0.0
        assert mood_features([]) == {}


class TestAssembleFeatures:
    def _resources(self):
        corpus = _docs(
            "great library works well. thanks!",
            "terrible bug crashes always",
            "plain neutral words here",
            "great works. terrible bug",
        )
        model = build_ngram_model(corpus, min_df=1)
        ws = build_wordspace(corpus, dim=8, seed=0)
        return corpus, model, default_emotion_lexicon(), default_sentiment_lexicon(), ws

    def test_mode_k_equals_tfidf(self):
        corpus, model, emo, sent, ws = self._resources()
        config = FeatureConfig(mode="K", vector_dim=8)
        for doc in corpus:
            assert assemble_features(doc, config, model, emo, sent, ws) == tfidf_vector(doc, model)

    def test_mode_a_is_union_of_fragments(self):
        corpus, model, emo, sent, ws = self._resources()
        doc = corpus[0]
        a = assemble_features(doc, FeatureConfig(mode="A", vector_dim=8), model, emo, sent, ws)
        k = assemble_features(doc, FeatureConfig(mode="K", vector_dim=8), model, emo, sent, ws)
        l = assemble_features(doc, FeatureConfig(mode="L", vector_dim=8), model, emo, sent, ws)
        s = assemble_features(doc, FeatureConfig(mode="S", vector_dim=8), model, emo, sent, ws)
        assert set(a) == set(k) | set(l) | set(s)
        assert len(a) == len(k) + len(l) + len(s)  # disjoint prefixes

    def test_prefixes_partition_vector(self):
        corpus, model, emo, sent, ws = self._resources()
        config = FeatureConfig(mode="A", politeness_mood=True, vector_dim=8)
        vec = assemble_features(corpus[0], config, model, emo, sent, ws)
        prefixes = ("uni:", "bi:", "lex:", "sem:", "pol:", "mood:")
        for name in vec:
            assert sum(name.startswith(p) for p in prefixes) == 1

    def test_politeness_mood_toggle_changes_nothing_else(self):
        corpus, model, emo, sent, ws = self._resources()
        plain = FeatureConfig(mode="A", politeness_mood=False, vector_dim=8)
        extra = FeatureConfig(mode="A", politeness_mood=True, vector_dim=8)
        for doc in corpus:
            without = assemble_features(doc, plain, model, emo, sent, ws)
            with_pm = assemble_features(doc, extra, model, emo, sent, ws)
            trimmed = {
                n: v for n, v in with_pm.items() if not n.startswith(("pol:", "mood:"))
            }
            assert trimmed == without

    def test_allowlist_restricts_keywords(self):
        corpus, model, emo, sent, ws = self._resources()
        config = FeatureConfig(
            mode="K",
            vector_dim=8,
            unigram_allowlist=frozenset({"great", "bug", "thanks"}),
            bigram_allowlist=frozenset(),
        )
        for doc in corpus:
            vec = assemble_features(doc, config, model, emo, sent, ws)
            assert set(vec) <= {"uni:great", "uni:bug", "uni:thanks"}

    def test_mode_s_without_wordspace_errors(self):
        corpus, model, emo, sent, _ = self._resources()
        with pytest.raises(ConfigurationError):
            assemble_features(corpus[0], FeatureConfig(mode="S"), model, emo, sent, None)
        with pytest.raises(ConfigurationError):
            assemble_features(corpus[0], FeatureConfig(mode="A"), model, emo, sent, None)

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigurationError):
            FeatureConfig(mode="Z")

    def test_emotion_suite_vector(self):
        corpus, model, emo, sent, ws = self._resources()
        doc = _docs("great thanks! happy fear")[0]
        vec = emotion_feature_vector(doc, model, default_emotion_lexicon())
        assert any(n.startswith("lex:emo:") for n in vec)
        assert not any(n.startswith(("sem:", "lex:sent:", "pol:", "mood:")) for n in vec)
        with_pm = emotion_feature_vector(doc, model, default_emotion_lexicon(), politeness_mood=True)
        assert any(n.startswith("mood:") for n in with_pm)
