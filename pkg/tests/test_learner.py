from __future__ import annotations

import math
import random
from pathlib import Path

import numpy as np
import pytest

from emtk.corpus import Document, POLARITIES
from emtk.errors import CorpusFormatError, TrainingError
from emtk.features import FeatureConfig, WordSpace, build_wordspace
from emtk.learner import (
    SOLVERS,
    LinearModel,
    SolverConfig,
    corpus_fingerprint,
    downsample,
    evaluate,
    load_polarity_bundle,
    logistic_objective,
    predict,
    predict_polarity,
    read_model_file,
    save_polarity_bundle,
    split_train_test,
    train_emotion_suite,
    train_linear,
    train_polarity,
    tune_cost,
    vectors_to_matrix,
    write_model_file,
)

RNG_SEED = 42


def _separable_vectors(n_per_class=20, margin=3.0, seed=0):
    """Two clusters separated along f0; labels yes/no."""
    rng = random.Random(seed)
    vectors, labels = [], []
    for i in range(n_per_class * 2):
        label = "yes" if i % 2 == 0 else "no"
        sign = 1.0 if label == "yes" else -1.0
        vectors.append(
            {
                "f0": sign * margin + rng.uniform(-0.5, 0.5),
                "f1": rng.uniform(-1, 1),
            }
        )
        labels.append(label)
    return vectors, labels


class TestSolverTable:
    def test_eight_distinct_configurations(self):
        assert sorted(SOLVERS) == list(range(8))
        combos = {(s.loss, s.regularization, s.formulation) for s in SOLVERS.values()}
        assert len(combos) == 8

    def test_fixed_mapping(self):
        assert SOLVERS[0] == SolverConfig(0, "logistic", "L2", "primal")
        assert SOLVERS[1] == SolverConfig(1, "hinge", "L2", "dual")
        assert SOLVERS[2] == SolverConfig(2, "hinge", "L2", "primal")
        assert SOLVERS[3] == SolverConfig(3, "squared_hinge", "L2", "dual")
        assert SOLVERS[4] == SolverConfig(4, "squared_hinge", "L2", "primal")
        assert SOLVERS[5] == SolverConfig(5, "logistic", "L1", "primal")
        assert SOLVERS[6] == SolverConfig(6, "squared_hinge", "L1", "primal")
        assert SOLVERS[7] == SolverConfig(7, "logistic", "L2", "dual")


class TestTrainLinear:
    @pytest.mark.parametrize("solver_id", range(8))
    def test_separable_data_trains_to_perfect_accuracy(self, solver_id):
        vectors, labels = _separable_vectors()
        model = train_linear(vectors, labels, solver_id, cost=10.0, seed=RNG_SEED)
        predictions = [predict(model, v)[0] for v in vectors]
        assert predictions == labels

    def test_two_point_geometry(self):
        # One example per class at +/- x: the boundary separates by sign.
        vectors = [{"x": 2.0}, {"x": -2.0}]
        labels = ["yes", "no"]
        model = train_linear(vectors, labels, 0, cost=1.0)
        assert predict(model, {"x": 2.0})[0] == "yes"
        assert predict(model, {"x": -2.0})[0] == "no"
        assert model.weights["x"] > 0

    def test_missing_class_rejected(self):
        with pytest.raises(TrainingError, match="missing class"):
            train_linear([{"a": 1.0}], ["yes"], 0, 1.0)

    def test_nonpositive_cost_rejected(self):
        vectors, labels = _separable_vectors(4)
        with pytest.raises(TrainingError):
            train_linear(vectors, labels, 0, 0.0)

    def test_deterministic_for_fixed_seed(self):
        vectors, labels = _separable_vectors()
        for solver_id in range(8):
            a = train_linear(vectors, labels, solver_id, 1.0, seed=7)
            b = train_linear(vectors, labels, solver_id, 1.0, seed=7)
            assert a.weights == b.weights
            assert a.bias == b.bias

    def test_l1_produces_sparser_weights(self):
        rng = random.Random(1)
        vectors, labels = [], []
        for i in range(60):
            label = "yes" if i % 2 == 0 else "no"
            sign = 1.0 if label == "yes" else -1.0
            vec = {f"noise{j}": rng.uniform(-0.2, 0.2) for j in range(20)}
            vec["signal"] = sign * 2.0
            vectors.append(vec)
            labels.append(label)
        dense = train_linear(vectors, labels, 0, 1.0)
        sparse = train_linear(vectors, labels, 5, 1.0)
        assert len(sparse.weights) < len(dense.weights)
        assert sparse.weights.get("signal", 0.0) > 0

    def test_scaling_invariance_of_labels(self):
        # Scaling features by s with cost scaled by 1/s^2 keeps the labels.
        vectors, labels = _separable_vectors()
        scale = 10.0
        scaled = [{k: v * scale for k, v in vec.items()} for vec in vectors]
        base = train_linear(vectors, labels, 0, cost=1.0)
        rescaled = train_linear(scaled, labels, 0, cost=1.0 / scale**2)
        for vec, svec in zip(vectors, scaled):
            assert predict(base, vec)[0] == predict(rescaled, svec)[0]


class TestLogisticObjective:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(3)
        X = vectors_to_matrix(
            [
                {f"f{j}": float(rng.normal()) for j in range(5)}
                for _ in range(12)
            ],
            tuple(f"f{j}" for j in range(5)),
        )
        y = np.where(rng.random(12) < 0.5, 1.0, -1.0)
        w = rng.normal(size=X.shape[1])
        _, grad = logistic_objective(w, X, y, C=2.0)
        h = 1e-5
        for j in range(X.shape[1]):
            e = np.zeros_like(w)
            e[j] = h
            f_plus, _ = logistic_objective(w + e, X, y, C=2.0)
            f_minus, _ = logistic_objective(w - e, X, y, C=2.0)
            numeric = (f_plus - f_minus) / (2 * h)
            assert abs(numeric - grad[j]) < 1e-6


class TestPredict:
    def test_zero_score_ties_to_yes(self):
        model = LinearModel(weights={}, bias=0.0, cost=1.0, solver=SOLVERS[0])
        assert predict(model, {}) == ("yes", 0.0)

    def test_positive_direction(self):
        model = LinearModel(weights={"a": 2.0}, bias=0.0, cost=1.0, solver=SOLVERS[0])
        label, score = predict(model, {"a": 1.5})
        assert label == "yes" and score == 3.0

    def test_unseen_features_ignored(self):
        model = LinearModel(weights={"a": 1.0}, bias=0.5, cost=1.0, solver=SOLVERS[0])
        assert predict(model, {"zz": 100.0})[1] == 0.5

    def test_matches_dot_product_oracle(self):
        rng = random.Random(9)
        names = [f"f{i}" for i in range(30)]
        weights = {n: rng.uniform(-2, 2) for n in names if rng.random() < 0.7}
        model = LinearModel(weights=weights, bias=rng.uniform(-1, 1), cost=1.0, solver=SOLVERS[0])
        for _ in range(200):
            vec = {n: rng.uniform(-3, 3) for n in names if rng.random() < 0.4}
            label, score = predict(model, vec)
            expected = model.bias + sum(weights.get(n, 0.0) * v for n, v in vec.items())
            assert score == pytest.approx(expected, rel=1e-12, abs=1e-12)
            assert label == ("yes" if expected >= 0 else "no")

    def test_polarity_tie_priority(self):
        zero = LinearModel(weights={}, bias=0.0, cost=1.0, solver=SOLVERS[0])
        from emtk.learner import PolarityModel

        model = PolarityModel(models={p: zero for p in POLARITIES})
        assert predict_polarity(model, {})[0] == "neutral"


class TestTuneCost:
    def test_singleton_grid(self):
        vectors, labels = _separable_vectors()
        result = tune_cost(vectors, labels, 0, grid=[1.0], folds=3)
        assert result.best_cost == 1.0

    def test_tie_breaks_to_smaller_cost(self):
        vectors, labels = _separable_vectors()
        result = tune_cost(vectors, labels, 0, grid=[100.0, 0.5, 10.0], folds=3)
        # Separable data scores F=1 for every adequate cost; smallest wins.
        scores = result.scores
        best_score = max(scores.values())
        expected = min(c for c, s in scores.items() if s == best_score)
        assert result.best_cost == expected

    def test_separable_reaches_perfect_f(self):
        vectors, labels = _separable_vectors(n_per_class=15)
        result = tune_cost(vectors, labels, 0, grid=[10.0, 100.0], folds=3)
        assert max(result.scores.values()) == 1.0

    def test_single_class_fold_skipped_with_warning(self):
        # 2 yes / 8 no over 5 folds: some validation folds have no yes.
        vectors = [{"a": float(i)} for i in range(10)]
        labels = ["yes", "yes"] + ["no"] * 8
        result = tune_cost(vectors, labels, 0, grid=[1.0], folds=5, seed=0)
        assert result.fold_warnings >= 3

    def test_empty_grid_rejected(self):
        with pytest.raises(TrainingError):
            tune_cost([], [], 0, grid=[])


class TestEvaluate:
    def test_all_correct(self):
        ids = [str(i) for i in range(6)]
        gold = {i: ("yes" if int(i) % 2 else "no") for i in ids}
        report = evaluate(gold, gold)
        assert report.accuracy == 1.0
        for cls in report.classes:
            assert report.precision[cls] == report.recall[cls] == report.f1[cls] == 1.0
        assert report.confusion["yes"]["no"] == 0

    def test_all_wrong_binary(self):
        gold = {"1": "yes", "2": "no"}
        pred = {"1": "no", "2": "yes"}
        report = evaluate(pred, gold)
        assert report.precision["yes"] == report.recall["yes"] == report.f1["yes"] == 0.0
        assert report.accuracy == 0.0

    def test_hand_computed_fp_fn(self):
        # 20 docs: gold has 10 yes. Predictions: 3 false positives against
        # no-gold docs, 2 false negatives against yes-gold docs.
        gold = {}
        pred = {}
        for i in range(10):
            gold[f"y{i}"] = "yes"
            pred[f"y{i}"] = "no" if i < 2 else "yes"
        for i in range(10):
            gold[f"n{i}"] = "no"
            pred[f"n{i}"] = "yes" if i < 3 else "no"
        report = evaluate(pred, gold)
        assert report.confusion["yes"]["yes"] == 8
        assert report.confusion["no"]["yes"] == 3
        assert report.confusion["yes"]["no"] == 2
        assert report.precision["yes"] == pytest.approx(8 / 11)
        assert report.recall["yes"] == pytest.approx(8 / 10)
        f = 2 * (8 / 11) * (8 / 10) / ((8 / 11) + (8 / 10))
        assert report.f1["yes"] == pytest.approx(f)

    def test_id_mismatch_listed(self):
        with pytest.raises(ValueError, match="id mismatch"):
            evaluate({"1": "yes"}, {"1": "yes", "2": "no"})

    def test_row_sums_match_gold_counts(self):
        rng = random.Random(4)
        gold = {str(i): rng.choice(["yes", "no"]) for i in range(50)}
        pred = {i: rng.choice(["yes", "no"]) for i in gold}
        report = evaluate(pred, gold)
        for cls in report.classes:
            assert sum(report.confusion[cls].values()) == sum(
                1 for v in gold.values() if v == cls
            )
        assert sum(sum(r.values()) for r in report.confusion.values()) == 50


def _labeled_docs(spec):
    """spec: list of (label, count) -> documents with distinct ids."""
    docs = []
    for label, count in spec:
        for _ in range(count):
            docs.append(Document(id=str(len(docs)), text=f"text {len(docs)}", gold=label))
    return docs


class TestSplitAndDownsample:
    def test_balanced_split_arithmetic(self):
        docs = _labeled_docs([("yes", 50), ("no", 50)])
        train, test = split_train_test(docs, 0.3, seed=1)
        assert len(train) == 70 and len(test) == 30
        assert sum(1 for d in test if d.gold == "yes") == 15
        assert sum(1 for d in train if d.gold == "yes") == 35

    def test_same_seed_same_split(self):
        docs = _labeled_docs([("yes", 30), ("no", 20)])
        a = split_train_test(docs, 0.3, seed=5)
        b = split_train_test(docs, 0.3, seed=5)
        assert [d.id for d in a[0]] == [d.id for d in b[0]]
        assert [d.id for d in a[1]] == [d.id for d in b[1]]

    def test_large_split_preserves_proportions(self):
        docs = _labeled_docs([("yes", 1600), ("no", 3200)])
        train, test = split_train_test(docs, 0.3, seed=2)
        for label, count in (("yes", 1600), ("no", 3200)):
            expected = int(count * 0.3 + 0.5)
            got = sum(1 for d in test if d.gold == label)
            assert abs(got - expected) <= 1

    def test_small_class_rejected(self):
        docs = _labeled_docs([("yes", 1), ("no", 5)])
        with pytest.raises(TrainingError):
            split_train_test(docs, 0.3)

    def test_downsample_to_minority(self):
        docs = _labeled_docs([("no", 90), ("yes", 10)])
        balanced = downsample(docs, seed=3)
        counts = {}
        for d in balanced:
            counts[d.gold] = counts.get(d.gold, 0) + 1
        assert counts == {"yes": 10, "no": 10}

    def test_already_balanced_keeps_multiset(self):
        docs = _labeled_docs([("yes", 8), ("no", 8)])
        balanced = downsample(docs, seed=3)
        assert sorted(d.id for d in balanced) == sorted(d.id for d in docs)

    def test_downsample_deterministic(self):
        docs = _labeled_docs([("no", 40), ("yes", 12)])
        a = downsample(docs, seed=11)
        b = downsample(docs, seed=11)
        assert [d.id for d in a] == [d.id for d in b]

    def test_single_class_rejected(self):
        with pytest.raises(TrainingError):
            downsample(_labeled_docs([("yes", 5)]))


class TestModelPersistence:
    def test_roundtrip(self, tmp_path: Path):
        model = LinearModel(
            weights={"uni:alpha": 1.25, "bi:a b": -0.5, "lex:emo:joy": 0.125},
            bias=-0.75,
            cost=10.0,
            solver=SOLVERS[3],
            target="joy",
            fingerprint="abc123",
            seed=7,
        )
        path = tmp_path / "m.model"
        write_model_file(model, path)
        loaded = read_model_file(path)
        assert loaded == model

    def test_fingerprint_stable(self):
        docs = _labeled_docs([("yes", 3), ("no", 2)])
        assert corpus_fingerprint(docs) == corpus_fingerprint(list(reversed(docs)))


EMOTION_CORPUS = [
    Document(id=str(i), text=t, gold=g)
    for i, (g, t) in enumerate(
        [
            ("YES", "love this great library. thanks!"),
            ("YES", "wonderful library, love the docs"),
            ("YES", "love it. great work"),
            ("YES", "lovely great docs. love them"),
            ("YES", "adore this library. brilliant"),
            ("YES", "love love love. great"),
            ("NO", "build fails with error again"),
            ("NO", "error in the parser module"),
            ("NO", "the build is slow today"),
            ("NO", "parser error breaks the build"),
            ("NO", "neutral words about the build"),
            ("NO", "the module reads input files"),
            ("NO", "docs describe the parser"),
            ("NO", "input files are read daily"),
        ]
    )
]


class TestEmotionSuite:
    def test_tree_and_determinism(self, tmp_path: Path):
        out = tmp_path / "training_x.csv_love"
        artifacts = train_emotion_suite(
            EMOTION_CORPUS, "love", politeness_enabled=False, out_dir=out,
            cost_grid=(0.1, 1.0), folds=3,
        )
        assert len(artifacts.model_files) == 16
        assert len(artifacts.performance_files) == 16
        assert len(artifacts.prediction_files) == 16
        assert (out / "n-grams" / "UnigramsList.txt").exists()
        assert (out / "idfs" / "EmotionWordsIDF.txt").exists()
        assert (out / f"feature-love.csv").exists()
        for regime in ("DownSampling", "NoDownSampling"):
            assert (out / "liblinear" / regime / "trainingSet.csv").exists()

        first = {
            p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }
        train_emotion_suite(
            EMOTION_CORPUS, "love", politeness_enabled=False, out_dir=out,
            cost_grid=(0.1, 1.0), folds=3,
        )
        second = {
            p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }
        assert first == second

    def test_invalid_label_rejected(self, tmp_path: Path):
        bad = EMOTION_CORPUS[:4] + [Document(id="x", text="t", gold="MAYBE")]
        with pytest.raises(CorpusFormatError, match="MAYBE"):
            train_emotion_suite(bad, "love", False, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_politeness_toggle_changes_feature_columns(self, tmp_path: Path):
        out = tmp_path / "with_pm"
        train_emotion_suite(
            EMOTION_CORPUS, "love", politeness_enabled=True, out_dir=out,
            cost_grid=(1.0,), folds=2,
        )
        header = (out / "feature-love.csv").read_text().splitlines()[0]
        assert "mood:" in header
        out2 = tmp_path / "without_pm"
        train_emotion_suite(
            EMOTION_CORPUS, "love", politeness_enabled=False, out_dir=out2,
            cost_grid=(1.0,), folds=2,
        )
        header2 = (out2 / "feature-love.csv").read_text().splitlines()[0]
        assert "mood:" not in header2 and "pol:" not in header2


def _polarity_synthetic(n=300, seed=0):
    """Three separable keyword clusters."""
    rng = random.Random(seed)
    markers = {
        "positive": ["alpha", "bravo"],
        "negative": ["charlie", "delta"],
        "neutral": ["echo", "foxtrot"],
    }
    docs = []
    for i in range(n):
        cls = POLARITIES[i % 3]
        words = [rng.choice(markers[cls]) for _ in range(6)]
        words += [f"shared{rng.randrange(4)}" for _ in range(3)]
        docs.append(Document(id=str(i), text=" ".join(words), gold=cls))
    return docs


class TestTrainPolarity:
    def test_separable_macro_f(self):
        docs = _polarity_synthetic()
        result = train_polarity(
            docs, FeatureConfig(mode="K", vector_dim=8), seed=RNG_SEED,
            cost_grid=(1.0, 10.0), folds=3,
        )
        assert result.report.macro_f1 >= 0.99

    def test_same_seed_identical_weights(self):
        docs = _polarity_synthetic(90)
        kwargs = dict(seed=9, cost_grid=(1.0,), folds=2)
        a = train_polarity(docs, FeatureConfig(mode="K", vector_dim=8), **kwargs)
        b = train_polarity(docs, FeatureConfig(mode="K", vector_dim=8), **kwargs)
        for cls in POLARITIES:
            assert a.model.models[cls].weights == b.model.models[cls].weights

    def test_mode_k_equals_mode_a_on_keyword_only_data(self):
        # No lexicon words and a word space with zero vocabulary overlap, so
        # the extra mode-A fragments are constant (empty) by construction.
        docs = _polarity_synthetic(120, seed=3)
        foreign = build_wordspace(
            [Document(id="w", text="unrelated terms entirely")], dim=8, seed=0
        )
        kwargs = dict(seed=4, cost_grid=(1.0,), folds=2)
        k = train_polarity(docs, FeatureConfig(mode="K", vector_dim=8), **kwargs)
        a = train_polarity(
            docs, FeatureConfig(mode="A", vector_dim=8), wordspace=foreign, **kwargs
        )
        from emtk.features import assemble_features

        for doc in docs:
            k_vec = assemble_features(doc, k.config, k.ngram_model, None, None, None)
            a_vec = assemble_features(
                doc, a.config, a.ngram_model, a.emotion_lexicon, a.sentiment_lexicon, foreign
            )
            assert predict_polarity(k.model, k_vec)[0] == predict_polarity(a.model, a_vec)[0]

    def test_missing_class_rejected(self):
        docs = [d for d in _polarity_synthetic(60) if d.gold != "neutral"]
        with pytest.raises(TrainingError, match="missing"):
            train_polarity(docs, FeatureConfig(mode="K", vector_dim=8))

    def test_bad_label_rejected(self):
        docs = _polarity_synthetic(30)
        docs[0] = Document(id="0", text="x", gold="meh")
        with pytest.raises(CorpusFormatError):
            train_polarity(docs, FeatureConfig(mode="K", vector_dim=8))

    def test_bundle_roundtrip(self, tmp_path: Path):
        docs = _polarity_synthetic(90)
        result = train_polarity(
            docs, FeatureConfig(mode="A", vector_dim=8), seed=1,
            cost_grid=(1.0,), folds=2,
        )
        path = tmp_path / "model.json"
        save_polarity_bundle(result, path)
        loaded = load_polarity_bundle(path)
        assert loaded.config == result.config
        assert set(loaded.model.models) == set(result.model.models)
        for cls in POLARITIES:
            assert loaded.model.models[cls].weights == result.model.models[cls].weights
            assert loaded.model.models[cls].bias == result.model.models[cls].bias
        assert loaded.ngram_model.unigrams == result.ngram_model.unigrams
        assert set(loaded.wordspace.vectors) == set(result.wordspace.vectors)
        for w, vec in result.wordspace.vectors.items():
            assert np.array_equal(loaded.wordspace.vectors[w], vec)
