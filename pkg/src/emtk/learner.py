"""Trainable linear classifiers and their artifact trees.

Eight solver ids cover the classic linear-model family:

====  ==============  ==============  ===========
 id   loss            regularization  formulation
====  ==============  ==============  ===========
 0    logistic        L2              primal
 1    hinge           L2              dual
 2    hinge           L2              primal
 3    squared hinge   L2              dual
 4    squared hinge   L2              primal
 5    logistic        L1              primal
 6    squared hinge   L1              primal
 7    logistic        L2              dual
====  ==============  ==============  ===========

Three optimizers realize them: L-BFGS on the smooth L2 primal objective
(ids 0, 4, and 7 — the logistic dual is trained through its primal, the id
stays a distinct recorded configuration), dual coordinate descent for the
hinge family (ids 1-3), and proximal gradient (ISTA) for L1 (ids 5-6).  All
stop on a 1e-4 relative change of their objective with a 5,000 iteration cap
and are deterministic for fixed inputs and seed.

The bias is an augmented, regularized constant-1 feature.  Training for one
emotion produces the full artifact tree::

    training_<file.csv>_<emotion>/
        n-grams/                    UnigramsList.txt, BigramsList.txt
        idfs/                       UnigramsIDF.txt, BigramsIDF.txt, EmotionWordsIDF.txt
        feature-<emotion>.csv
        liblinear/DownSampling/     trainingSet.csv, testSet.csv,
        liblinear/NoDownSampling/   model_<e>_<ID>.model, performance_<e>_<ID>.txt,
                                    predictions_<e>_<ID>.csv       (ID = 0..7)
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit

from .corpus import EMOTIONS, POLARITIES, Document, serialize_corpus
from .errors import CorpusFormatError, ResourceFormatError, TrainingError
from .features import (
    EmotionLexicon,
    FeatureConfig,
    SentimentLexicon,
    WordSpace,
    build_wordspace,
    compute_emotion_word_idf,
    default_emotion_lexicon,
    default_sentiment_lexicon,
    emotion_feature_vector,
    assemble_features,
)
from .textproc import NgramModel, build_ngram_model, save_idf_table, save_ngram_model

DEFAULT_SEED = 42
DEFAULT_COST_GRID: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 5000

EMOTION_WORD_IDF_FILENAME = "EmotionWordsIDF.txt"
MODEL_MAGIC = "emtk-linear-model 1"
POLARITY_BUNDLE_FORMAT = "emtk-polarity-model"

#: Argmax tie priority for the three-class model.
POLARITY_PRIORITY: tuple[str, ...] = ("neutral", "positive", "negative")


@dataclass(frozen=True)
class SolverConfig:
    id: int
    loss: str  # logistic | hinge | squared_hinge
    regularization: str  # L2 | L1
    formulation: str  # primal | dual

    def describe(self) -> str:
        loss = self.loss.replace("_", " ")
        return f"{self.regularization}-regularized {loss} ({self.formulation})"


SOLVERS: Mapping[int, SolverConfig] = {
    0: SolverConfig(0, "logistic", "L2", "primal"),
    1: SolverConfig(1, "hinge", "L2", "dual"),
    2: SolverConfig(2, "hinge", "L2", "primal"),
    3: SolverConfig(3, "squared_hinge", "L2", "dual"),
    4: SolverConfig(4, "squared_hinge", "L2", "primal"),
    5: SolverConfig(5, "logistic", "L1", "primal"),
    6: SolverConfig(6, "squared_hinge", "L1", "primal"),
    7: SolverConfig(7, "logistic", "L2", "dual"),
}


@dataclass(frozen=True)
class LinearModel:
    """A trained binary scorer: sparse weights, bias, and provenance."""

    weights: Mapping[str, float]
    bias: float
    cost: float
    solver: SolverConfig
    classes: tuple[str, str] = ("yes", "no")
    target: str = ""
    fingerprint: str = ""
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class PolarityModel:
    """One-vs-rest scorers per polarity class; ties resolve in priority order."""

    models: Mapping[str, LinearModel]
    priority: tuple[str, ...] = POLARITY_PRIORITY


@dataclass(frozen=True)
class PerformanceReport:
    classes: tuple[str, ...]
    confusion: Mapping[str, Mapping[str, int]]  # gold -> predicted -> count
    precision: Mapping[str, float]
    recall: Mapping[str, float]
    f1: Mapping[str, float]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    total: int
    best_cost: float | None = None
    tuning_scores: Mapping[float, float] | None = None
    fold_warnings: int = 0


@dataclass(frozen=True)
class TuneResult:
    best_cost: float
    scores: Mapping[float, float]
    fold_warnings: int


@dataclass(frozen=True)
class TrainArtifacts:
    root: Path
    ngrams_dir: Path
    idfs_dir: Path
    feature_csv: Path
    regime_dirs: Mapping[str, Path]
    model_files: tuple[Path, ...]
    performance_files: tuple[Path, ...]
    prediction_files: tuple[Path, ...]


# ---------------------------------------------------------------------------
# Objectives and optimizers
# ---------------------------------------------------------------------------


def logistic_objective(w: np.ndarray, X, y: np.ndarray, C: float) -> tuple[float, np.ndarray]:
    """L2-regularized logistic loss: 0.5 w·w + C Σ log(1 + exp(-y Xw))."""
    margins = y * (X @ w)
    value = 0.5 * float(w @ w) + C * float(np.logaddexp(0.0, -margins).sum())
    grad = w - C * (X.T @ (y * expit(-margins)))
    return value, np.asarray(grad).ravel()


def squared_hinge_objective(w: np.ndarray, X, y: np.ndarray, C: float) -> tuple[float, np.ndarray]:
    """L2-regularized squared hinge: 0.5 w·w + C Σ max(0, 1 - y Xw)²."""
    margins = y * (X @ w)
    viol = np.maximum(0.0, 1.0 - margins)
    value = 0.5 * float(w @ w) + C * float(viol @ viol)
    grad = w - 2.0 * C * (X.T @ (y * viol))
    return value, np.asarray(grad).ravel()


def _smooth_loss_value_grad(loss: str, w, X, y, C):
    margins = y * (X @ w)
    if loss == "logistic":
        value = C * float(np.logaddexp(0.0, -margins).sum())
        grad = -C * (X.T @ (y * expit(-margins)))
    else:
        viol = np.maximum(0.0, 1.0 - margins)
        value = C * float(viol @ viol)
        grad = -2.0 * C * (X.T @ (y * viol))
    return value, np.asarray(grad).ravel()


def _train_smooth_l2(X, y, C, loss, tol, max_iter):
    objective = logistic_objective if loss == "logistic" else squared_hinge_objective
    result = minimize(
        objective,
        np.zeros(X.shape[1]),
        args=(X, y, C),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "maxfun": 10 * max_iter, "ftol": tol, "gtol": 1e-10},
    )
    if result.status == 1:  # iteration cap; other abnormal stops are accepted
        raise TrainingError(
            f"solver did not converge within {max_iter} iterations",
            final_objective=float(result.fun),
        )
    return np.asarray(result.x)


def _train_dual_cd(X, y, C, squared, tol, max_iter, seed):
    """Dual coordinate descent for (squared) hinge loss SVMs."""
    X = sp.csr_matrix(X)
    n, d = X.shape
    indptr, indices, data = X.indptr, X.indices, X.data
    diag = 0.0 if not squared else 1.0 / (2.0 * C)
    upper = C if not squared else np.inf
    row_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel() + diag
    w = np.zeros(d)
    alpha = np.zeros(n)
    rng = np.random.default_rng(seed)
    f_prev = 0.0
    final = 0.0
    for _ in range(max_iter):
        for i in rng.permutation(n):
            sl = slice(indptr[i], indptr[i + 1])
            idx = indices[sl]
            vals = data[sl]
            grad = y[i] * float(w[idx] @ vals) - 1.0 + diag * alpha[i]
            if alpha[i] <= 0.0:
                projected = min(grad, 0.0)
            elif alpha[i] >= upper:
                projected = max(grad, 0.0)
            else:
                projected = grad
            if projected != 0.0:
                a_new = min(max(alpha[i] - grad / row_sq[i], 0.0), upper)
                w[idx] += (a_new - alpha[i]) * y[i] * vals
                alpha[i] = a_new
        final = 0.5 * float(w @ w) + 0.5 * diag * float(alpha @ alpha) - float(alpha.sum())
        if abs(f_prev - final) <= tol * max(1.0, abs(f_prev)):
            return w
        f_prev = final
    raise TrainingError(
        f"dual coordinate descent did not converge within {max_iter} epochs",
        final_objective=final,
    )


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _train_l1_prox(X, y, C, loss, tol, max_iter):
    """ISTA with backtracking for min ||w||_1 + C Σ loss."""
    w = np.zeros(X.shape[1])
    step = 1.0
    value, grad = _smooth_loss_value_grad(loss, w, X, y, C)
    f_prev = value + float(np.abs(w).sum())
    final = f_prev
    for _ in range(max_iter):
        while True:
            w_new = _soft_threshold(w - step * grad, step)
            new_value, _ = _smooth_loss_value_grad(loss, w_new, X, y, C)
            diff = w_new - w
            bound = value + float(grad @ diff) + float(diff @ diff) / (2.0 * step)
            if new_value <= bound + 1e-12 or step < 1e-12:
                break
            step *= 0.5
        w = w_new
        final = new_value + float(np.abs(w).sum())
        if abs(f_prev - final) <= tol * max(1.0, abs(f_prev)):
            return w
        f_prev = final
        value, grad = _smooth_loss_value_grad(loss, w, X, y, C)
        step *= 1.5
    raise TrainingError(
        f"proximal gradient did not converge within {max_iter} iterations",
        final_objective=final,
    )


# ---------------------------------------------------------------------------
# Vectors <-> matrices
# ---------------------------------------------------------------------------


def feature_names(vectors: Sequence[Mapping[str, float]]) -> tuple[str, ...]:
    names: set[str] = set()
    for vec in vectors:
        names.update(vec)
    return tuple(sorted(names))


def vectors_to_matrix(vectors: Sequence[Mapping[str, float]], names: Sequence[str]):
    """CSR matrix over the named feature space plus a trailing bias column."""
    index = {name: i for i, name in enumerate(names)}
    n_cols = len(names) + 1
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        cols = sorted(index[name] for name in vec if name in index)
        for col in cols:
            indices.append(col)
        data.extend(vec[names[col]] for col in cols)
        indices.append(len(names))  # bias column
        data.append(1.0)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(vectors), n_cols),
    )


def _binary_targets(labels: Sequence[str], positive: str) -> np.ndarray:
    return np.array([1.0 if lab == positive else -1.0 for lab in labels])


def _normalize_binary_label(label: str | None, doc_id: str) -> str:
    value = (label or "").strip().lower()
    if value not in ("yes", "no"):
        raise CorpusFormatError(f"document {doc_id!r}: expected label YES or NO, got {label!r}")
    return value


# ---------------------------------------------------------------------------
# Training / prediction / evaluation
# ---------------------------------------------------------------------------


def train_linear(
    vectors: Sequence[Mapping[str, float]],
    labels: Sequence[str],
    solver: SolverConfig | int,
    cost: float,
    seed: int = DEFAULT_SEED,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    target: str = "",
    fingerprint: str = "",
) -> LinearModel:
    """Train a binary yes/no model; deterministic for fixed inputs and seed."""
    if isinstance(solver, int):
        solver = SOLVERS[solver]
    if cost <= 0:
        raise TrainingError(f"cost must be positive, got {cost}")
    if len(vectors) != len(labels):
        raise TrainingError("vectors and labels differ in length")
    present = set(labels)
    if not {"yes", "no"} <= present:
        missing = {"yes", "no"} - present
        raise TrainingError(f"training set is missing class(es): {sorted(missing)}")

    names = feature_names(vectors)
    X = vectors_to_matrix(vectors, names)
    y = _binary_targets(labels, "yes")

    if solver.regularization == "L1":
        w = _train_l1_prox(X, y, cost, solver.loss, tol, max_iter)
    elif solver.loss in ("hinge", "squared_hinge") and solver.formulation == "dual":
        w = _train_dual_cd(X, y, cost, solver.loss == "squared_hinge", tol, max_iter, seed)
    elif solver.loss == "hinge":
        # Primal hinge is nonsmooth; realized through the equivalent dual.
        w = _train_dual_cd(X, y, cost, False, tol, max_iter, seed)
    else:
        w = _train_smooth_l2(X, y, cost, solver.loss, tol, max_iter)

    weights = {name: float(w[i]) for i, name in enumerate(names) if w[i] != 0.0}
    return LinearModel(
        weights=weights,
        bias=float(w[-1]),
        cost=float(cost),
        solver=solver,
        target=target,
        fingerprint=fingerprint,
        seed=seed,
    )


def predict(model: LinearModel, vector: Mapping[str, float]) -> tuple[str, float]:
    """Score = bias + w·x over the model's features; unseen features are
    ignored.  Score >= 0 predicts the positive class."""
    score = model.bias
    for name in sorted(vector):
        weight = model.weights.get(name)
        if weight is not None:
            score += weight * vector[name]
    label = model.classes[0] if score >= 0.0 else model.classes[1]
    return label, score


def predict_polarity(model: PolarityModel, vector: Mapping[str, float]) -> tuple[str, float]:
    """Argmax over per-class scores; ties resolve in priority order."""
    best_label = model.priority[0]
    best_score = -np.inf
    for label in model.priority:
        _, score = predict(model.models[label], vector)
        if score > best_score:
            best_label, best_score = label, score
    return best_label, float(best_score)


def _stratified_folds(labels: Sequence[str], folds: int, seed: int) -> list[int]:
    """Deterministic fold assignment per index, stratified by label."""
    rng = np.random.default_rng(seed)
    fold_of = [0] * len(labels)
    by_class: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    for lab in sorted(by_class):
        idxs = by_class[lab]
        order = rng.permutation(len(idxs))
        for k, pos in enumerate(order):
            fold_of[idxs[pos]] = k % folds
    return fold_of


def _f1_for_class(gold: Sequence[str], pred: Sequence[str], positive: str) -> float:
    tp = sum(1 for g, p in zip(gold, pred) if g == positive and p == positive)
    fp = sum(1 for g, p in zip(gold, pred) if g != positive and p == positive)
    fn = sum(1 for g, p in zip(gold, pred) if g == positive and p != positive)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def tune_cost(
    vectors: Sequence[Mapping[str, float]],
    labels: Sequence[str],
    solver: SolverConfig | int,
    grid: Sequence[float] = DEFAULT_COST_GRID,
    folds: int = 5,
    seed: int = DEFAULT_SEED,
) -> TuneResult:
    """Cross-validated F of the yes class per cost; best = max F, ties to the
    smaller cost.  Folds whose train part lacks a class or whose validation
    part has no positive example are skipped and counted as warnings."""
    if not grid:
        raise TrainingError("cost grid is empty")
    if folds < 2:
        raise TrainingError("need at least 2 folds")
    fold_of = _stratified_folds(labels, folds, seed)

    usable: list[int] = []
    warnings = 0
    for k in range(folds):
        train_labels = [lab for i, lab in enumerate(labels) if fold_of[i] != k]
        val_labels = [lab for i, lab in enumerate(labels) if fold_of[i] == k]
        if len(set(train_labels)) < 2 or "yes" not in val_labels:
            warnings += 1
        else:
            usable.append(k)

    scores: dict[float, float] = {}
    for cost in grid:
        fold_scores = []
        for k in usable:
            train_idx = [i for i in range(len(labels)) if fold_of[i] != k]
            val_idx = [i for i in range(len(labels)) if fold_of[i] == k]
            model = train_linear(
                [vectors[i] for i in train_idx],
                [labels[i] for i in train_idx],
                solver,
                cost,
                seed=seed,
            )
            pred = [predict(model, vectors[i])[0] for i in val_idx]
            gold = [labels[i] for i in val_idx]
            fold_scores.append(_f1_for_class(gold, pred, "yes"))
        scores[cost] = sum(fold_scores) / len(fold_scores) if fold_scores else 0.0

    best = sorted(grid, key=lambda c: (-scores[c], c))[0]
    return TuneResult(best_cost=float(best), scores=scores, fold_warnings=warnings)


def _canonical_classes(labels: set[str]) -> tuple[str, ...]:
    if labels <= {"yes", "no"}:
        return ("yes", "no")
    if labels <= set(POLARITIES):
        return POLARITIES
    return tuple(sorted(labels))


def evaluate(
    predictions: Mapping[str, str],
    gold: Mapping[str, str],
    classes: Sequence[str] | None = None,
) -> PerformanceReport:
    """Confusion matrix and per-class precision/recall/F over aligned ids."""
    missing = sorted(set(gold) ^ set(predictions))
    if missing:
        shown = ", ".join(missing[:5])
        raise ValueError(f"prediction/gold id mismatch ({len(missing)} ids, e.g. {shown})")
    if classes is None:
        classes = _canonical_classes(set(gold.values()) | set(predictions.values()))
    classes = tuple(classes)

    confusion: dict[str, dict[str, int]] = {g: {p: 0 for p in classes} for g in classes}
    correct = 0
    for doc_id, gold_label in gold.items():
        pred_label = predictions[doc_id]
        confusion[gold_label][pred_label] += 1
        if gold_label == pred_label:
            correct += 1

    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    for cls in classes:
        tp = confusion[cls][cls]
        col = sum(confusion[g][cls] for g in classes)
        row = sum(confusion[cls].values())
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        precision[cls] = p
        recall[cls] = r
        f1[cls] = 2 * p * r / (p + r) if p + r else 0.0

    n_classes = len(classes)
    total = len(gold)
    return PerformanceReport(
        classes=classes,
        confusion=confusion,
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=sum(precision.values()) / n_classes,
        macro_recall=sum(recall.values()) / n_classes,
        macro_f1=sum(f1.values()) / n_classes,
        accuracy=correct / total if total else 0.0,
        total=total,
    )


# ---------------------------------------------------------------------------
# Splits and sampling
# ---------------------------------------------------------------------------


def split_train_test(
    docs: Sequence[Document], test_fraction: float, seed: int = DEFAULT_SEED
) -> tuple[list[Document], list[Document]]:
    """Stratified split; deterministic for a fixed seed, both parts keep the
    original corpus order."""
    if not 0.0 < test_fraction < 1.0:
        raise TrainingError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_class: dict[str, list[int]] = {}
    for i, doc in enumerate(docs):
        by_class.setdefault(doc.gold or "", []).append(i)
    for label, idxs in sorted(by_class.items()):
        if len(idxs) < 2:
            raise TrainingError(f"class {label!r} has fewer than 2 documents")
    rng = np.random.default_rng(seed)
    test_idx: set[int] = set()
    for label in sorted(by_class):
        idxs = by_class[label]
        n_test = min(max(int(len(idxs) * test_fraction + 0.5), 1), len(idxs) - 1)
        order = rng.permutation(len(idxs))
        test_idx.update(idxs[pos] for pos in order[:n_test])
    train = [docs[i] for i in range(len(docs)) if i not in test_idx]
    test = [docs[i] for i in range(len(docs)) if i in test_idx]
    return train, test


def downsample(docs: Sequence[Document], seed: int = DEFAULT_SEED) -> list[Document]:
    """Reduce every class to the minority-class size by seeded sampling
    without replacement, then reshuffle deterministically."""
    by_class: dict[str, list[int]] = {}
    for i, doc in enumerate(docs):
        by_class.setdefault(doc.gold or "", []).append(i)
    if len(by_class) < 2:
        raise TrainingError("downsampling needs at least 2 classes")
    minority = min(len(v) for v in by_class.values())
    if minority == 0:
        raise TrainingError("a class has zero documents")
    rng = np.random.default_rng(seed)
    kept: list[int] = []
    for label in sorted(by_class):
        idxs = by_class[label]
        order = rng.permutation(len(idxs))
        kept.extend(idxs[pos] for pos in order[:minority])
    kept_arr = np.array(sorted(kept))
    final_order = rng.permutation(len(kept_arr))
    return [docs[kept_arr[pos]] for pos in final_order]


def corpus_fingerprint(docs: Sequence[Document]) -> str:
    digest = hashlib.sha256()
    for doc in sorted(docs, key=lambda d: d.id):
        digest.update(f"{doc.id}\x1f{doc.gold or ''}\x1f{doc.text}\x1e".encode("utf-8"))
    return digest.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------


def write_model_file(model: LinearModel, path: Path) -> None:
    """Plain-text model format: header fields, then name<TAB>weight lines."""
    lines = [
        MODEL_MAGIC,
        f"target {model.target}",
        f"solver_id {model.solver.id}",
        f"loss {model.solver.loss}",
        f"regularization {model.solver.regularization}",
        f"formulation {model.solver.formulation}",
        f"cost {model.cost!r}",
        f"bias {model.bias!r}",
        f"classes {model.classes[0]} {model.classes[1]}",
        f"fingerprint {model.fingerprint}",
        f"seed {model.seed}",
        f"weights {len(model.weights)}",
    ]
    for name in sorted(model.weights):
        lines.append(f"{name}\t{model.weights[name]!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_model_file(path: Path) -> LinearModel:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ResourceFormatError(f"{path}: not a linear model file")
    header: dict[str, str] = {}
    weight_lines: list[str] = []
    count = None
    for line in lines[1:]:
        if count is None:
            key, _, value = line.partition(" ")
            header[key] = value
            if key == "weights":
                count = int(value)
        elif line:
            weight_lines.append(line)
    if count is None or len(weight_lines) != count:
        raise ResourceFormatError(f"{path}: truncated model file")
    weights: dict[str, float] = {}
    for line in weight_lines:
        name, sep, value = line.partition("\t")
        if not sep:
            raise ResourceFormatError(f"{path}: malformed weight line {line!r}")
        weights[name] = float(value)
    try:
        solver = SolverConfig(
            id=int(header["solver_id"]),
            loss=header["loss"],
            regularization=header["regularization"],
            formulation=header["formulation"],
        )
        classes = tuple(header["classes"].split())
        return LinearModel(
            weights=weights,
            bias=float(header["bias"]),
            cost=float(header["cost"]),
            solver=solver,
            classes=(classes[0], classes[1]),
            target=header.get("target", ""),
            fingerprint=header.get("fingerprint", ""),
            seed=int(header.get("seed", DEFAULT_SEED)),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ResourceFormatError(f"{path}: bad model header: {exc}") from exc


def render_metrics(report: PerformanceReport) -> list[str]:
    """Confusion matrix plus per-class and macro precision/recall/F lines."""
    lines = ["confusion matrix (rows = gold, columns = predicted):"]
    width = max(len(c) for c in report.classes) + 2
    lines.append(" " * width + "".join(f"{c:>{width}}" for c in report.classes))
    for gold_cls in report.classes:
        lines.append(
            f"{gold_cls:>{width}}"
            + "".join(f"{report.confusion[gold_cls][p]:>{width}}" for p in report.classes)
        )
    for cls in report.classes:
        lines.append(
            f"class {cls}: precision={report.precision[cls]:.4f} "
            f"recall={report.recall[cls]:.4f} f1={report.f1[cls]:.4f}"
        )
    lines.append(
        f"macro: precision={report.macro_precision:.4f} "
        f"recall={report.macro_recall:.4f} f1={report.macro_f1:.4f}"
    )
    lines.append(f"accuracy: {report.accuracy:.4f}")
    return lines


def render_performance(
    report: PerformanceReport,
    solver: SolverConfig,
    regime: str,
    target: str,
    grid: Sequence[float],
) -> str:
    """Deterministic text report: tuning table, best cost, confusion matrix,
    and per-class precision/recall/F."""
    lines = [
        f"target: {target}",
        f"solver: id {solver.id} ({solver.describe()})",
        f"sampling: {regime}",
        f"cost grid: {', '.join(f'{c:g}' for c in grid)}",
        f"fold warnings: {report.fold_warnings}",
        "tuning (cross-validated F of the positive class):",
    ]
    tuning = report.tuning_scores or {}
    for cost in grid:
        lines.append(f"  C={cost:g}  F={tuning.get(cost, 0.0):.4f}")
    lines.append(f"best cost: {report.best_cost:g}")
    lines.extend(render_metrics(report))
    return "\n".join(lines) + "\n"


def render_classification_performance(report: PerformanceReport, target: str) -> str:
    """Performance file for a classification run against supplied gold labels."""
    lines = [f"target: {target}", f"documents: {report.total}"]
    lines.extend(render_metrics(report))
    return "\n".join(lines) + "\n"


def write_predictions_csv(rows: Sequence[tuple[str, str]], path: Path) -> None:
    """The ``id;predicted`` output schema."""
    lines = ["id;predicted"]
    lines.extend(f"{doc_id};{label}" for doc_id, label in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_feature_csv(
    docs: Sequence[Document], vectors: Sequence[Mapping[str, float]], labels: Sequence[str], path: Path
) -> None:
    names = feature_names(vectors)
    header = ",".join(["id", *names, "label"])
    lines = [header]
    for doc, vec, label in zip(docs, vectors, labels):
        cells = [doc.id]
        cells.extend(repr(vec.get(name, 0.0)) for name in names)
        cells.append(label.upper())
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# The per-emotion training suite
# ---------------------------------------------------------------------------


def train_emotion_suite(
    corpus: Sequence[Document],
    emotion: str,
    politeness_enabled: bool,
    out_dir: Path,
    delimiter: str = "sc",
    seed: int = DEFAULT_SEED,
    min_df: int = 2,
    cost_grid: Sequence[float] = DEFAULT_COST_GRID,
    folds: int = 5,
    test_fraction: float = 0.3,
    solver_ids: Sequence[int] = tuple(range(8)),
    lexicon: EmotionLexicon | None = None,
) -> TrainArtifacts:
    """Train the 8 x 2 model grid for one emotion and write the artifact tree.

    Reruns with the same inputs and seed are byte-identical; partial output is
    removed when any step fails.
    """
    if emotion not in EMOTIONS:
        raise ValueError(f"unknown emotion {emotion!r}")
    labels = [_normalize_binary_label(doc.gold, doc.id) for doc in corpus]
    out_dir = Path(out_dir)
    if out_dir.exists():
        shutil.rmtree(out_dir)
    try:
        return _train_emotion_suite_inner(
            corpus, labels, emotion, politeness_enabled, out_dir, delimiter, seed,
            min_df, cost_grid, folds, test_fraction, solver_ids, lexicon,
        )
    except BaseException:
        if out_dir.exists():
            shutil.rmtree(out_dir)
        raise


def _train_emotion_suite_inner(
    corpus, labels, emotion, politeness_enabled, out_dir, delimiter, seed,
    min_df, cost_grid, folds, test_fraction, solver_ids, lexicon,
) -> TrainArtifacts:
    ngrams_dir = out_dir / "n-grams"
    idfs_dir = out_dir / "idfs"
    feature_csv = out_dir / f"feature-{emotion}.csv"
    regime_dirs = {
        "DownSampling": out_dir / "liblinear" / "DownSampling",
        "NoDownSampling": out_dir / "liblinear" / "NoDownSampling",
    }
    out_dir.mkdir(parents=True)

    model = build_ngram_model(corpus, min_df=min_df)
    save_ngram_model(model, ngrams_dir, idfs_dir)

    lexicon = lexicon or default_emotion_lexicon()
    word_idf = compute_emotion_word_idf(corpus, lexicon)
    save_idf_table(word_idf, idfs_dir / EMOTION_WORD_IDF_FILENAME)
    lexicon = lexicon.with_idf(word_idf)

    vectors = {
        doc.id: emotion_feature_vector(doc, model, lexicon, politeness_enabled)
        for doc in corpus
    }
    labeled = [
        Document(id=doc.id, text=doc.text, gold=label.upper())
        for doc, label in zip(corpus, labels)
    ]
    _write_feature_csv(labeled, [vectors[d.id] for d in labeled], labels, feature_csv)

    lowered = [Document(id=d.id, text=d.text, gold=(d.gold or "").lower()) for d in labeled]
    train_docs, test_docs = split_train_test(lowered, test_fraction, seed)
    fingerprint = corpus_fingerprint(lowered)

    model_files: list[Path] = []
    performance_files: list[Path] = []
    prediction_files: list[Path] = []
    for regime, regime_dir in regime_dirs.items():
        regime_dir.mkdir(parents=True)
        regime_train = downsample(train_docs, seed) if regime == "DownSampling" else list(train_docs)
        for name, docs in (("trainingSet.csv", regime_train), ("testSet.csv", test_docs)):
            upper = [Document(id=d.id, text=d.text, gold=(d.gold or "").upper()) for d in docs]
            (regime_dir / name).write_bytes(serialize_corpus(upper, delimiter, has_label=True))

        train_vectors = [vectors[d.id] for d in regime_train]
        train_labels = [d.gold or "" for d in regime_train]
        test_gold = {d.id: d.gold or "" for d in test_docs}
        for solver_id in solver_ids:
            solver = SOLVERS[solver_id]
            tuned = tune_cost(train_vectors, train_labels, solver, cost_grid, folds, seed)
            trained = train_linear(
                train_vectors,
                train_labels,
                solver,
                tuned.best_cost,
                seed=seed,
                target=emotion,
                fingerprint=fingerprint,
            )
            predictions = {d.id: predict(trained, vectors[d.id])[0] for d in test_docs}
            report = replace(
                evaluate(predictions, test_gold, classes=("yes", "no")),
                best_cost=tuned.best_cost,
                tuning_scores=tuned.scores,
                fold_warnings=tuned.fold_warnings,
            )

            model_path = regime_dir / f"model_{emotion}_{solver_id}.model"
            write_model_file(trained, model_path)
            model_files.append(model_path)

            perf_path = regime_dir / f"performance_{emotion}_{solver_id}.txt"
            perf_path.write_text(
                render_performance(report, solver, regime, emotion, cost_grid),
                encoding="utf-8",
            )
            performance_files.append(perf_path)

            pred_path = regime_dir / f"predictions_{emotion}_{solver_id}.csv"
            rows = [(d.id, predictions[d.id].upper()) for d in test_docs]
            write_predictions_csv(rows, pred_path)
            prediction_files.append(pred_path)

    return TrainArtifacts(
        root=out_dir,
        ngrams_dir=ngrams_dir,
        idfs_dir=idfs_dir,
        feature_csv=feature_csv,
        regime_dirs=regime_dirs,
        model_files=tuple(model_files),
        performance_files=tuple(performance_files),
        prediction_files=tuple(prediction_files),
    )


# ---------------------------------------------------------------------------
# The three-class polarity model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarityTrainResult:
    model: PolarityModel
    report: PerformanceReport
    config: FeatureConfig
    ngram_model: NgramModel | None
    emotion_lexicon: EmotionLexicon | None
    sentiment_lexicon: SentimentLexicon | None
    wordspace: WordSpace | None


def train_polarity(
    corpus: Sequence[Document],
    config: FeatureConfig,
    seed: int = DEFAULT_SEED,
    wordspace: WordSpace | None = None,
    emotion_lexicon: EmotionLexicon | None = None,
    sentiment_lexicon: SentimentLexicon | None = None,
    min_df: int = 2,
    solver_id: int = 0,
    cost_grid: Sequence[float] = DEFAULT_COST_GRID,
    folds: int = 5,
    test_fraction: float = 0.3,
) -> PolarityTrainResult:
    """One-vs-rest polarity training with a held-out evaluation split."""
    for doc in corpus:
        if (doc.gold or "").strip().lower() not in POLARITIES:
            raise CorpusFormatError(
                f"document {doc.id!r}: expected a polarity label, got {doc.gold!r}"
            )
    normalized = [
        Document(id=d.id, text=d.text, gold=(d.gold or "").strip().lower()) for d in corpus
    ]
    present = {d.gold for d in normalized}
    if present != set(POLARITIES):
        missing = sorted(set(POLARITIES) - present)
        raise TrainingError(f"polarity corpus is missing class(es): {missing}")

    mode = config.mode
    ngram_model = build_ngram_model(normalized, min_df=min_df) if mode in ("A", "K") else None
    if mode in ("A", "L"):
        emotion_lexicon = emotion_lexicon or default_emotion_lexicon()
        sentiment_lexicon = sentiment_lexicon or default_sentiment_lexicon()
    if mode in ("A", "S") and wordspace is None:
        wordspace = build_wordspace(normalized, config.vector_dim, seed=seed)

    vectors = {
        d.id: assemble_features(
            d, config, ngram_model, emotion_lexicon, sentiment_lexicon, wordspace
        )
        for d in normalized
    }
    train_docs, test_docs = split_train_test(normalized, test_fraction, seed)
    fingerprint = corpus_fingerprint(normalized)

    train_vectors = [vectors[d.id] for d in train_docs]
    models: dict[str, LinearModel] = {}
    for polarity in POLARITIES:
        labels = ["yes" if d.gold == polarity else "no" for d in train_docs]
        tuned = tune_cost(train_vectors, labels, solver_id, cost_grid, folds, seed)
        models[polarity] = train_linear(
            train_vectors,
            labels,
            solver_id,
            tuned.best_cost,
            seed=seed,
            target=polarity,
            fingerprint=fingerprint,
        )
    model = PolarityModel(models=models)

    predictions = {d.id: predict_polarity(model, vectors[d.id])[0] for d in test_docs}
    gold = {d.id: d.gold or "" for d in test_docs}
    report = evaluate(predictions, gold, classes=POLARITIES)
    return PolarityTrainResult(
        model=model,
        report=report,
        config=config,
        ngram_model=ngram_model,
        emotion_lexicon=emotion_lexicon,
        sentiment_lexicon=sentiment_lexicon,
        wordspace=wordspace,
    )


def save_polarity_bundle(result: PolarityTrainResult, path: Path) -> None:
    """Self-contained JSON bundle: models plus every resource prediction needs."""
    config = result.config

    def model_dict(m: LinearModel) -> dict:
        return {
            "weights": dict(sorted(m.weights.items())),
            "bias": m.bias,
            "cost": m.cost,
            "solver_id": m.solver.id,
            "target": m.target,
            "fingerprint": m.fingerprint,
            "seed": m.seed,
        }

    payload: dict = {
        "format": POLARITY_BUNDLE_FORMAT,
        "version": 1,
        "mode": config.mode,
        "vector_dim": config.vector_dim,
        "politeness_mood": config.politeness_mood,
        "unigram_allowlist": sorted(config.unigram_allowlist) if config.unigram_allowlist else None,
        "bigram_allowlist": sorted(config.bigram_allowlist) if config.bigram_allowlist else None,
        "classes": list(result.model.priority),
        "models": {cls: model_dict(m) for cls, m in sorted(result.model.models.items())},
        "ngrams": None,
        "emotion_lexicon": None,
        "sentiment_lexicon": None,
        "wordspace": None,
    }
    if result.ngram_model is not None:
        payload["ngrams"] = {
            "unigrams": list(result.ngram_model.unigrams),
            "bigrams": list(result.ngram_model.bigrams),
            "idf": dict(sorted(result.ngram_model.idf.items())),
        }
    if result.emotion_lexicon is not None:
        payload["emotion_lexicon"] = {
            e: sorted(words) for e, words in sorted(result.emotion_lexicon.words.items())
        }
    if result.sentiment_lexicon is not None:
        payload["sentiment_lexicon"] = {
            "positive": sorted(result.sentiment_lexicon.positive),
            "negative": sorted(result.sentiment_lexicon.negative),
            "negations": sorted(result.sentiment_lexicon.negations),
        }
    if result.wordspace is not None:
        payload["wordspace"] = {
            "dim": result.wordspace.dim,
            "vectors": {w: result.wordspace.vectors[w].tolist() for w in sorted(result.wordspace.vectors)},
        }
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_polarity_bundle(path: Path) -> PolarityTrainResult:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ResourceFormatError(f"{path}: cannot read polarity model: {exc}") from exc
    if payload.get("format") != POLARITY_BUNDLE_FORMAT:
        raise ResourceFormatError(f"{path}: not a polarity model bundle")

    config = FeatureConfig(
        mode=payload["mode"],
        politeness_mood=payload["politeness_mood"],
        vector_dim=payload["vector_dim"],
        unigram_allowlist=frozenset(payload["unigram_allowlist"]) if payload.get("unigram_allowlist") else None,
        bigram_allowlist=frozenset(payload["bigram_allowlist"]) if payload.get("bigram_allowlist") else None,
    )
    models = {}
    for cls, m in payload["models"].items():
        models[cls] = LinearModel(
            weights=m["weights"],
            bias=m["bias"],
            cost=m["cost"],
            solver=SOLVERS[m["solver_id"]],
            target=m.get("target", cls),
            fingerprint=m.get("fingerprint", ""),
            seed=m.get("seed", DEFAULT_SEED),
        )
    ngram_model = None
    if payload.get("ngrams"):
        raw = payload["ngrams"]
        ngram_model = NgramModel(
            unigrams=tuple(raw["unigrams"]), bigrams=tuple(raw["bigrams"]), idf=raw["idf"]
        )
    emotion_lexicon = None
    if payload.get("emotion_lexicon"):
        emotion_lexicon = EmotionLexicon(
            words={e: frozenset(w) for e, w in payload["emotion_lexicon"].items()}
        )
    sentiment_lexicon = None
    if payload.get("sentiment_lexicon"):
        raw = payload["sentiment_lexicon"]
        sentiment_lexicon = SentimentLexicon(
            positive=frozenset(raw["positive"]),
            negative=frozenset(raw["negative"]),
            negations=frozenset(raw["negations"]),
        )
    wordspace = None
    if payload.get("wordspace"):
        raw = payload["wordspace"]
        wordspace = WordSpace(
            dim=raw["dim"],
            vectors={w: np.array(v, dtype=np.float64) for w, v in raw["vectors"].items()},
        )
    report = PerformanceReport(
        classes=tuple(payload["classes"]),
        confusion={},
        precision={},
        recall={},
        f1={},
        macro_precision=0.0,
        macro_recall=0.0,
        macro_f1=0.0,
        accuracy=0.0,
        total=0,
    )
    return PolarityTrainResult(
        model=PolarityModel(models=models, priority=tuple(payload["classes"])),
        report=report,
        config=config,
        ngram_model=ngram_model,
        emotion_lexicon=emotion_lexicon,
        sentiment_lexicon=sentiment_lexicon,
        wordspace=wordspace,
    )
