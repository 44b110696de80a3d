"""The ``emtk`` command-line tool.

Subcommands::

    emtk polarity           classify polarity (modes A/S/L/K)
    emtk polarity-train     train a polarity model bundle from a gold corpus
    emtk emotions train     train the per-emotion model grid
    emtk emotions classify  binary YES/NO classification for one emotion
    emtk bench              sequential-vs-parallel speedup measurement

Exit codes: 0 success, 1 runtime error, 2 usage error.  Relative paths
resolve against the workspace root (the EMTK_WORKSPACE environment variable,
defaulting to the current directory); mounting a shared folder and pointing
EMTK_WORKSPACE at it reproduces the container-style ``/shared`` workflow.

Without ``-m``, classification falls back to default models trained on the
packaged sample corpora (not on the original annotated gold standards, which
are distributed separately); ``--version`` states this provenance.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from ._data import read_data_bytes
from .bench import (
    BenchTask,
    render_report,
    results_to_csv,
    run_benchmark,
    synthetic_corpus,
)
from .classify import BatchClassifier, emotion_classifier, polarity_classifier
from .corpus import (
    EMOTIONS,
    Document,
    parse_corpus,
    parse_gold_emotions_corpus,
)
from .errors import (
    ConfigurationError,
    EmtkError,
    EquivalenceError,
    UsageError,
    WorkspaceEscapeError,
)
from .features import (
    FeatureConfig,
    WordSpace,
    compute_emotion_word_idf,
    default_emotion_lexicon,
    load_allowlist,
    load_wordspace,
)
from .learner import (
    DEFAULT_SEED,
    PolarityTrainResult,
    evaluate,
    load_polarity_bundle,
    read_model_file,
    render_classification_performance,
    save_polarity_bundle,
    train_emotion_suite,
    train_linear,
    train_polarity,
    write_predictions_csv,
)
from .pipeline import PipelineConfig, run_pipeline
from .textproc import build_ngram_model, load_ngram_model

VERSION_NOTE = (
    f"emtk {__version__} — default models are trained on the bundled sample corpora "
    "at first use; they are stand-ins, not the original annotated gold standards."
)

_default_polarity_cache: dict[tuple, PolarityTrainResult] = {}
_default_emotion_cache: dict[tuple, tuple] = {}


def resolve_shared_paths(path: str | Path, root: str | Path | None = None) -> Path:
    """Resolve a path against the workspace root; absolute paths pass through.

    Relative paths may not escape the root via ``..``.
    """
    p = Path(path)
    if p.is_absolute():
        return p
    base = Path(root if root is not None else os.environ.get("EMTK_WORKSPACE") or ".").resolve()
    candidate = (base / p).resolve()
    if candidate != base and base not in candidate.parents:
        raise WorkspaceEscapeError(f"{path!s} escapes the workspace root {base}")
    return candidate


def _read_input(path: Path, delimiter: str, has_label: bool) -> list[Document]:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise EmtkError(f"cannot read {path}: {exc}") from exc
    return parse_corpus(raw, delimiter, has_label=has_label)


def _classify_ordered(
    docs: list[Document], classifier: BatchClassifier, workers: int, batch_size: int
) -> list[tuple[str, str]]:
    """Run the pipeline and return (id, label) rows in input order."""
    rows: list[tuple[str, str]] = []
    errors: list[str] = []

    def sink(outcome) -> None:
        if outcome.ok:
            rows.append((outcome.doc_id, outcome.value))
        else:
            errors.append(f"{outcome.doc_id}: {outcome.error}")

    run_pipeline(
        docs,
        classifier.work,
        sink,
        config=PipelineConfig(workers=workers, batch_size=batch_size),
        work_batch=classifier.work_batch,
    )
    if errors:
        raise EmtkError(f"{len(errors)} document(s) failed, first: {errors[0]}")
    return rows


# ---------------------------------------------------------------------------
# polarity
# ---------------------------------------------------------------------------


def _polarity_config(args) -> FeatureConfig:
    unigrams = load_allowlist(resolve_shared_paths(args.ul)) if args.ul else None
    bigrams = load_allowlist(resolve_shared_paths(args.bl)) if args.bl else None
    return FeatureConfig(
        mode=args.F,
        politeness_mood=False,
        vector_dim=args.vd,
        unigram_allowlist=unigrams,
        bigram_allowlist=bigrams,
    )


def _load_wordspace_arg(args) -> WordSpace | None:
    if not getattr(args, "W", None):
        return None
    path = resolve_shared_paths(args.W)
    try:
        wordspace = load_wordspace(path.read_bytes())
    except OSError as exc:
        raise EmtkError(f"cannot read word space {path}: {exc}") from exc
    if wordspace.dim != args.vd:
        raise ConfigurationError(
            f"word space {path.name} has dimension {wordspace.dim}, but -vd is {args.vd}"
        )
    return wordspace


def _bundled_polarity_corpus() -> list[Document]:
    return parse_corpus(read_data_bytes("polarity", "gold_sample.csv"), "c", has_label=True)


def _default_polarity_bundle(
    config: FeatureConfig, wordspace: WordSpace | None, seed: int
) -> PolarityTrainResult:
    key = (
        config.mode,
        config.vector_dim,
        config.unigram_allowlist,
        config.bigram_allowlist,
        id(wordspace) if wordspace is not None else None,
        seed,
    )
    cached = _default_polarity_cache.get(key)
    if cached is None:
        corpus = _bundled_polarity_corpus()
        cached = train_polarity(corpus, config, seed=seed, wordspace=wordspace)
        _default_polarity_cache[key] = cached
    return cached


def cmd_polarity(args) -> int:
    config = _polarity_config(args)
    input_path = resolve_shared_paths(args.i)
    output_path = resolve_shared_paths(args.oc)
    docs = _read_input(input_path, args.d, has_label=args.L)

    wordspace = _load_wordspace_arg(args)
    if args.m:
        bundle = load_polarity_bundle(resolve_shared_paths(args.m))
        if bundle.config.mode != config.mode:
            raise ConfigurationError(
                f"model was trained with -F {bundle.config.mode}, invoked with -F {config.mode}"
            )
        if wordspace is not None:
            if wordspace.dim != bundle.config.vector_dim:
                raise ConfigurationError(
                    f"word space dimension {wordspace.dim} does not match the "
                    f"model's vector size {bundle.config.vector_dim}"
                )
            bundle = PolarityTrainResult(
                model=bundle.model,
                report=bundle.report,
                config=bundle.config,
                ngram_model=bundle.ngram_model,
                emotion_lexicon=bundle.emotion_lexicon,
                sentiment_lexicon=bundle.sentiment_lexicon,
                wordspace=wordspace,
            )
    else:
        bundle = _default_polarity_bundle(config, wordspace, args.seed)

    classifier = polarity_classifier(bundle, backend=args.backend)
    rows = _classify_ordered(docs, classifier, args.workers, args.batch_size)

    output_path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["id,predicted"]
    lines.extend(f"{doc_id},{label}" for doc_id, label in rows)
    output_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if args.L:
        gold = {d.id: (d.gold or "").strip().lower() for d in docs}
        report = evaluate(dict(rows), gold)
        perf_path = output_path.with_name(output_path.stem + ".performance.txt")
        perf_path.write_text(
            render_classification_performance(report, "polarity"), encoding="utf-8"
        )
        print(f"performance written to {perf_path}")
    print(f"predictions written to {output_path} ({len(rows)} rows, backend {classifier.backend})")
    return 0


def cmd_polarity_train(args) -> int:
    config = _polarity_config(args)
    input_path = resolve_shared_paths(args.i)
    docs = _read_input(input_path, args.d, has_label=True)
    wordspace = _load_wordspace_arg(args)
    result = train_polarity(docs, config, seed=args.seed, wordspace=wordspace)

    model_path = resolve_shared_paths(args.om)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_polarity_bundle(result, model_path)
    perf_path = model_path.with_name(model_path.stem + ".performance.txt")
    perf_path.write_text(
        render_classification_performance(result.report, "polarity"), encoding="utf-8"
    )
    print(f"model written to {model_path}")
    print(f"held-out macro F1 = {result.report.macro_f1:.4f} (report: {perf_path})")
    return 0


# ---------------------------------------------------------------------------
# emotions
# ---------------------------------------------------------------------------


def _bundled_emotion_corpus(emotion: str) -> list[Document]:
    pairs = parse_gold_emotions_corpus(read_data_bytes("emotions", "gold_sample.csv"), "sc")
    return [
        Document(id=d.id, text=d.text, gold="yes" if emotion in gold else "no")
        for d, gold in pairs
    ]


def _default_emotion_model(emotion: str, politeness: bool, seed: int):
    key = (emotion, politeness, seed)
    cached = _default_emotion_cache.get(key)
    if cached is None:
        corpus = _bundled_emotion_corpus(emotion)
        ngram_model = build_ngram_model(corpus, min_df=2)
        lexicon = default_emotion_lexicon()
        lexicon = lexicon.with_idf(compute_emotion_word_idf(corpus, lexicon))
        from .features import emotion_feature_vector  # local to avoid import cycle noise

        vectors = [emotion_feature_vector(d, ngram_model, lexicon, politeness) for d in corpus]
        labels = [d.gold or "" for d in corpus]
        model = train_linear(vectors, labels, 0, 1.0, seed=seed, target=emotion)
        cached = (model, ngram_model, lexicon)
        _default_emotion_cache[key] = cached
    return cached


def cmd_emotions_train(args) -> int:
    if args.g:
        print("warning: -g is accepted for compatibility and ignored", file=sys.stderr)
    input_path = resolve_shared_paths(args.i)
    docs = _read_input(input_path, args.d, has_label=True)
    out_dir = resolve_shared_paths(f"training_{input_path.name}_{args.e}")
    artifacts = train_emotion_suite(
        docs,
        args.e,
        politeness_enabled=args.p,
        out_dir=out_dir,
        delimiter=args.d,
        seed=args.seed,
        min_df=args.min_df,
    )
    print(f"training artifacts written to {artifacts.root}")
    return 0


def cmd_emotions_classify(args) -> int:
    if bool(args.m) and not (args.f and args.o):
        raise UsageError("a custom -m model also requires -f (idfs) and -o (n-grams)")
    input_path = resolve_shared_paths(args.i)
    docs = _read_input(input_path, args.d, has_label=args.l)

    if args.m:
        model = read_model_file(resolve_shared_paths(args.m))
        idfs_dir = resolve_shared_paths(args.f)
        ngrams_dir = resolve_shared_paths(args.o)
        ngram_model = load_ngram_model(ngrams_dir, idfs_dir)
        lexicon = default_emotion_lexicon()
        word_idf_path = idfs_dir / "EmotionWordsIDF.txt"
        if word_idf_path.exists():
            from .textproc import load_idf_table

            lexicon = lexicon.with_idf(load_idf_table(word_idf_path))
        vocab = set(ngram_model.unigrams) | set(ngram_model.bigrams)
        unknown = sum(
            1
            for name in model.weights
            if (name.startswith("uni:") and name[4:] not in vocab)
            or (name.startswith("bi:") and name[3:] not in vocab)
        )
        if unknown:
            print(
                f"warning: {unknown} model feature(s) are absent from the supplied "
                "n-gram lists and will never fire",
                file=sys.stderr,
            )
    else:
        model, ngram_model, lexicon = _default_emotion_model(args.e, args.p, args.seed)

    classifier = emotion_classifier(
        model, ngram_model, lexicon, politeness_mood=args.p, backend=args.backend
    )
    rows = _classify_ordered(docs, classifier, args.workers, args.batch_size)
    upper_rows = [(doc_id, label.upper()) for doc_id, label in rows]

    out_dir = resolve_shared_paths(f"classification_{input_path.name}_{args.e}")
    out_dir.mkdir(parents=True, exist_ok=True)
    pred_path = out_dir / f"predictions_{args.e}.csv"
    write_predictions_csv(upper_rows, pred_path)

    if args.l:
        gold = {d.id: (d.gold or "").strip().lower() for d in docs}
        report = evaluate({doc_id: label for doc_id, label in rows}, gold, classes=("yes", "no"))
        perf_path = out_dir / f"performance_{args.e}.txt"
        perf_path.write_text(
            render_classification_performance(report, args.e), encoding="utf-8"
        )
        print(f"performance written to {perf_path}")
    print(f"predictions written to {pred_path} ({len(rows)} rows, backend {classifier.backend})")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_corpus(args) -> list[Document]:
    if args.synthetic:
        return synthetic_corpus(args.synthetic, seed=args.seed, tokens_per_doc=args.tokens)
    if not args.i:
        raise ConfigurationError("bench needs an input corpus (-i) or --synthetic N")
    path = resolve_shared_paths(args.i)
    return _read_input(path, args.d, has_label=args.l)


def _bench_classifier(args, corpus: list[Document], backend: str) -> BatchClassifier:
    labeled = bool(args.synthetic) or args.l
    if args.task == "polarity":
        config = FeatureConfig(mode=args.F, politeness_mood=False, vector_dim=args.vd)
        if labeled:
            bundle = train_polarity(corpus, config, seed=args.seed)
        else:
            bundle = _default_polarity_bundle(config, None, args.seed)
        return polarity_classifier(bundle, backend=backend)
    # emotions task: binary model for the requested emotion
    if labeled and not args.synthetic:
        ngram_model = build_ngram_model(corpus, min_df=2)
        lexicon = default_emotion_lexicon()
        lexicon = lexicon.with_idf(compute_emotion_word_idf(corpus, lexicon))
        from .features import emotion_feature_vector

        vectors = [emotion_feature_vector(d, ngram_model, lexicon, args.p) for d in corpus]
        labels = [(d.gold or "").strip().lower() for d in corpus]
        model = train_linear(vectors, labels, 0, 1.0, seed=args.seed, target=args.e)
    else:
        model, ngram_model, lexicon = _default_emotion_model(args.e, args.p, args.seed)
    return emotion_classifier(model, ngram_model, lexicon, politeness_mood=args.p, backend=backend)


def cmd_bench(args) -> int:
    corpus = _bench_corpus(args)
    worker_counts = [int(w) for w in args.workers.split(",") if w]
    backends = ["compiled", "pure"] if args.backend == "both" else [args.backend]

    results = []
    for backend in backends:
        classifier = _bench_classifier(args, corpus, backend)
        task = BenchTask(
            name=f"{args.task}-classify",
            work=classifier.work,
            work_batch=classifier.work_batch,
            backend=classifier.backend,
        )
        results.extend(
            run_benchmark(
                corpus,
                task,
                worker_counts,
                repetitions=args.reps,
                batch_size=args.batch_size,
            )
        )

    print(render_report(results), end="")
    out_path = resolve_shared_paths(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(results_to_csv(results), encoding="utf-8")
    print(f"results written to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=0, help="worker threads (0 = CPU cores)")
    parser.add_argument("--batch-size", type=int, default=64, help="documents per pipeline message")
    parser.add_argument("--backend", choices=("auto", "compiled", "pure"), default="auto")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emtk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=VERSION_NOTE)
    sub = parser.add_subparsers(dest="command", required=True)

    pol = sub.add_parser("polarity", help="classify sentiment polarity")
    pol.add_argument("-F", choices=("A", "S", "L", "K"), required=True,
                     help="features: All, Semantic, Lexicon, Keyword")
    pol.add_argument("-i", required=True, metavar="input.csv", help="input corpus")
    pol.add_argument("-oc", required=True, metavar="output.csv", help="predictions output")
    pol.add_argument("-vd", type=int, required=True, metavar="N", help="word-space vector size")
    pol.add_argument("-W", metavar="dsm.bin", help="word space to use (default: built from the sample corpus)")
    pol.add_argument("-L", action="store_true", help="input has a gold label column")
    pol.add_argument("-ul", metavar="file", help="unigram allow-list")
    pol.add_argument("-bl", metavar="file", help="bigram allow-list")
    pol.add_argument("-m", metavar="model.json", help="polarity model bundle from polarity-train")
    pol.add_argument("-d", choices=("c", "sc"), default="c", help="input delimiter (default comma)")
    _add_common(pol)
    pol.set_defaults(func=cmd_polarity)

    pot = sub.add_parser("polarity-train", help="train a polarity model bundle")
    pot.add_argument("-F", choices=("A", "S", "L", "K"), required=True)
    pot.add_argument("-i", required=True, metavar="gold.csv", help="labeled training corpus")
    pot.add_argument("-om", required=True, metavar="model.json", help="output model bundle path")
    pot.add_argument("-vd", type=int, required=True, metavar="N")
    pot.add_argument("-W", metavar="dsm.bin")
    pot.add_argument("-ul", metavar="file")
    pot.add_argument("-bl", metavar="file")
    pot.add_argument("-d", choices=("c", "sc"), default="c")
    pot.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pot.set_defaults(func=cmd_polarity_train)

    emo = sub.add_parser("emotions", help="emotion training and classification")
    emo_sub = emo.add_subparsers(dest="emotions_command", required=True)

    etr = emo_sub.add_parser("train", help="train the per-emotion model grid")
    etr.add_argument("-i", required=True, metavar="file.csv")
    etr.add_argument("-p", action="store_true", help="extract politeness, mood and modality features (modality folds into the mood heuristic)")
    etr.add_argument("-d", choices=("c", "sc"), required=True, help="c = comma, sc = semicolon")
    etr.add_argument("-g", action="store_true", help=argparse.SUPPRESS)  # accepted, ignored
    etr.add_argument("-e", choices=EMOTIONS, required=True, help="the emotion to detect")
    etr.add_argument("--seed", type=int, default=DEFAULT_SEED)
    etr.add_argument("--min-df", type=int, default=2, help="minimum document frequency for n-grams")
    etr.set_defaults(func=cmd_emotions_train)

    ecl = emo_sub.add_parser("classify", help="classify one emotion (YES/NO)")
    ecl.add_argument("-i", required=True, metavar="file.csv")
    ecl.add_argument("-p", action="store_true", help="extract politeness, mood and modality features (modality folds into the mood heuristic)")
    ecl.add_argument("-d", choices=("c", "sc"), required=True)
    ecl.add_argument("-e", choices=EMOTIONS, required=True)
    ecl.add_argument("-m", metavar="model", help="model file from a training run")
    ecl.add_argument("-f", metavar="idfs", help="idfs folder from the training run")
    ecl.add_argument("-o", metavar="ngrams", help="n-grams folder from the training run")
    ecl.add_argument("-l", action="store_true", help="input has a gold label column")
    _add_common(ecl)
    ecl.set_defaults(func=cmd_emotions_classify)

    ben = sub.add_parser("bench", help="sequential vs parallel speedup benchmark")
    ben.add_argument("--task", choices=("polarity", "emotions"), required=True)
    ben.add_argument("-i", metavar="corpus.csv", help="benchmark corpus")
    ben.add_argument("--synthetic", type=int, metavar="N", help="generate N synthetic documents")
    ben.add_argument("--tokens", type=int, default=40, help="tokens per synthetic document")
    ben.add_argument("--workers", default="1,2,4,8", help="comma-separated worker counts")
    ben.add_argument("--reps", type=int, default=3, help="timed repetitions per configuration")
    ben.add_argument("--backend", choices=("auto", "compiled", "pure", "both"), default="auto")
    ben.add_argument("--batch-size", type=int, default=64)
    ben.add_argument("-d", choices=("c", "sc"), default="sc")
    ben.add_argument("-l", action="store_true", help="corpus has gold labels (train on it)")
    ben.add_argument("-F", choices=("A", "S", "L", "K"), default="A", help="polarity feature mode")
    ben.add_argument("-vd", type=int, default=300)
    ben.add_argument("-e", choices=EMOTIONS, default="love", help="emotion for --task emotions")
    ben.add_argument("-p", action="store_true", help="include politeness/mood features")
    ben.add_argument("--out", default="bench_results.csv", help="machine-readable CSV output")
    ben.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ben.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except EquivalenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.diff_sample:
            print(f"  {line}", file=sys.stderr)
        return 1
    except EmtkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
