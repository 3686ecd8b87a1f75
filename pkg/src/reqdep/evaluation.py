"""Evaluation: confusion matrices, macro metrics, Cohen's kappa, stratified
splits, and the intra-/cross-dataset experiment and sweep runners."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Optional, Sequence

from .core import (
    GROUND_TRUTH_LABELS,
    AnnotatedPair,
    Corpus,
    DependencyLabel,
    RequirementPair,
)
from .embedding import EmbeddingProviderConfig, embed_batch
from .errors import InvalidSpec, LengthMismatch, PairSetMismatch
from .inference import LlmProvider, ModelConfig, Prediction, classify_many
from .ingest import save_predictions
from .prompt import DependencyDefinition, PromptContext, default_definitions
from .retrieval import (
    EmbeddedStore,
    RetrievalConfig,
    chunk_text,
    retrieve_context,
    retrieve_examples,
)

ALL_CLASSES: tuple[DependencyLabel, ...] = GROUND_TRUTH_LABELS + (
    DependencyLabel.UNPARSED,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are ground truth, columns are predictions (Unparsed is a valid
    predicted column but never a row with support)."""

    classes: tuple[DependencyLabel, ...]
    counts: tuple[tuple[int, ...], ...]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.classes)))

    def support(self, label: DependencyLabel) -> int:
        return sum(self.counts[self.classes.index(label)])


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    per_class: dict[DependencyLabel, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    evaluated_classes: tuple[DependencyLabel, ...]
    excluded_zero_support_classes: tuple[DependencyLabel, ...]
    confusion: ConfusionMatrix

    @property
    def total(self) -> int:
        return self.confusion.total()


def _confusion(
    gold: Sequence[DependencyLabel], predicted: Sequence[DependencyLabel]
) -> ConfusionMatrix:
    index = {label: i for i, label in enumerate(ALL_CLASSES)}
    counts = [[0] * len(ALL_CLASSES) for _ in ALL_CLASSES]
    for g, p in zip(gold, predicted):
        counts[index[g]][index[p]] += 1
    return ConfusionMatrix(ALL_CLASSES, tuple(tuple(row) for row in counts))


def report_from_labels(
    gold: Sequence[DependencyLabel], predicted: Sequence[DependencyLabel]
) -> EvaluationReport:
    """Metrics from aligned label sequences.

    Per-class P = TP/(TP+FP) and R = TP/(TP+FN), both 0 when the denominator
    is 0; F1 is their harmonic mean.  Macro averages cover only classes with
    ground-truth support > 0.
    """
    if len(gold) != len(predicted):
        raise LengthMismatch(f"{len(gold)} gold vs {len(predicted)} predicted")
    matrix = _confusion(gold, predicted)
    per_class: dict[DependencyLabel, ClassMetrics] = {}
    for i, label in enumerate(ALL_CLASSES):
        tp = matrix.counts[i][i]
        fp = sum(matrix.counts[r][i] for r in range(len(ALL_CLASSES))) - tp
        fn = sum(matrix.counts[i]) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, tp + fn)

    evaluated = tuple(lbl for lbl in ALL_CLASSES if per_class[lbl].support > 0)
    predicted_set = set(predicted)
    excluded = tuple(
        lbl
        for lbl in ALL_CLASSES
        if per_class[lbl].support == 0 and lbl in predicted_set
    )
    n_eval = len(evaluated)
    macro_p = sum(per_class[lbl].precision for lbl in evaluated) / n_eval if n_eval else 0.0
    macro_r = sum(per_class[lbl].recall for lbl in evaluated) / n_eval if n_eval else 0.0
    macro_f = sum(per_class[lbl].f1 for lbl in evaluated) / n_eval if n_eval else 0.0
    total = matrix.total()
    accuracy = matrix.trace() / total if total else 0.0
    return EvaluationReport(
        accuracy=accuracy,
        per_class={lbl: per_class[lbl] for lbl in evaluated},
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        evaluated_classes=evaluated,
        excluded_zero_support_classes=excluded,
        confusion=matrix,
    )


def macro_f1_from_labels(
    gold: Sequence[DependencyLabel], predicted: Sequence[DependencyLabel]
) -> float:
    return report_from_labels(gold, predicted).macro_f1


def compute_report(
    ground_truth: Sequence[AnnotatedPair], predictions: Sequence[Prediction]
) -> EvaluationReport:
    """Evaluate predictions against annotated pairs matched by pair_id."""
    gold_by_id = {annotated.pair.pair_id: annotated.label for annotated in ground_truth}
    pred_by_id = {prediction.pair_id: prediction.label for prediction in predictions}
    if set(gold_by_id) != set(pred_by_id):
        missing = set(gold_by_id) ^ set(pred_by_id)
        raise PairSetMismatch(f"pair id sets differ, e.g. {sorted(missing)[:5]}")
    ordered = sorted(gold_by_id)
    return report_from_labels(
        [gold_by_id[pid] for pid in ordered], [pred_by_id[pid] for pid in ordered]
    )


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> float:
    """Chance-corrected agreement between two aligned label sequences."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    if not labels_a:
        raise LengthMismatch("empty label sequences")
    n = len(labels_a)
    observed = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    categories = set(labels_a) | set(labels_b)
    expected = sum(
        (sum(a == cat for a in labels_a) / n) * (sum(b == cat for b in labels_b) / n)
        for cat in categories
    )
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def stratified_split(
    annotated: Sequence[AnnotatedPair], ratio: float, seed: int
) -> tuple[list[AnnotatedPair], list[AnnotatedPair]]:
    """Per-class split into (pool, test); ``ratio`` is the pool share.

    Per class the test side gets round((1-ratio)*support) items, at least 1
    when support >= 2 and never the whole class.  Selection is a seeded
    shuffle of the class members ordered by pair_id, so the split does not
    depend on input order.
    """
    if not 0.0 < ratio < 1.0:
        raise InvalidSpec(f"split ratio {ratio} outside (0, 1)")
    by_label: dict[DependencyLabel, list[AnnotatedPair]] = {}
    for item in annotated:
        by_label.setdefault(item.label, []).append(item)
    pool: list[AnnotatedPair] = []
    test: list[AnnotatedPair] = []
    for label in GROUND_TRUTH_LABELS:
        members = sorted(by_label.get(label, []), key=lambda ap: ap.pair.pair_id)
        if not members:
            continue
        support = len(members)
        test_count = int((1.0 - ratio) * support + 0.5)
        if support >= 2:
            test_count = min(max(test_count, 1), support - 1)
        else:
            test_count = 0
        rng = random.Random(f"{seed}|{label.value}")
        rng.shuffle(members)
        test.extend(members[:test_count])
        pool.extend(members[test_count:])
    return pool, test


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str  # "intra" or "cross"
    pool_dataset: str
    test_dataset: str
    split_ratio: float = 0.8
    seed: int = 0
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    domain_name: str = "automotive domain"

    def __post_init__(self) -> None:
        if self.mode not in ("intra", "cross"):
            raise InvalidSpec(f"unknown mode {self.mode!r}")
        if self.mode == "intra" and self.pool_dataset != self.test_dataset:
            raise InvalidSpec("intra mode needs pool dataset == test dataset")
        if self.mode == "cross" and self.pool_dataset == self.test_dataset:
            raise InvalidSpec("cross mode needs pool dataset != test dataset")


@dataclass(frozen=True)
class DatasetBundle:
    """A corpus with its annotations and optional SRS description text."""

    corpus: Corpus
    annotations: tuple[AnnotatedPair, ...]
    srs_text: str = ""


def config_hash(*configs: object) -> str:
    """Stable short hash of the resolved configuration, for provenance."""

    def encode(obj: object) -> object:
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {
                f.name: encode(getattr(obj, f.name))
                for f in dataclasses.fields(obj)
            }
        if isinstance(obj, (list, tuple)):
            return [encode(item) for item in obj]
        if isinstance(obj, dict):
            return {str(k): encode(v) for k, v in obj.items()}
        if isinstance(obj, Path):
            return str(obj)
        if isinstance(obj, DependencyLabel):
            return obj.value
        return obj

    payload = json.dumps([encode(cfg) for cfg in configs], sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _context_pool_text(bundle: DatasetBundle) -> str:
    # Per the retrieval design: system-description text plus the requirements
    # list, which carries the architecture vocabulary.
    requirement_list = "\n".join(req.text for req in bundle.corpus.requirements)
    if bundle.srs_text:
        return bundle.srs_text.rstrip("\n") + "\n\n" + requirement_list
    return requirement_list


def _build_store(
    texts: Sequence[str], embedding: EmbeddingProviderConfig
) -> EmbeddedStore:
    unique = list(dict.fromkeys(texts))
    vectors = embed_batch(unique, embedding)
    store = EmbeddedStore(embedding.model_id)
    for text, vector in zip(unique, vectors):
        store.add(text, vector)
    return store


@dataclass(frozen=True)
class ExperimentResult:
    predictions_path: Path
    report: EvaluationReport
    predictions: tuple[Prediction, ...]
    test_pairs: tuple[AnnotatedPair, ...]
    config_digest: str
    wall_clock_seconds: float


def run_experiment(
    spec: ExperimentSpec,
    datasets: dict[str, DatasetBundle],
    provider: LlmProvider,
    out_dir: Path,
    definitions: Optional[Sequence[DependencyDefinition]] = None,
) -> ExperimentResult:
    """Full retrieval -> prompt -> inference -> evaluation run.

    Intra mode splits the dataset into an example pool and a test side; cross
    mode uses all of the pool dataset's annotations against all of the test
    dataset's.  All artifacts carry the configuration hash.
    """
    started = time.monotonic()
    test_bundle = datasets[spec.test_dataset]
    pool_bundle = datasets[spec.pool_dataset]
    if spec.mode == "intra":
        pool, test = stratified_split(
            test_bundle.annotations, spec.split_ratio, spec.seed
        )
    else:
        pool = list(pool_bundle.annotations)
        test = list(test_bundle.annotations)

    digest = config_hash(spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions_path = out_dir / f"predictions_{spec.test_dataset}_{digest}.csv"

    context_text = _context_pool_text(test_bundle)
    chunks = chunk_text(context_text, spec.retrieval.chunk_size, spec.retrieval.chunk_overlap)

    texts = [chunk.text for chunk in chunks]
    for annotated in pool + test:
        texts.extend((annotated.pair.a.text, annotated.pair.b.text))
    if spec.embedding.model_id != spec.retrieval.embed_model:
        raise InvalidSpec(
            "embedding provider model and retrieval embed_model must agree"
        )
    store = _build_store(texts, spec.embedding)

    resolved_definitions = tuple(definitions or default_definitions())
    jobs: list[tuple[RequirementPair, PromptContext]] = []
    for annotated in test:
        pair = annotated.pair
        context_chunks = tuple(
            retrieve_context(pair, chunks, spec.retrieval, store)
        )
        examples = retrieve_examples(pair, pool, spec.retrieval, store)
        ctx = PromptContext(
            domain_name=spec.domain_name,
            system_name=test_bundle.corpus.system_id or spec.test_dataset,
            pair=pair,
            examples=examples,
            context_chunks=context_chunks,
            definitions=resolved_definitions,
        )
        jobs.append((pair, ctx))

    predictions = classify_many(jobs, spec.model, provider, config_hash=digest)
    save_predictions(predictions_path, predictions)
    report = (
        compute_report(test, predictions)
        if test
        else report_from_labels([], [])
    )
    return ExperimentResult(
        predictions_path=predictions_path,
        report=report,
        predictions=tuple(predictions),
        test_pairs=tuple(test),
        config_digest=digest,
        wall_clock_seconds=time.monotonic() - started,
    )


@dataclass(frozen=True)
class SweepRow:
    dataset: str
    embed_model: str
    metric: str
    aggregation: str
    example_k: int
    chunk_size: int
    context_k: int
    macro_f1: float
    accuracy: float
    config_digest: str


def run_sweep(
    base_spec: ExperimentSpec,
    datasets: dict[str, DatasetBundle],
    provider: LlmProvider,
    out_dir: Path,
    embed_models: Sequence[str] = ("stub-sbert", "stub-bge"),
    metrics: Sequence[str] = ("cosine", "euclidean"),
    aggregations: Sequence[str] = ("max_avg", "avg"),
    example_ks: Sequence[int] = tuple(range(1, 10)),
    chunk_sizes: Sequence[int] = (),
    context_ks: Sequence[int] = (),
) -> list[SweepRow]:
    """Cartesian few-shot grid (embed model x metric x aggregation x k), then
    an optional RAG grid (chunk size x chunk count) on the base config.

    Emits one CSV row per configuration to ``out_dir/sweep_<dataset>.csv``.
    """
    rows: list[SweepRow] = []

    def run_one(spec: ExperimentSpec) -> None:
        result = run_experiment(spec, datasets, provider, Path(out_dir) / "runs")
        rows.append(
            SweepRow(
                dataset=spec.test_dataset,
                embed_model=spec.retrieval.embed_model,
                metric=spec.retrieval.metric,
                aggregation=spec.retrieval.aggregation,
                example_k=spec.retrieval.example_k,
                chunk_size=spec.retrieval.chunk_size,
                context_k=spec.retrieval.context_k,
                macro_f1=result.report.macro_f1,
                accuracy=result.report.accuracy,
                config_digest=result.config_digest,
            )
        )

    for embed_model in embed_models:
        for metric in metrics:
            for aggregation in aggregations:
                for k in example_ks:
                    retrieval = dataclasses.replace(
                        base_spec.retrieval,
                        embed_model=embed_model,
                        metric=metric,
                        aggregation=aggregation,
                        example_k=k,
                    )
                    embedding = dataclasses.replace(
                        base_spec.embedding, model_id=embed_model
                    )
                    run_one(
                        dataclasses.replace(
                            base_spec, retrieval=retrieval, embedding=embedding
                        )
                    )

    for chunk_size in chunk_sizes:
        for context_k in context_ks:
            retrieval = dataclasses.replace(
                base_spec.retrieval, chunk_size=chunk_size, context_k=context_k
            )
            run_one(dataclasses.replace(base_spec, retrieval=retrieval))

    out_path = Path(out_dir) / f"sweep_{base_spec.test_dataset}.csv"
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "dataset",
                "embed_model",
                "metric",
                "aggregation",
                "example_k",
                "chunk_size",
                "context_k",
                "macro_f1",
                "accuracy",
                "config_hash",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.dataset,
                    row.embed_model,
                    row.metric,
                    row.aggregation,
                    row.example_k,
                    row.chunk_size,
                    row.context_k,
                    f"{row.macro_f1:.6f}",
                    f"{row.accuracy:.6f}",
                    row.config_digest,
                ]
            )

    # Plot-friendly summary: per few-shot configuration, macro-F1 as a
    # function of the number of examples.
    curves: dict[str, list[list[float]]] = {}
    for row in rows:
        key = f"{row.embed_model}|{row.metric}|{row.aggregation}"
        curves.setdefault(key, []).append([row.example_k, row.macro_f1])
    for series in curves.values():
        series.sort()
    plot_path = Path(out_dir) / f"sweep_plotdata_{base_spec.test_dataset}.json"
    plot_path.write_text(json.dumps(curves, indent=2), encoding="utf-8")
    return rows


def write_report_csv(path: Path, report: EvaluationReport, digest: str) -> None:
    """Per-class and macro metrics as a small CSV with provenance."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "precision", "recall", "f1", "support", "config_hash"])
        for label in report.evaluated_classes:
            metrics = report.per_class[label]
            writer.writerow(
                [
                    label.value,
                    f"{metrics.precision:.6f}",
                    f"{metrics.recall:.6f}",
                    f"{metrics.f1:.6f}",
                    metrics.support,
                    digest,
                ]
            )
        writer.writerow(
            [
                "macro",
                f"{report.macro_precision:.6f}",
                f"{report.macro_recall:.6f}",
                f"{report.macro_f1:.6f}",
                report.total,
                digest,
            ]
        )
        writer.writerow(["accuracy", "", "", f"{report.accuracy:.6f}", report.total, digest])


def format_report(report: EvaluationReport) -> str:
    """Human-readable metrics table."""
    lines = [f"{'class':<16} {'P':>8} {'R':>8} {'F1':>8} {'support':>8}"]
    for label in report.evaluated_classes:
        metrics = report.per_class[label]
        lines.append(
            f"{label.value:<16} {metrics.precision:>8.3f} {metrics.recall:>8.3f} "
            f"{metrics.f1:>8.3f} {metrics.support:>8d}"
        )
    lines.append(
        f"{'macro':<16} {report.macro_precision:>8.3f} {report.macro_recall:>8.3f} "
        f"{report.macro_f1:>8.3f} {report.total:>8d}"
    )
    lines.append(f"accuracy: {report.accuracy:.4f}")
    if report.excluded_zero_support_classes:
        excluded = ", ".join(str(lbl) for lbl in report.excluded_zero_support_classes)
        lines.append(f"excluded zero-support classes: {excluded}")
    return "\n".join(lines)
