"""Command-line entry point wiring all pipeline stages.

One binary, subcommand style.  Settings come from an optional TOML config
file with CLI flags winning; every output artifact embeds the hash of the
resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import baseline_tfidf as tfidf
from .core import Corpus, DependencyLabel, RequirementPair, canonical_label, generate_pairs
from .embedding import EmbeddingProviderConfig
from .errors import ConfigHashMismatch, ReqDepError
from .evaluation import (
    DatasetBundle,
    ExperimentSpec,
    cohens_kappa,
    compute_report,
    config_hash,
    format_report,
    run_experiment,
    run_sweep,
    write_report_csv,
)
from .inference import (
    EchoTopExampleProvider,
    LlmProvider,
    ModelConfig,
    Prediction,
    RemoteChatProvider,
    classify_many,
)
from .ingest import (
    load_annotations,
    load_predictions,
    load_requirements,
    load_srs,
    save_predictions,
)
from .prompt import PromptContext, load_definitions
from .retrieval import (
    RetrievalConfig,
    chunk_text,
    retrieve_context,
    retrieve_examples,
)
from .triage import rank_pairs, write_annotator_csv

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _setting(args: argparse.Namespace, file_config: dict, name: str, default):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    return file_config.get(name, default)


def _retrieval_config(args, file_config: dict) -> RetrievalConfig:
    section = file_config.get("retrieval", {})
    return RetrievalConfig(
        chunk_size=_setting(args, section, "chunk_size", 500),
        chunk_overlap=_setting(args, section, "chunk_overlap", 200),
        context_k=_setting(args, section, "context_k", 10),
        example_k=_setting(args, section, "example_k", 4),
        metric=_setting(args, section, "metric", "euclidean"),
        aggregation=_setting(args, section, "aggregation", "max_avg"),
        embed_model=_setting(args, section, "embed_model", "stub-16"),
    )


def _embedding_config(args, file_config: dict, retrieval: RetrievalConfig) -> EmbeddingProviderConfig:
    section = file_config.get("embedding", {})
    return EmbeddingProviderConfig(
        provider_kind=_setting(args, section, "embed_provider", "stub"),
        endpoint=_setting(args, section, "embed_endpoint", None),
        model_id=retrieval.embed_model,
        batch_size=_setting(args, section, "batch_size", 64),
        cache_path=_opt_path(_setting(args, section, "cache_path", None)),
    )


def _model_config(args, file_config: dict) -> ModelConfig:
    section = file_config.get("model", {})
    return ModelConfig(
        provider_kind="remote-chat"
        if _setting(args, section, "provider", "stub") == "remote-chat"
        else "stub",
        model_id=_setting(args, section, "model_id", "stub-llm"),
        temperature=_setting(args, section, "temperature", 0.0),
        max_retries=_setting(args, section, "max_retries", 1),
        request_timeout=_setting(args, section, "request_timeout", 60.0),
        max_parallel=_setting(args, section, "max_parallel", 4),
        endpoint=_setting(args, section, "endpoint", None),
    )


def _provider(args, model_config: ModelConfig) -> LlmProvider:
    kind = getattr(args, "provider", None) or "stub"
    if kind == "remote-chat":
        audit = _opt_path(getattr(args, "audit", None))
        return RemoteChatProvider(model_config, audit_path=audit)
    # Both "stub" and "oracle" answer from the retrieved examples; it is the
    # only deterministic choice that exercises the full pipeline offline.
    return EchoTopExampleProvider()


def _opt_path(value) -> Optional[Path]:
    return Path(value) if value else None


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _bundle(requirements: str, annotations: Optional[str], srs: Optional[str]) -> DatasetBundle:
    corpus = load_requirements(requirements)
    annotated = tuple(load_annotations(annotations, corpus)) if annotations else ()
    srs_text = load_srs(srs) if srs else ""
    return DatasetBundle(corpus=corpus, annotations=annotated, srs_text=srs_text)


def _cmd_ingest_check(args) -> int:
    corpus = load_requirements(args.requirements)
    print(f"{len(corpus)} requirements in system {corpus.system_id!r}")
    if args.annotations:
        annotated = load_annotations(args.annotations, corpus)
        counts: dict[str, int] = {}
        for item in annotated:
            counts[item.label.value] = counts.get(item.label.value, 0) + 1
        print(f"{len(annotated)} annotated pairs")
        for label, count in sorted(counts.items()):
            print(f"  {label}: {count}")
    return EXIT_OK


def _cmd_pairs(args) -> int:
    corpus = load_requirements(args.requirements)
    pairs = generate_pairs(corpus)
    print(f"{len(pairs)} pairs")
    out = _out_dir(args) / "pairs.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_id", "req_a_id", "req_b_id"])
        for pair in pairs:
            writer.writerow([pair.pair_id, pair.a.id, pair.b.id])
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_triage(args) -> int:
    file_config = _load_config_file(args.config)
    corpus = load_requirements(args.requirements)
    retrieval = _retrieval_config(args, file_config)
    embedding = _embedding_config(args, file_config, retrieval)
    ranking = rank_pairs(corpus, embedding)
    partial = ()
    if args.annotations:
        partial = load_annotations(args.annotations, corpus)
    out = _out_dir(args) / "triage.csv"
    write_annotator_csv(out, ranking, top=args.top, partial=partial)
    print(f"wrote {out} ({len(ranking.ranked)} ranked pairs)")
    return EXIT_OK


def _embedded_setup(args, file_config):
    retrieval = _retrieval_config(args, file_config)
    embedding = _embedding_config(args, file_config, retrieval)
    return retrieval, embedding


def _find_pair(corpus: Corpus, a_id: str, b_id: str) -> RequirementPair:
    index = {req.id: pos for pos, req in enumerate(corpus.requirements)}
    if index[a_id] > index[b_id]:
        a_id, b_id = b_id, a_id
    return RequirementPair(corpus.by_id(a_id), corpus.by_id(b_id))


def _cmd_retrieve_context(args) -> int:
    file_config = _load_config_file(args.config)
    retrieval, embedding = _embedded_setup(args, file_config)
    corpus = load_requirements(args.requirements)
    srs_text = load_srs(args.srs)
    pair = _find_pair(corpus, args.pair[0], args.pair[1])
    chunks = chunk_text(srs_text, retrieval.chunk_size, retrieval.chunk_overlap)
    from .evaluation import _build_store  # shared embedding plumbing

    store = _build_store(
        [chunk.text for chunk in chunks] + [pair.a.text, pair.b.text], embedding
    )
    top = retrieve_context(pair, chunks, retrieval, store)
    print(
        json.dumps(
            [
                {
                    "chunk_id": chunk.chunk_id,
                    "char_start": chunk.char_start,
                    "char_end": chunk.char_end,
                    "text": chunk.text,
                }
                for chunk in top
            ],
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_retrieve_examples(args) -> int:
    file_config = _load_config_file(args.config)
    retrieval, embedding = _embedded_setup(args, file_config)
    corpus = load_requirements(args.requirements)
    pool = load_annotations(args.annotations, corpus)
    pair = _find_pair(corpus, args.pair[0], args.pair[1])
    texts = [pair.a.text, pair.b.text]
    for annotated in pool:
        texts.extend((annotated.pair.a.text, annotated.pair.b.text))
    from .evaluation import _build_store

    store = _build_store(texts, embedding)
    examples = retrieve_examples(pair, pool, retrieval, store)
    print(
        json.dumps(
            {
                label.value: [
                    {
                        "pair_id": annotated.pair.pair_id,
                        "score": score,
                        "req_a": annotated.pair.a.text,
                        "req_b": annotated.pair.b.text,
                    }
                    for annotated, score in entries
                ]
                for label, entries in examples.items()
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_predict(args) -> int:
    file_config = _load_config_file(args.config)
    retrieval, embedding = _embedded_setup(args, file_config)
    model = _model_config(args, file_config)
    provider = _provider(args, model)
    corpus = load_requirements(args.requirements)
    pool = load_annotations(args.annotations, corpus) if args.annotations else []
    srs_text = load_srs(args.srs) if args.srs else ""
    bundle = DatasetBundle(corpus=corpus, annotations=tuple(pool), srs_text=srs_text)

    from .evaluation import _build_store, _context_pool_text

    context_text = _context_pool_text(bundle)
    chunks = chunk_text(context_text, retrieval.chunk_size, retrieval.chunk_overlap)
    pairs = generate_pairs(corpus)
    texts = [chunk.text for chunk in chunks] + [req.text for req in corpus.requirements]
    for annotated in pool:
        texts.extend((annotated.pair.a.text, annotated.pair.b.text))
    store = _build_store(texts, embedding)

    definitions = (
        tuple(load_definitions(args.definitions)) if args.definitions else None
    )
    digest = config_hash(retrieval, embedding, model)
    jobs = []
    for pair in pairs:
        kwargs = dict(
            domain_name=args.domain,
            system_name=corpus.system_id,
            pair=pair,
            examples=retrieve_examples(pair, pool, retrieval, store),
            context_chunks=tuple(retrieve_context(pair, chunks, retrieval, store)),
        )
        if definitions:
            kwargs["definitions"] = definitions
        jobs.append((pair, PromptContext(**kwargs)))
    predictions = classify_many(jobs, model, provider, config_hash=digest)
    out = _out_dir(args) / "predictions.csv"
    save_predictions(out, predictions)
    print(f"wrote {out} ({len(predictions)} predictions, config {digest})")
    return EXIT_OK


def _check_hashes(predictions: Sequence[Prediction], force: bool) -> None:
    hashes = {p.config_hash for p in predictions}
    if len(hashes) > 1 and not force:
        raise ConfigHashMismatch(
            f"predictions mix config hashes {sorted(hashes)}; rerun or pass --force"
        )


def _cmd_evaluate(args) -> int:
    corpus = load_requirements(args.requirements)
    ground_truth = load_annotations(args.annotations, corpus)
    predictions: list[Prediction] = []
    for path in args.predictions:
        predictions.extend(load_predictions(path))
    _check_hashes(predictions, args.force)
    # Predictions may cover only a split of the annotated pairs; score the
    # annotated subset they do cover. Predictions without ground truth are
    # still an error (caught in compute_report).
    predicted_ids = {p.pair_id for p in predictions}
    ground_truth = [ap for ap in ground_truth if ap.pair.pair_id in predicted_ids]
    report = compute_report(ground_truth, predictions)
    print(format_report(report))
    digest = predictions[0].config_hash if predictions else ""
    out = _out_dir(args) / "report.csv"
    write_report_csv(out, report, digest)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    file_config = _load_config_file(args.config)
    retrieval, embedding = _embedded_setup(args, file_config)
    model = _model_config(args, file_config)
    provider = _provider(args, model)
    datasets = {
        args.dataset: _bundle(args.requirements, args.annotations, args.srs)
    }
    pool_name = args.pool_dataset or args.dataset
    if args.mode == "cross":
        if not (args.pool_requirements and args.pool_annotations):
            print("cross mode needs --pool-requirements/--pool-annotations", file=sys.stderr)
            return EXIT_USAGE
        datasets[pool_name] = _bundle(
            args.pool_requirements, args.pool_annotations, args.pool_srs
        )
    spec = ExperimentSpec(
        mode=args.mode,
        pool_dataset=pool_name,
        test_dataset=args.dataset,
        split_ratio=args.split_ratio,
        seed=args.seed,
        retrieval=retrieval,
        model=model,
        embedding=embedding,
        domain_name=args.domain,
    )
    result = run_experiment(spec, datasets, provider, _out_dir(args))
    print(format_report(result.report))
    report_path = _out_dir(args) / f"report_{args.dataset}_{result.config_digest}.csv"
    write_report_csv(report_path, result.report, result.config_digest)
    print(f"wrote {result.predictions_path}")
    print(f"wrote {report_path}")
    if not result.test_pairs:
        print("empty test set", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    return EXIT_OK


def _cmd_sweep(args) -> int:
    file_config = _load_config_file(args.config)
    retrieval, embedding = _embedded_setup(args, file_config)
    model = _model_config(args, file_config)
    provider = _provider(args, model)
    datasets = {args.dataset: _bundle(args.requirements, args.annotations, args.srs)}
    spec = ExperimentSpec(
        mode="intra",
        pool_dataset=args.dataset,
        test_dataset=args.dataset,
        split_ratio=args.split_ratio,
        seed=args.seed,
        retrieval=retrieval,
        model=model,
        embedding=embedding,
        domain_name=args.domain,
    )
    rows = run_sweep(
        spec,
        datasets,
        provider,
        _out_dir(args),
        embed_models=args.embed_models,
        metrics=args.metrics,
        aggregations=args.aggregations,
        example_ks=list(range(1, args.max_examples + 1)),
        chunk_sizes=args.rag_chunk_sizes or (),
        context_ks=args.rag_context_ks or (),
    )
    print(f"{len(rows)} sweep rows -> {Path(args.out or 'out') / f'sweep_{args.dataset}.csv'}")
    return EXIT_OK


def _cmd_baseline_tfidf(args) -> int:
    corpus = load_requirements(args.requirements)
    train = load_annotations(args.train, corpus)
    test = load_annotations(args.test, corpus)
    texts = [req.text for req in corpus.requirements]
    if args.grid:
        config = tfidf.tune(train, texts)
    else:
        config = tfidf.BaselineConfig(lsa_rank=args.rank, threshold=args.threshold)
    model, lsa = tfidf.fit(texts, config.lsa_rank)
    digest = config_hash(config)
    predictions = []
    for annotated in test:
        label = tfidf.classify_pair(
            annotated.pair.a, annotated.pair.b, model, lsa, config.threshold
        )
        predictions.append(
            Prediction(
                pair_id=annotated.pair.pair_id,
                label=label,
                rationale="tfidf-lsa cosine threshold",
                confidence=5.0 if label is DependencyLabel.REQUIRES else 0.0,
                model_id=f"tfidf-lsa-d{config.lsa_rank}",
                config_hash=digest,
            )
        )
    out = _out_dir(args) / "baseline_tfidf_predictions.csv"
    save_predictions(out, predictions)
    report = compute_report(test, predictions)
    print(f"rank={config.lsa_rank} threshold={config.threshold}")
    print(format_report(report))
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_kappa(args) -> int:
    labels_a = _load_label_column(args.file_a)
    labels_b = _load_label_column(args.file_b)
    kappa = cohens_kappa(labels_a, labels_b)
    print(f"kappa: {kappa:.6f}")
    return EXIT_OK


def _load_label_column(path: str) -> list[DependencyLabel]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "label" not in reader.fieldnames:
            raise ReqDepError(f"{path}: no 'label' column")
        key_cols = [c for c in ("req_a_id", "req_b_id") if c in (reader.fieldnames or [])]
        rows = list(reader)
    if key_cols == ["req_a_id", "req_b_id"]:
        rows.sort(key=lambda r: (r["req_a_id"], r["req_b_id"]))
    return [canonical_label(row["label"]) for row in rows]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqdep",
        description="Typed requirement-dependency detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, config=True, out=True) -> None:
        if config:
            p.add_argument("--config", help="TOML config file; flags override")
        if out:
            p.add_argument("--out", help="output directory (default: out/)")

    def retrieval_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--chunk-size", type=int)
        p.add_argument("--chunk-overlap", type=int)
        p.add_argument("--context-k", type=int)
        p.add_argument("--example-k", type=int)
        p.add_argument("--metric", choices=["cosine", "euclidean"])
        p.add_argument("--aggregation", choices=["max_avg", "avg"])
        p.add_argument("--embed-model")
        p.add_argument("--embed-provider", choices=["stub", "remote"])
        p.add_argument("--embed-endpoint")
        p.add_argument("--cache-path")

    def model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--provider", choices=["stub", "remote-chat"], default="stub")
        p.add_argument("--model-id")
        p.add_argument("--endpoint")
        p.add_argument("--max-retries", type=int)
        p.add_argument("--max-parallel", type=int)
        p.add_argument("--audit", help="JSONL request/response audit log")
        p.add_argument("--domain", default="automotive domain")

    p = sub.add_parser("ingest-check", help="validate dataset files")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations")
    p.set_defaults(handler=_cmd_ingest_check)

    p = sub.add_parser("pairs", help="generate all unique requirement pairs")
    p.add_argument("--requirements", required=True)
    common(p, config=False)
    p.set_defaults(handler=_cmd_pairs)

    p = sub.add_parser("triage", help="similarity-ranked annotation worksheet")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", help="partial annotations for the running count")
    p.add_argument("--top", type=int)
    retrieval_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_triage)

    p = sub.add_parser("retrieve-context", help="top-k SRS chunks for one pair")
    p.add_argument("--requirements", required=True)
    p.add_argument("--srs", required=True)
    p.add_argument("--pair", nargs=2, metavar=("REQ_A", "REQ_B"), required=True)
    retrieval_flags(p)
    common(p, out=False)
    p.set_defaults(handler=_cmd_retrieve_context)

    p = sub.add_parser("retrieve-examples", help="per-type example retrieval for one pair")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--pair", nargs=2, metavar=("REQ_A", "REQ_B"), required=True)
    retrieval_flags(p)
    common(p, out=False)
    p.set_defaults(handler=_cmd_retrieve_examples)

    p = sub.add_parser("predict", help="classify every pair of a corpus")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", help="example pool")
    p.add_argument("--srs")
    p.add_argument("--definitions", help="JSON definition overrides")
    retrieval_flags(p)
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--force", action="store_true", help="allow mixed config hashes")
    common(p, config=False)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("run", help="full intra- or cross-dataset experiment")
    p.add_argument("--mode", choices=["intra", "cross"], default="intra")
    p.add_argument("--dataset", required=True, help="test dataset name")
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--srs")
    p.add_argument("--pool-dataset")
    p.add_argument("--pool-requirements")
    p.add_argument("--pool-annotations")
    p.add_argument("--pool-srs")
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    retrieval_flags(p)
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("sweep", help="configuration grid over one dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--requirements", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--srs")
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-models", nargs="+", default=["stub-sbert", "stub-bge"])
    p.add_argument("--metrics", nargs="+", default=["cosine", "euclidean"])
    p.add_argument("--aggregations", nargs="+", default=["max_avg", "avg"])
    p.add_argument("--max-examples", type=int, default=9)
    p.add_argument("--rag-chunk-sizes", nargs="*", type=int)
    p.add_argument("--rag-context-ks", nargs="*", type=int)
    retrieval_flags(p)
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("baseline-tfidf", help="TF-IDF & LSA Requires recommender")
    p.add_argument("--requirements", required=True)
    p.add_argument("--train", required=True, help="validation annotations for tuning")
    p.add_argument("--test", required=True, help="annotations to score")
    p.add_argument("--grid", action="store_true", help="tune (rank, threshold)")
    p.add_argument("--rank", type=int, default=100)
    p.add_argument("--threshold", type=float, default=0.5)
    common(p, config=False)
    p.set_defaults(handler=_cmd_baseline_tfidf)

    p = sub.add_parser("kappa", help="Cohen's kappa between two annotation files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(handler=_cmd_kappa)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ReqDepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
