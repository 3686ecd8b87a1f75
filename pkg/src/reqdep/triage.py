"""Annotation triage: rank all requirement pairs by embedding cosine
similarity so annotators start with the most likely dependencies."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import AnnotatedPair, Corpus, RequirementPair, generate_pairs
from .embedding import EmbeddingProviderConfig, cosine_similarity, embed_batch


@dataclass(frozen=True)
class TriageRanking:
    ranked: tuple[tuple[RequirementPair, float], ...]  # scores non-increasing
    model_id: str


def rank_pairs(corpus: Corpus, embedding: EmbeddingProviderConfig) -> TriageRanking:
    """Score every unique pair by cosine of its requirement embeddings.

    Output is sorted descending; ties keep pair-generation order.
    """
    pairs = generate_pairs(corpus)
    texts = list(dict.fromkeys(req.text for req in corpus.requirements))
    vectors = dict(zip(texts, embed_batch(texts, embedding)))
    scored = [
        (pair, cosine_similarity(vectors[pair.a.text], vectors[pair.b.text]))
        for pair in pairs
    ]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    return TriageRanking(
        ranked=tuple(scored[i] for i in order), model_id=embedding.model_id
    )


def write_annotator_csv(
    path: Path,
    ranking: TriageRanking,
    top: Optional[int] = None,
    partial: Sequence[AnnotatedPair] = (),
) -> None:
    """Annotator worksheet: ranked pairs with an empty label column.

    When partial annotations are given, a running count of dependent pairs is
    added so the annotator can judge when new dependencies plateau.
    """
    labeled = {ap.pair.pair_id: ap.label for ap in partial}
    ranked = ranking.ranked if top is None else ranking.ranked[:top]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["rank", "req_a_id", "req_b_id", "score", "label"]
        if partial:
            header.append("dependent_so_far")
        writer.writerow(header)
        dependent = 0
        for position, (pair, score) in enumerate(ranked, start=1):
            label = labeled.get(pair.pair_id)
            row = [
                position,
                pair.a.id,
                pair.b.id,
                f"{score:.6f}",
                label.value if label is not None else "",
            ]
            if partial:
                if label is not None and label.value != "No_dependency":
                    dependent += 1
                row.append(dependent)
            writer.writerow(row)
