"""TF-IDF + LSA recommender baseline for Requires dependencies.

Documents are requirement texts.  Term weighting is smoothed idf
(ln((1+N)/(1+df)) + 1) over raw term counts with L2 row normalization; the
low-rank projection comes from an exact eigen-decomposition of the Gram
matrix, which is cheap at corpus scale (hundreds of documents).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import AnnotatedPair, DependencyLabel, Requirement
from .errors import DegenerateValidation, EmptyVocabulary, RankTooLarge

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: tuple[str, ...]  # sorted lexicographically
    idf: np.ndarray  # aligned with vocabulary
    doc_count: int

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        """Raw term counts times idf, rows L2-normalized (zero rows stay zero)."""
        index = {term: i for i, term in enumerate(self.vocabulary)}
        matrix = np.zeros((len(texts), len(self.vocabulary)))
        for row, text in enumerate(texts):
            for token in tokenize(text):
                col = index.get(token)
                if col is not None:
                    matrix[row, col] += 1.0
        matrix *= self.idf
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        np.divide(matrix, norms, out=matrix, where=norms > 0)
        return matrix


@dataclass(frozen=True)
class LsaModel:
    rank: int
    projection: np.ndarray  # rank x |V|, orthonormal rows
    explained_variance: np.ndarray  # singular values squared, descending

    def project(self, tfidf_rows: np.ndarray) -> np.ndarray:
        return tfidf_rows @ self.projection.T


@dataclass(frozen=True)
class BaselineConfig:
    lsa_rank: int = 100
    threshold: float = 0.5
    tokenizer: str = "lowercase-alnum"


DEFAULT_RANK_GRID = (25, 50, 100, 200)
DEFAULT_THRESHOLD_GRID = tuple(round(0.1 + 0.05 * i, 2) for i in range(17))  # 0.1..0.9


def fit(texts: Sequence[str], rank: int) -> tuple[TfidfModel, LsaModel]:
    """Fit TF-IDF weights and a rank-``rank`` decomposition on the corpus."""
    if len(texts) < 2:
        raise DegenerateValidation("need at least 2 documents to fit")
    doc_tokens = [tokenize(text) for text in texts]
    vocabulary = tuple(sorted({tok for tokens in doc_tokens for tok in tokens}))
    if not vocabulary:
        raise EmptyVocabulary("corpus has no alphanumeric tokens")
    n_docs = len(texts)
    df = np.zeros(len(vocabulary))
    index = {term: i for i, term in enumerate(vocabulary)}
    for tokens in doc_tokens:
        for term in set(tokens):
            df[index[term]] += 1
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    tfidf = TfidfModel(vocabulary=vocabulary, idf=idf, doc_count=n_docs)

    matrix = tfidf.transform(texts)
    max_rank = min(len(vocabulary), n_docs)
    if rank > max_rank:
        raise RankTooLarge(f"rank {rank} > min(|V|, N) = {max_rank}")

    # Right singular vectors via the (N x N) Gram matrix: eigh gives ascending
    # eigenvalues, so flip to descending before taking the top components.
    gram = matrix @ matrix.T
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]
    effective_rank = int(np.sum(eigenvalues > 1e-12))
    if rank > effective_rank:
        raise RankTooLarge(
            f"rank {rank} exceeds effective matrix rank {effective_rank}"
        )
    singular = np.sqrt(eigenvalues[:rank])
    projection = (eigenvectors[:, :rank].T @ matrix) / singular[:, None]
    lsa = LsaModel(
        rank=rank, projection=projection, explained_variance=eigenvalues[:rank]
    )
    return tfidf, lsa


def effective_rank(texts: Sequence[str]) -> int:
    """Numerical rank of the corpus TF-IDF matrix (caps usable LSA ranks)."""
    if len(texts) < 2:
        return 0
    doc_tokens = [tokenize(text) for text in texts]
    vocabulary = tuple(sorted({tok for tokens in doc_tokens for tok in tokens}))
    if not vocabulary:
        return 0
    tfidf, _ = _fit_tfidf_only(texts, vocabulary, doc_tokens)
    matrix = tfidf.transform(texts)
    return int(np.linalg.matrix_rank(matrix, tol=1e-9))


def _fit_tfidf_only(texts, vocabulary, doc_tokens):
    n_docs = len(texts)
    df = np.zeros(len(vocabulary))
    index = {term: i for i, term in enumerate(vocabulary)}
    for tokens in doc_tokens:
        for term in set(tokens):
            df[index[term]] += 1
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, doc_count=n_docs), None


def classify_pair(
    req_a: Requirement,
    req_b: Requirement,
    tfidf: TfidfModel,
    lsa: LsaModel,
    threshold: float,
) -> DependencyLabel:
    """Requires when the LSA-space cosine of the two texts reaches the
    threshold, NoDependency otherwise.  Symmetric in its inputs."""
    rows = tfidf.transform([req_a.text, req_b.text])
    projected = lsa.project(rows)
    norms = np.linalg.norm(projected, axis=1)
    if norms[0] == 0.0 or norms[1] == 0.0:
        logger.warning(
            "pair (%s, %s) is out of vocabulary after projection", req_a.id, req_b.id
        )
        return DependencyLabel.NO_DEPENDENCY
    cosine = float(projected[0] @ projected[1] / (norms[0] * norms[1]))
    return (
        DependencyLabel.REQUIRES if cosine >= threshold else DependencyLabel.NO_DEPENDENCY
    )


def tune(
    validation: Sequence[AnnotatedPair],
    corpus_texts: Sequence[str],
    rank_grid: Iterable[int] = DEFAULT_RANK_GRID,
    threshold_grid: Iterable[float] = DEFAULT_THRESHOLD_GRID,
) -> BaselineConfig:
    """Grid-search (rank, threshold) maximizing macro-F1 on the validation set.

    Ties prefer the smaller rank, then the smaller threshold.  Grid ranks
    above the corpus's effective rank are skipped.
    """
    from .evaluation import macro_f1_from_labels

    labels = {annotated.label for annotated in validation}
    if len(labels) < 2:
        raise DegenerateValidation("validation set has a single class")

    usable_rank = effective_rank(corpus_texts)
    best: tuple[float, int, float] | None = None  # (-f1, rank, threshold)
    for rank in sorted(set(rank_grid)):
        if rank > usable_rank:
            continue
        tfidf, lsa = fit(corpus_texts, rank)
        for threshold in sorted(set(threshold_grid)):
            gold, predicted = [], []
            for annotated in validation:
                gold.append(annotated.label)
                predicted.append(
                    classify_pair(
                        annotated.pair.a, annotated.pair.b, tfidf, lsa, threshold
                    )
                )
            score = macro_f1_from_labels(gold, predicted)
            key = (-score, rank, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        raise RankTooLarge("no grid rank fits the corpus; shrink the rank grid")
    return BaselineConfig(lsa_rank=best[1], threshold=best[2])
