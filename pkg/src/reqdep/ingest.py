"""File formats: requirements, annotations, SRS text, and prediction CSVs.

All tabular artifacts are UTF-8 CSV; CRLF is normalized to LF on load.
Loaders are pure functions of file contents.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import TYPE_CHECKING, Union

from .core import AnnotatedPair, Corpus, Requirement, RequirementPair, canonical_label
from .errors import (
    DuplicateId,
    DuplicatePair,
    EmptyText,
    MalformedRow,
    MissingColumn,
    UnknownRequirementId,
)

if TYPE_CHECKING:
    from .inference import Prediction

PathLike = Union[str, Path]

REQUIREMENTS_COLUMNS = ["id", "system_id", "text"]
ANNOTATIONS_COLUMNS = ["req_a_id", "req_b_id", "label"]
PREDICTIONS_COLUMNS = [
    "pair_id",
    "req_a_id",
    "req_b_id",
    "label",
    "confidence",
    "rationale",
    "model_id",
    "config_hash",
]


def _read_rows(path: PathLike, required: list[str]) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise MissingColumn(f"{path}: missing column {column!r}")
        return list(reader)


def load_requirements(path: PathLike) -> Corpus:
    """Load a requirements CSV (``id,system_id,text``) into a Corpus.

    Corpus order equals file order.
    """
    rows = _read_rows(path, REQUIREMENTS_COLUMNS)
    requirements: list[Requirement] = []
    seen: set[str] = set()
    system_id = ""
    for i, row in enumerate(rows, start=2):
        req_id = (row["id"] or "").strip()
        if req_id in seen:
            raise DuplicateId(f"{path}: duplicate requirement id {req_id!r} at row {i}")
        seen.add(req_id)
        text = (row["text"] or "").strip()
        if not text:
            raise EmptyText(f"{path}: empty text for requirement {req_id!r} at row {i}")
        system_id = row["system_id"]
        requirements.append(Requirement(id=req_id, system_id=system_id, text=text))
    return Corpus(system_id=system_id, requirements=tuple(requirements))


def load_annotations(path: PathLike, corpus: Corpus) -> list[AnnotatedPair]:
    """Load ground-truth annotations (``req_a_id,req_b_id,label``).

    Both ids must resolve in the corpus; duplicate unordered pairs are
    rejected.  Pairs are reoriented so ``a`` is the lower corpus index.
    """
    rows = _read_rows(path, ANNOTATIONS_COLUMNS)
    index = {req.id: pos for pos, req in enumerate(corpus.requirements)}
    annotated: list[AnnotatedPair] = []
    seen: set[frozenset[str]] = set()
    for i, row in enumerate(rows, start=2):
        a_id, b_id = row["req_a_id"].strip(), row["req_b_id"].strip()
        for req_id in (a_id, b_id):
            if req_id not in index:
                raise UnknownRequirementId(
                    f"{path}: unknown requirement id {req_id!r} at row {i}"
                )
        key = frozenset((a_id, b_id))
        if key in seen:
            raise DuplicatePair(f"{path}: duplicate pair ({a_id}, {b_id}) at row {i}")
        seen.add(key)
        if index[a_id] > index[b_id]:
            a_id, b_id = b_id, a_id
        pair = RequirementPair(corpus.by_id(a_id), corpus.by_id(b_id))
        annotated.append(AnnotatedPair(pair=pair, label=canonical_label(row["label"])))
    return annotated


def load_srs(path: PathLike) -> str:
    """Load an SRS text file, preserving newlines but normalizing CRLF to LF."""
    raw = Path(path).read_text(encoding="utf-8")
    return raw.replace("\r\n", "\n")


def save_predictions(path: PathLike, predictions: list["Prediction"]) -> None:
    """Write predictions to CSV in the shared schema, sorted by pair_id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTIONS_COLUMNS)
        for pred in sorted(predictions, key=lambda p: p.pair_id):
            a_id, b_id = _split_pair_id(pred.pair_id)
            writer.writerow(
                [
                    pred.pair_id,
                    a_id,
                    b_id,
                    pred.label.value,
                    _format_confidence(pred.confidence),
                    # NUL bytes cannot be represented in CSV (csv refuses both
                    # to write and to read them), so they are dropped here.
                    pred.rationale.replace("\x00", ""),
                    pred.model_id,
                    pred.config_hash,
                ]
            )


def load_predictions(path: PathLike) -> list["Prediction"]:
    """Load a predictions CSV back into Prediction objects.

    The file schema does not carry ``raw_response`` or ``attempt_count``;
    those come back as their defaults.
    """
    from .inference import Prediction

    rows = _read_rows(path, PREDICTIONS_COLUMNS)
    predictions = []
    for i, row in enumerate(rows, start=2):
        if any(row.get(col) is None for col in PREDICTIONS_COLUMNS):
            raise MalformedRow(f"{path}: short row at line {i}")
        try:
            confidence = float(row["confidence"])
        except ValueError:
            raise MalformedRow(
                f"{path}: bad confidence {row['confidence']!r} at row {i}"
            ) from None
        predictions.append(
            Prediction(
                pair_id=row["pair_id"],
                label=canonical_label(row["label"]),
                rationale=row["rationale"],
                confidence=confidence,
                model_id=row["model_id"],
                config_hash=row["config_hash"],
            )
        )
    return predictions


def _split_pair_id(pair_id: str) -> tuple[str, str]:
    parts = pair_id.split("__")
    if len(parts) != 2:
        raise MalformedRow(f"pair_id {pair_id!r} is not '<a>__<b>'")
    return parts[0], parts[1]


def _format_confidence(value: float) -> str:
    # Integers round-trip without a trailing ".0" so files diff cleanly.
    return str(int(value)) if float(value).is_integer() else repr(float(value))
