"""CSV input/output in the shared dataset schemas.

This package talks to the rest of the tooling only through these files:
requirements (id, system_id, text), annotations (req_a_id, req_b_id, label),
pair lists (pair_id, req_a_id, req_b_id), and predictions
(pair_id, req_a_id, req_b_id, label, confidence, rationale, model_id,
config_hash).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    EmptyText,
    MalformedRow,
    MissingColumn,
    UnknownLabel,
    UnknownRequirementId,
)

LABELS: tuple[str, ...] = (
    "Requires",
    "Implements",
    "Conflicts",
    "Contradicts",
    "Details",
    "Is_similar",
    "Is_a_variant",
    "No_dependency",
)


@dataclass(frozen=True)
class LabeledPair:
    req_a_id: str
    req_b_id: str
    text_a: str
    text_b: str
    label: str

    @property
    def pair_id(self) -> str:
        return f"{self.req_a_id}__{self.req_b_id}"


@dataclass(frozen=True)
class PredictionRow:
    pair_id: str
    req_a_id: str
    req_b_id: str
    label: str
    confidence: float
    rationale: str
    model_id: str
    config_hash: str


def _read_rows(path: Path, required: Sequence[str]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [col for col in required if col not in fields]
        if missing:
            raise MissingColumn(f"{path}: missing columns {missing}")
        return list(reader)


def load_requirement_texts(path: Path) -> dict[str, str]:
    """Requirement id to text, with row-level validation."""
    texts: dict[str, str] = {}
    for number, row in enumerate(_read_rows(path, ["id", "system_id", "text"]), 2):
        req_id = (row["id"] or "").strip()
        text = (row["text"] or "").strip()
        if not req_id:
            raise MalformedRow(f"{path}:{number}: empty requirement id")
        if not text:
            raise EmptyText(f"{path}:{number}: requirement {req_id!r} has empty text")
        if req_id in texts:
            raise MalformedRow(f"{path}:{number}: duplicate requirement id {req_id!r}")
        texts[req_id] = text
    return texts


def _resolve(texts: dict[str, str], req_id: str, where: str) -> str:
    if req_id not in texts:
        raise UnknownRequirementId(f"{where}: unknown requirement id {req_id!r}")
    return texts[req_id]


def load_annotated_pairs(path: Path, texts: dict[str, str]) -> list[LabeledPair]:
    pairs = []
    for number, row in enumerate(
        _read_rows(path, ["req_a_id", "req_b_id", "label"]), 2
    ):
        where = f"{path}:{number}"
        label = (row["label"] or "").strip()
        if label not in LABELS:
            raise UnknownLabel(f"{where}: unknown label {label!r}")
        a_id, b_id = row["req_a_id"].strip(), row["req_b_id"].strip()
        pairs.append(
            LabeledPair(
                req_a_id=a_id,
                req_b_id=b_id,
                text_a=_resolve(texts, a_id, where),
                text_b=_resolve(texts, b_id, where),
                label=label,
            )
        )
    return pairs


def load_pair_list(path: Path, texts: dict[str, str]) -> list[LabeledPair]:
    """Unlabeled pairs to classify; accepts pair-list or annotation files."""
    with open(path, encoding="utf-8", newline="") as fh:
        fields = csv.DictReader(fh).fieldnames or []
    if "label" in fields:
        return [
            LabeledPair(p.req_a_id, p.req_b_id, p.text_a, p.text_b, label="")
            for p in load_annotated_pairs(path, texts)
        ]
    pairs = []
    for number, row in enumerate(_read_rows(path, ["req_a_id", "req_b_id"]), 2):
        where = f"{path}:{number}"
        a_id, b_id = row["req_a_id"].strip(), row["req_b_id"].strip()
        pairs.append(
            LabeledPair(
                req_a_id=a_id,
                req_b_id=b_id,
                text_a=_resolve(texts, a_id, where),
                text_b=_resolve(texts, b_id, where),
                label="",
            )
        )
    return pairs


def save_predictions(path: Path, rows: Sequence[PredictionRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "pair_id",
                "req_a_id",
                "req_b_id",
                "label",
                "confidence",
                "rationale",
                "model_id",
                "config_hash",
            ]
        )
        for row in sorted(rows, key=lambda r: r.pair_id):
            confidence = (
                int(row.confidence)
                if float(row.confidence).is_integer()
                else row.confidence
            )
            writer.writerow(
                [
                    row.pair_id,
                    row.req_a_id,
                    row.req_b_id,
                    row.label,
                    confidence,
                    row.rationale,
                    row.model_id,
                    row.config_hash,
                ]
            )
