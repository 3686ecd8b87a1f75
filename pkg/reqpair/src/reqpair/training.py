"""Training: class balancing, the fit loop, and artifact save/load.

Artifacts are a self-describing directory: model weights, the label map, the
resolved configuration (including the seed), and the per-epoch loss history.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .data import LabeledPair
from .errors import ArtifactError, LabelMapMismatch, SingleClassTrainingSet
from .model import EncoderConfig, PairClassifier, batch_tensors, encode_pair


@dataclass(frozen=True)
class TrainSpec:
    oversample: bool = True
    class_weights: bool = True
    epochs: int = 5
    learning_rate: float = 1e-3
    batch_size: int = 16
    seed: int = 0
    encoder: str = "scratch-tiny"  # the only offline-capable choice
    encoder_config: EncoderConfig = field(default_factory=EncoderConfig)


def config_digest(spec: TrainSpec) -> str:
    payload = json.dumps(dataclasses.asdict(spec), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def oversample_to_majority(
    pairs: Sequence[LabeledPair], seed: int
) -> list[LabeledPair]:
    """Duplicate minority-class pairs until every class matches the majority
    count. Never removes examples; duplication cycles each class in order."""
    by_label: dict[str, list[LabeledPair]] = {}
    for pair in pairs:
        by_label.setdefault(pair.label, []).append(pair)
    majority = max(len(members) for members in by_label.values())
    balanced: list[LabeledPair] = list(pairs)
    for label in sorted(by_label):
        members = by_label[label]
        shortfall = majority - len(members)
        for i in range(shortfall):
            balanced.append(members[i % len(members)])
    random.Random(seed).shuffle(balanced)
    return balanced


def inverse_frequency_weights(
    pairs: Sequence[LabeledPair], label_order: Sequence[str]
) -> list[float]:
    """Inverse class frequency, normalized so the weights average to 1."""
    counts = {label: 0 for label in label_order}
    for pair in pairs:
        counts[pair.label] += 1
    raw = [1.0 / counts[label] for label in label_order]
    mean = sum(raw) / len(raw)
    return [w / mean for w in raw]


@dataclass(frozen=True)
class TrainResult:
    artifact_dir: Path
    label_order: tuple[str, ...]
    loss_history: tuple[float, ...]
    train_accuracy: float


def train(pairs: Sequence[LabeledPair], spec: TrainSpec, artifact_dir: Path) -> TrainResult:
    label_order = tuple(sorted({pair.label for pair in pairs}))
    if len(label_order) < 2:
        raise SingleClassTrainingSet(
            f"training set has a single class {label_order and label_order[0]!r}"
        )
    label_index = {label: i for i, label in enumerate(label_order)}

    weights = None
    if spec.class_weights:
        weights = torch.tensor(
            inverse_frequency_weights(pairs, label_order), dtype=torch.float32
        )
    train_pairs = (
        oversample_to_majority(pairs, spec.seed) if spec.oversample else list(pairs)
    )

    torch.manual_seed(spec.seed)
    torch.use_deterministic_algorithms(True)
    device = torch.device("cpu")
    model = PairClassifier(spec.encoder_config, len(label_order)).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.learning_rate)
    loss_fn = nn.CrossEntropyLoss(weight=weights)

    encoded = [
        encode_pair(pair.text_a, pair.text_b, spec.encoder_config)
        for pair in train_pairs
    ]
    targets = torch.tensor(
        [label_index[pair.label] for pair in train_pairs], dtype=torch.long
    )

    history = []
    order = list(range(len(train_pairs)))
    shuffler = random.Random(spec.seed + 1)
    model.train()
    for _ in range(spec.epochs):
        shuffler.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), spec.batch_size):
            batch = order[start : start + spec.batch_size]
            ids, mask = batch_tensors([encoded[i] for i in batch], device)
            logits = model(ids, mask)
            loss = loss_fn(logits, targets[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        history.append(epoch_loss / len(order))

    model.eval()
    with torch.no_grad():
        ids, mask = batch_tensors(encoded, device)
        predicted = model(ids, mask).argmax(dim=1)
        accuracy = float((predicted == targets).float().mean())

    artifact_dir = Path(artifact_dir)
    artifact_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), artifact_dir / "model.pt")
    (artifact_dir / "label_map.json").write_text(
        json.dumps({label: i for i, label in enumerate(label_order)}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    (artifact_dir / "config.json").write_text(
        json.dumps(
            {
                "spec": dataclasses.asdict(spec),
                "config_hash": config_digest(spec),
                "model_id": f"pair-transformer-{spec.encoder}",
            },
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    (artifact_dir / "history.json").write_text(
        json.dumps({"epoch_loss": history, "train_accuracy": accuracy}, indent=2),
        encoding="utf-8",
    )
    return TrainResult(
        artifact_dir=artifact_dir,
        label_order=label_order,
        loss_history=tuple(history),
        train_accuracy=accuracy,
    )


@dataclass(frozen=True)
class LoadedModel:
    model: PairClassifier
    label_order: tuple[str, ...]
    encoder_config: EncoderConfig
    model_id: str
    config_hash: str


def load_artifact(artifact_dir: Path) -> LoadedModel:
    artifact_dir = Path(artifact_dir)
    for name in ("model.pt", "label_map.json", "config.json"):
        if not (artifact_dir / name).exists():
            raise ArtifactError(f"{artifact_dir}: missing {name}")
    label_map = json.loads((artifact_dir / "label_map.json").read_text("utf-8"))
    config = json.loads((artifact_dir / "config.json").read_text("utf-8"))
    label_order = tuple(
        label for label, _ in sorted(label_map.items(), key=lambda item: item[1])
    )
    if sorted(label_map.values()) != list(range(len(label_map))):
        raise LabelMapMismatch(f"{artifact_dir}: label map indices are not 0..n-1")
    encoder_config = EncoderConfig(**config["spec"]["encoder_config"])
    model = PairClassifier(encoder_config, len(label_order))
    state = torch.load(artifact_dir / "model.pt", map_location="cpu")
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise LabelMapMismatch(f"{artifact_dir}: weights do not fit label map: {exc}")
    model.eval()
    return LoadedModel(
        model=model,
        label_order=label_order,
        encoder_config=encoder_config,
        model_id=config["model_id"],
        config_hash=config["config_hash"],
    )
