"""Training entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .data import load_annotated_pairs, load_requirement_texts
from .errors import ReqPairError
from .training import TrainSpec, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqpair-train",
        description="Fine-tune the transformer pair classifier on annotated pairs",
    )
    parser.add_argument("--requirements", required=True)
    parser.add_argument("--annotations", required=True)
    parser.add_argument("--out", help="artifact directory (default: out/artifact)")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--encoder",
        default="scratch-tiny",
        choices=["scratch-tiny"],
        help="model architecture; only the offline from-scratch encoder is built in",
    )
    parser.add_argument(
        "--no-oversample",
        dest="oversample",
        action="store_false",
        help="skip duplicating minority classes to the majority count",
    )
    parser.add_argument(
        "--no-class-weights",
        dest="class_weights",
        action="store_false",
        help="skip inverse-frequency loss weighting",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    spec = TrainSpec(
        oversample=args.oversample,
        class_weights=args.class_weights,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        encoder=args.encoder,
    )
    try:
        texts = load_requirement_texts(Path(args.requirements))
        pairs = load_annotated_pairs(Path(args.annotations), texts)
        artifact_dir = Path(args.out or "out/artifact")
        result = train(pairs, spec, artifact_dir)
    except (ReqPairError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    losses = ", ".join(f"{loss:.4f}" for loss in result.loss_history)
    print(f"classes: {', '.join(result.label_order)}")
    print(f"epoch loss: {losses}")
    print(f"train accuracy: {result.train_accuracy:.4f}")
    print(f"wrote {result.artifact_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
