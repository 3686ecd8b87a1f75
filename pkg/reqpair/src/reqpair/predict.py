"""Batch prediction from a saved artifact to the shared predictions CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import torch

from .data import (
    LabeledPair,
    PredictionRow,
    load_pair_list,
    load_requirement_texts,
    save_predictions,
)
from .errors import ReqPairError
from .model import batch_tensors, encode_pair
from .training import LoadedModel, load_artifact


def predict_pairs(
    loaded: LoadedModel, pairs: Sequence[LabeledPair], batch_size: int = 64
) -> list[PredictionRow]:
    """One prediction per pair; confidence is the max softmax probability
    rescaled to the shared 0-5 range."""
    rows = []
    with torch.no_grad():
        for start in range(0, len(pairs), batch_size):
            batch = pairs[start : start + batch_size]
            encoded = [
                encode_pair(pair.text_a, pair.text_b, loaded.encoder_config)
                for pair in batch
            ]
            ids, mask = batch_tensors(encoded, torch.device("cpu"))
            probabilities = torch.softmax(loaded.model(ids, mask), dim=1)
            top = probabilities.max(dim=1)
            for pair, index, probability in zip(
                batch, top.indices.tolist(), top.values.tolist()
            ):
                rows.append(
                    PredictionRow(
                        pair_id=pair.pair_id,
                        req_a_id=pair.req_a_id,
                        req_b_id=pair.req_b_id,
                        label=loaded.label_order[index],
                        confidence=round(5.0 * probability, 3),
                        rationale="transformer pair classifier",
                        model_id=loaded.model_id,
                        config_hash=loaded.config_hash,
                    )
                )
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqpair-predict",
        description="Classify requirement pairs with a trained artifact",
    )
    parser.add_argument("--artifact", required=True, help="training output directory")
    parser.add_argument("--requirements", required=True)
    parser.add_argument(
        "--pairs",
        required=True,
        help="pair list or annotations CSV naming the pairs to classify",
    )
    parser.add_argument("--out", help="output directory (default: out/)")
    parser.add_argument("--batch-size", type=int, default=64)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        loaded = load_artifact(Path(args.artifact))
        texts = load_requirement_texts(Path(args.requirements))
        pairs = load_pair_list(Path(args.pairs), texts)
        rows = predict_pairs(loaded, pairs, batch_size=args.batch_size)
    except (ReqPairError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(args.out or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "predictions.csv"
    save_predictions(out_path, rows)
    print(f"wrote {out_path} ({len(rows)} predictions)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
