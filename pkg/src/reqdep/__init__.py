"""Typed requirement-dependency detection: retrieval-augmented LLM pipeline,
deterministic baselines, and an evaluation harness."""

from .core import (
    AnnotatedPair,
    Corpus,
    DependencyLabel,
    Requirement,
    RequirementPair,
    canonical_label,
    generate_pairs,
)

__all__ = [
    "AnnotatedPair",
    "Corpus",
    "DependencyLabel",
    "Requirement",
    "RequirementPair",
    "canonical_label",
    "generate_pairs",
]

__version__ = "0.1.0"
