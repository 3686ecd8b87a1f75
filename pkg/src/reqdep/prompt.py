"""Inference prompt rendering: persona, pair, definitions, retrieved examples,
retrieved context, and the fixed output-format instructions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .core import DEPENDENCY_TYPES, DependencyLabel, RequirementPair, canonical_label
from .errors import MissingDefinition
from .retrieval import Chunk, ExampleSet

# Default per-type definitions shown in every prompt.  Overridable via a JSON
# file (label -> definition text) for teams that refine the wording.
DEFAULT_DEFINITIONS: dict[DependencyLabel, str] = {
    DependencyLabel.REQUIRES: (
        "if the fulfillment of one requirement is a prerequisite to the "
        "fulfillment of the other requirement."
    ),
    DependencyLabel.IMPLEMENTS: (
        "if one is a higher-level requirement (e.g., a system or subsystem "
        "level requirement) that is fulfilled by the other lower-level "
        "requirement (e.g., a subsystem or component level requirement)."
    ),
    DependencyLabel.CONFLICTS: (
        "if the fulfillment of one requirement restricts the fulfillment of "
        "the other requirement."
    ),
    DependencyLabel.CONTRADICTS: (
        "if the two requirements are mutually exclusive, then the fulfillment "
        "of one requirement violates the other."
    ),
    DependencyLabel.DETAILS: (
        "if both requirements describe the same action under the same "
        "condition, and one requirement provides additional details "
        "specifically regarding the shared action."
    ),
    DependencyLabel.IS_SIMILAR: (
        "if one requirement replicates partially or totally the content of "
        "the other requirement, resulting in redundancy."
    ),
    DependencyLabel.IS_A_VARIANT: (
        "if one requirement serves as an alternative to the other."
    ),
}

OUTPUT_LABELS = ("Dependency_Status: [TYPE]", "Rationale: [EXPLANATION]", "Confidence Score: [SCORE]")


@dataclass(frozen=True)
class DependencyDefinition:
    label: DependencyLabel
    text: str


def default_definitions() -> list[DependencyDefinition]:
    return [DependencyDefinition(lbl, txt) for lbl, txt in DEFAULT_DEFINITIONS.items()]


def load_definitions(path: Union[str, Path]) -> list[DependencyDefinition]:
    """Load definition overrides from a JSON file of {label: text}.

    Labels missing from the file keep their defaults; all seven types must be
    covered afterwards.
    """
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    merged = dict(DEFAULT_DEFINITIONS)
    for raw_label, text in overrides.items():
        merged[canonical_label(raw_label)] = text
    return [DependencyDefinition(lbl, merged[lbl]) for lbl in DEPENDENCY_TYPES]


@dataclass(frozen=True)
class PromptContext:
    domain_name: str
    system_name: str
    pair: RequirementPair
    examples: ExampleSet
    context_chunks: tuple[Chunk, ...]
    definitions: tuple[DependencyDefinition, ...] = field(
        default_factory=lambda: tuple(default_definitions())
    )

    def __post_init__(self) -> None:
        covered = {definition.label for definition in self.definitions}
        missing = [lbl for lbl in DEPENDENCY_TYPES if lbl not in covered]
        if missing:
            raise MissingDefinition(
                "definitions missing for: " + ", ".join(str(m) for m in missing)
            )


def _render_examples(examples: ExampleSet) -> str:
    blocks: list[str] = []
    for label, entries in examples.items():
        if not entries:
            continue
        lines = [f"## {label.display_name} examples:"]
        for annotated, _score in entries:
            lines.append(f"Requirement A: {annotated.pair.a.text}")
            lines.append(f"Requirement B: {annotated.pair.b.text}")
            lines.append(f"Dependency: {annotated.label.display_name}")
            lines.append("")
        blocks.append("\n".join(lines).rstrip())
    return "\n\n".join(blocks) if blocks else "(none)"


def _render_context(chunks: Sequence[Chunk]) -> str:
    if not chunks:
        return "(none)"
    return "\n\n".join(chunk.text for chunk in chunks)


def render_prompt(ctx: PromptContext) -> str:
    """Render the full inference prompt as a single string.

    Pure function: identical contexts render byte-identically.
    """
    definition_lines = "\n".join(
        f"{definition.label.display_name}: {definition.text}"
        for definition in ctx.definitions
    )
    return (
        f"You are an expert requirements engineer from the {ctx.domain_name}. "
        f"You will be provided with a pair of requirements extracted from the "
        f"software requirements specification for {ctx.system_name}.\n"
        "Given the following requirement dependency types definitions, examples, "
        "and context, your task is to analyze the pair of requirements and "
        "determine if a direct or indirect dependency exists between them.\n"
        "\n"
        "#Requirements to analyze:\n"
        f"Requirement A: {ctx.pair.a.text}\n"
        f"Requirement B: {ctx.pair.b.text}\n"
        "\n"
        "#Dependency Definitions:\n"
        f"{definition_lines}\n"
        "\n"
        "#Examples:\n"
        f"{_render_examples(ctx.examples)}\n"
        "\n"
        "#Context:\n"
        f"{_render_context(ctx.context_chunks)}\n"
        "\n"
        "#Instructions\n"
        "- If a direct or indirect dependency exists between a pair, you should "
        "annotate it with the type of dependency.\n"
        '- If it does not fall into one of the above types of dependency, '
        'annotate it with "No_dependency".\n'
        "- Explain the rationale behind your annotation.\n"
        "- Provide a confidence score for the annotation. The score should range "
        "from 0 to 5, with 0 indicating no confidence and 5 indicating the "
        "highest confidence.\n"
        "- The output MUST be structured using these exact labels, each on a new line:\n"
        f"{OUTPUT_LABELS[0]}\n"
        f"{OUTPUT_LABELS[1]}\n"
        f"{OUTPUT_LABELS[2]}\n"
    )
