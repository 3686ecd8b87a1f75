"""Core domain types: requirements, dependency labels, pairs, and corpora.

Everything here is immutable after construction and safe to share between
concurrent workers.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import UnknownLabel


class DependencyLabel(enum.Enum):
    """Closed taxonomy of dependency types plus two sentinels.

    ``NO_DEPENDENCY`` is a valid ground-truth class; ``UNPARSED`` only ever
    appears in prediction outputs, marking a response that could not be
    parsed after retries.
    """

    REQUIRES = "Requires"
    IMPLEMENTS = "Implements"
    CONFLICTS = "Conflicts"
    CONTRADICTS = "Contradicts"
    DETAILS = "Details"
    IS_SIMILAR = "Is_similar"
    IS_A_VARIANT = "Is_a_variant"
    NO_DEPENDENCY = "No_dependency"
    UNPARSED = "Unparsed"

    def __str__(self) -> str:
        return self.value

    @property
    def display_name(self) -> str:
        """Human-readable name used in prompts ("Is similar", not "Is_similar")."""
        return self.value.replace("_", " ")


# The seven dependency types the prompt supports, in prompt order.
DEPENDENCY_TYPES: tuple[DependencyLabel, ...] = (
    DependencyLabel.REQUIRES,
    DependencyLabel.IMPLEMENTS,
    DependencyLabel.CONFLICTS,
    DependencyLabel.CONTRADICTS,
    DependencyLabel.DETAILS,
    DependencyLabel.IS_SIMILAR,
    DependencyLabel.IS_A_VARIANT,
)

# Classes that may appear in ground truth (everything but the parse sentinel).
GROUND_TRUTH_LABELS: tuple[DependencyLabel, ...] = DEPENDENCY_TYPES + (
    DependencyLabel.NO_DEPENDENCY,
)

_ALNUM = re.compile(r"[^a-z0-9]+")

_CANONICAL: dict[str, DependencyLabel] = {
    _ALNUM.sub("", label.value.lower()): label for label in DependencyLabel
}


def canonical_label(raw: str) -> DependencyLabel:
    """Normalize a label string to its taxonomy member.

    Case-insensitive; underscores, spaces, and other punctuation are
    interchangeable; surrounding asterisks, brackets, and whitespace are
    stripped.  Raises :class:`UnknownLabel` for anything outside the taxonomy.
    """
    cleaned = raw.strip().strip("*[](){}").strip()
    key = _ALNUM.sub("", cleaned.lower())
    try:
        return _CANONICAL[key]
    except KeyError:
        raise UnknownLabel(f"not a dependency label: {raw!r}") from None


@dataclass(frozen=True)
class Requirement:
    """A single natural-language requirement."""

    id: str
    system_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"requirement {self.id!r} has empty text")


@dataclass(frozen=True)
class RequirementPair:
    """An unordered pair of requirements, stored with a = lower corpus index."""

    a: Requirement
    b: Requirement

    def __post_init__(self) -> None:
        if self.a.id == self.b.id:
            raise ValueError(f"pair of a requirement with itself: {self.a.id!r}")

    @property
    def pair_id(self) -> str:
        return f"{self.a.id}__{self.b.id}"

    def shares_requirement(self, other: "RequirementPair") -> bool:
        ids = {self.a.id, self.b.id}
        return other.a.id in ids or other.b.id in ids


@dataclass(frozen=True)
class AnnotatedPair:
    """A requirement pair labeled with a single dependency type."""

    pair: RequirementPair
    label: DependencyLabel
    annotator_tag: Optional[str] = None

    def __post_init__(self) -> None:
        if self.label is DependencyLabel.UNPARSED:
            raise ValueError("Unparsed is not a valid ground-truth label")


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of requirements from one system.

    Order is stable and defines pair-generation order.  ``srs_text`` holds the
    system-description sections used as the retrieval context pool.
    """

    system_id: str
    requirements: tuple[Requirement, ...]
    srs_text: Optional[str] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for req in self.requirements:
            if req.id in seen:
                raise ValueError(f"duplicate requirement id {req.id!r}")
            seen.add(req.id)

    def __len__(self) -> int:
        return len(self.requirements)

    def by_id(self, req_id: str) -> Requirement:
        for req in self.requirements:
            if req.id == req_id:
                return req
        raise KeyError(req_id)


def generate_pairs(corpus: Corpus) -> list[RequirementPair]:
    """All n(n-1)/2 unique requirement pairs in deterministic order.

    Pairs follow lexicographic combination order over corpus positions, with
    the lower-index requirement as ``a``.
    """
    return [
        RequirementPair(a, b)
        for a, b in itertools.combinations(corpus.requirements, 2)
    ]
