from pathlib import Path

import pytest

from reqdep.core import AnnotatedPair, DependencyLabel
from reqdep.errors import MissingDefinition
from reqdep.prompt import (
    DEFAULT_DEFINITIONS,
    DependencyDefinition,
    PromptContext,
    default_definitions,
    load_definitions,
    render_prompt,
)
from reqdep.retrieval import Chunk

from conftest import make_pair

GOLDEN = Path(__file__).parent / "data" / "golden_prompt.txt"


def fixture_context():
    pair = make_pair(
        "The system shall include the braking control subsystem.",
        "The system shall always stop the vehicle to prevent collision with "
        "objects during the parking maneuver.",
        "R1",
        "R2",
    )
    example = AnnotatedPair(
        pair=make_pair(
            "The controller shall engage the actuator.",
            "The actuator shall be engaged within 50 ms.",
            "E1",
            "E2",
        ),
        label=DependencyLabel.REQUIRES,
    )
    examples = {label: [] for label in DEFAULT_DEFINITIONS}
    examples[DependencyLabel.REQUIRES] = [(example, 0.91)]
    examples[DependencyLabel.NO_DEPENDENCY] = []
    chunks = (
        Chunk(0, "The braking control subsystem (BCS) is responsible for braking.", 0, 63),
        Chunk(1, "The parking maneuver is monitored by ultrasonic sensors.", 63, 119),
    )
    return PromptContext(
        domain_name="automotive domain",
        system_name="Automated Parking Assist",
        pair=pair,
        examples=examples,
        context_chunks=chunks,
    )


def empty_context():
    ctx = fixture_context()
    return PromptContext(
        domain_name=ctx.domain_name,
        system_name=ctx.system_name,
        pair=ctx.pair,
        examples={label: [] for label in DEFAULT_DEFINITIONS},
        context_chunks=(),
    )


class TestRenderPrompt:
    def test_matches_golden_file(self):
        assert render_prompt(fixture_context()) == GOLDEN.read_text(encoding="utf-8")

    def test_contains_all_seven_definitions(self):
        rendered = render_prompt(fixture_context())
        assert len(DEFAULT_DEFINITIONS) == 7
        for text in DEFAULT_DEFINITIONS.values():
            assert text in rendered

    def test_contains_output_labels(self):
        rendered = render_prompt(fixture_context())
        for label in (
            "Dependency_Status: [TYPE]",
            "Rationale: [EXPLANATION]",
            "Confidence Score: [SCORE]",
        ):
            assert label in rendered

    def test_section_order(self):
        rendered = render_prompt(fixture_context())
        positions = [
            rendered.index(marker)
            for marker in (
                "#Requirements to analyze:",
                "#Dependency Definitions:",
                "#Examples:",
                "#Context:",
                "#Instructions",
            )
        ]
        assert positions == sorted(positions)

    def test_empty_sections_get_placeholder(self):
        rendered = render_prompt(empty_context())
        assert "#Examples:\n(none)" in rendered
        assert "#Context:\n(none)" in rendered

    def test_pure_function(self):
        assert render_prompt(fixture_context()) == render_prompt(fixture_context())

    def test_length_monotone_in_examples_and_chunks(self):
        assert len(render_prompt(empty_context())) < len(
            render_prompt(fixture_context())
        )

    def test_missing_definition_rejected(self):
        ctx = fixture_context()
        partial = tuple(default_definitions())[:5]
        with pytest.raises(MissingDefinition):
            PromptContext(
                domain_name=ctx.domain_name,
                system_name=ctx.system_name,
                pair=ctx.pair,
                examples=ctx.examples,
                context_chunks=ctx.context_chunks,
                definitions=partial,
            )


class TestDefinitionOverrides:
    def test_override_file(self, tmp_path):
        path = tmp_path / "defs.json"
        path.write_text('{"Requires": "custom requires definition."}', encoding="utf-8")
        definitions = load_definitions(path)
        by_label = {d.label: d.text for d in definitions}
        assert by_label[DependencyLabel.REQUIRES] == "custom requires definition."
        assert by_label[DependencyLabel.DETAILS] == DEFAULT_DEFINITIONS[DependencyLabel.DETAILS]
        assert len(definitions) == 7

    def test_definition_dataclass(self):
        definition = DependencyDefinition(DependencyLabel.CONFLICTS, "text")
        assert definition.label is DependencyLabel.CONFLICTS
