import random

import pytest
from hypothesis import given, settings, strategies as st

from reqdep.core import DependencyLabel
from reqdep.errors import ConfidenceOutOfRange, ParseFailure
from reqdep.inference import (
    UNPARSED_CONFIDENCE,
    CallableStubProvider,
    EchoTopExampleProvider,
    FixedResponseProvider,
    ModelConfig,
    classify_many,
    classify_pair,
    format_response,
    parse_response,
)
from reqdep.retrieval import RetrievalConfig, retrieve_examples

from test_prompt import fixture_context


class TestParseResponse:
    def test_exact_three_line_format(self):
        label, rationale, confidence = parse_response(
            "Dependency_Status: Requires\nRationale: x\nConfidence Score: 4"
        )
        assert label is DependencyLabel.REQUIRES
        assert rationale == "x"
        assert confidence == 4.0

    def test_bold_markers_stripped(self):
        label, _, _ = parse_response(
            "**Dependency_Status: No_dependency**\n"
            "**Rationale: unrelated**\n"
            "**Confidence Score: 5**"
        )
        assert label is DependencyLabel.NO_DEPENDENCY

    def test_preamble_ignored(self):
        text = (
            "Let me think about this pair.\n"
            "They seem to touch the same subsystem.\n\n"
            "Dependency_Status: Details\n"
            "Rationale: one adds timing detail\n"
            "Confidence Score: 3\n"
            "Thanks!\n"
        )
        label, rationale, confidence = parse_response(text)
        assert label is DependencyLabel.DETAILS
        assert rationale == "one adds timing detail"
        assert confidence == 3.0

    def test_multiline_rationale(self):
        text = (
            "Dependency_Status: Conflicts\n"
            "Rationale: first line\nsecond line\n"
            "Confidence Score: 2\n"
        )
        _, rationale, _ = parse_response(text)
        assert rationale == "first line\nsecond line"

    def test_missing_field_raises(self):
        with pytest.raises(ParseFailure):
            parse_response("Dependency_Status: Requires\nConfidence Score: 4")

    def test_prose_raises(self):
        with pytest.raises(ParseFailure):
            parse_response("I believe these requirements are related somehow.")

    def test_confidence_out_of_range(self):
        with pytest.raises(ConfidenceOutOfRange):
            parse_response(
                "Dependency_Status: Requires\nRationale: x\nConfidence Score: 7"
            )

    def test_decimal_confidence(self):
        _, _, confidence = parse_response(
            "Dependency_Status: Requires\nRationale: x\nConfidence Score: 4.5"
        )
        assert confidence == 4.5

    def test_unknown_label_is_parse_failure(self):
        with pytest.raises(ParseFailure):
            parse_response(
                "Dependency_Status: DependsOn\nRationale: x\nConfidence Score: 4"
            )


def rationale_strategy():
    line = st.text(
        alphabet=st.characters(
            blacklist_categories=("Cs", "Cc"),
            blacklist_characters=":*#",
        ),
        min_size=1,
        max_size=40,
    ).map(str.strip).filter(bool)
    return st.lists(line, min_size=1, max_size=3).map("\n".join)


class TestRoundTrip:
    @settings(max_examples=300, deadline=None)
    @given(
        label=st.sampled_from(list(DependencyLabel)),
        rationale=rationale_strategy(),
        confidence=st.integers(min_value=0, max_value=5),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_fuzzed_round_trip(self, label, rationale, confidence, seed):
        rng = random.Random(seed)
        body = format_response(label, rationale, float(confidence))
        noise_before = rng.choice(
            ["", "Sure, here is my analysis.\n\n", "Analysis follows.\nSome musing.\n"]
        )
        noise_after = rng.choice(["", "\nHope that helps."])
        wrapped = noise_before + body + noise_after
        got_label, got_rationale, got_confidence = parse_response(wrapped)
        assert got_label is label
        assert got_rationale == rationale
        assert got_confidence == float(confidence)


class TestClassifyPair:
    def test_well_formed_stub(self):
        ctx = fixture_context()
        provider = FixedResponseProvider(
            ["Dependency_Status: Requires\nRationale: x\nConfidence Score: 4"]
        )
        prediction = classify_pair(ctx.pair, ctx, ModelConfig(), provider)
        assert prediction.label is DependencyLabel.REQUIRES
        assert prediction.rationale == "x"
        assert prediction.confidence == 4.0
        assert prediction.attempt_count == 1

    def test_retry_then_unparsed(self):
        ctx = fixture_context()
        provider = FixedResponseProvider(["just some prose with no labels"])
        config = ModelConfig(max_retries=1)
        prediction = classify_pair(ctx.pair, ctx, config, provider)
        assert prediction.label is DependencyLabel.UNPARSED
        assert prediction.attempt_count == 2
        assert prediction.confidence == UNPARSED_CONFIDENCE
        assert "prose" in prediction.raw_response

    def test_retry_recovers(self):
        ctx = fixture_context()
        provider = FixedResponseProvider(
            [
                "garbled",
                "Dependency_Status: Details\nRationale: ok\nConfidence Score: 2",
            ]
        )
        prediction = classify_pair(ctx.pair, ctx, ModelConfig(max_retries=1), provider)
        assert prediction.label is DependencyLabel.DETAILS
        assert prediction.attempt_count == 2

    def test_out_of_range_confidence_retries_to_unparsed(self):
        ctx = fixture_context()
        provider = FixedResponseProvider(
            ["Dependency_Status: Requires\nRationale: x\nConfidence Score: 9"]
        )
        prediction = classify_pair(ctx.pair, ctx, ModelConfig(max_retries=1), provider)
        assert prediction.label is DependencyLabel.UNPARSED

    def test_oracle_stub_answers_top_example_label(self):
        ctx = fixture_context()
        provider = EchoTopExampleProvider()
        prediction = classify_pair(ctx.pair, ctx, ModelConfig(), provider)
        best = max(
            (
                (score, annotated.label)
                for entries in ctx.examples.values()
                for annotated, score in entries
            ),
            default=(0, DependencyLabel.NO_DEPENDENCY),
        )
        assert prediction.label is best[1]


class TestClassifyMany:
    def test_sorted_by_pair_id_regardless_of_parallelism(self):
        from conftest import build_store, twin_fixture

        corpus, annotated = twin_fixture(copies=3)
        pool, test = annotated[: len(annotated) // 2], annotated[len(annotated) // 2 :]
        texts = [req.text for req in corpus.requirements]
        store = build_store(texts)
        config = RetrievalConfig(example_k=2)
        jobs = []
        from reqdep.prompt import PromptContext

        for item in test:
            examples = retrieve_examples(item.pair, pool, config, store)
            jobs.append(
                (
                    item.pair,
                    PromptContext(
                        domain_name="d",
                        system_name="s",
                        pair=item.pair,
                        examples=examples,
                        context_chunks=(),
                    ),
                )
            )
        provider = EchoTopExampleProvider()
        serial = classify_many(jobs, ModelConfig(max_parallel=1), provider)
        parallel = classify_many(jobs, ModelConfig(max_parallel=8), provider)
        assert serial == parallel
        ids = [p.pair_id for p in serial]
        assert ids == sorted(ids)

    def test_callable_stub(self):
        ctx = fixture_context()
        provider = CallableStubProvider(
            lambda prompt, c: "Dependency_Status: Conflicts\nRationale: r\nConfidence Score: 1"
        )
        (prediction,) = classify_many([(ctx.pair, ctx)], ModelConfig(), provider)
        assert prediction.label is DependencyLabel.CONFLICTS
