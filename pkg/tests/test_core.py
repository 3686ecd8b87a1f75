import pytest
from hypothesis import given, strategies as st

from reqdep.core import (
    Corpus,
    DependencyLabel,
    Requirement,
    RequirementPair,
    canonical_label,
    generate_pairs,
)
from reqdep.errors import UnknownLabel

from conftest import make_corpus


class TestGeneratePairs:
    def test_40_requirements_yield_780_pairs(self):
        corpus = make_corpus([f"requirement number {i}" for i in range(40)])
        assert len(generate_pairs(corpus)) == 780

    def test_single_requirement_yields_nothing(self):
        assert generate_pairs(make_corpus(["only one"])) == []

    def test_empty_corpus(self):
        assert generate_pairs(Corpus(system_id="S", requirements=())) == []

    def test_order_and_count_for_n5(self):
        corpus = make_corpus([f"text {i}" for i in range(5)])
        pairs = generate_pairs(corpus)
        assert len(pairs) == 10
        assert (pairs[0].a.id, pairs[0].b.id) == ("R1", "R2")
        assert (pairs[-1].a.id, pairs[-1].b.id) == ("R4", "R5")

    @given(st.integers(min_value=0, max_value=25))
    def test_matches_double_loop_oracle(self, n):
        corpus = make_corpus([f"text {i}" for i in range(n)])
        pairs = generate_pairs(corpus)
        reqs = corpus.requirements
        oracle = [
            (reqs[i].id, reqs[j].id)
            for i in range(n)
            for j in range(i + 1, n)
        ]
        assert [(p.a.id, p.b.id) for p in pairs] == oracle
        assert len(pairs) == n * (n - 1) // 2

    def test_pair_ids_collision_free(self):
        corpus = make_corpus([f"text {i}" for i in range(12)])
        pairs = generate_pairs(corpus)
        assert len({p.pair_id for p in pairs}) == len(pairs)


class TestCanonicalLabel:
    def test_no_dependency_variants(self):
        for raw in ["No_dependency", "no dependency", "NO_DEPENDENCY", "NoDependency"]:
            assert canonical_label(raw) is DependencyLabel.NO_DEPENDENCY

    def test_case_normalization(self):
        assert canonical_label("REQUIRES") is DependencyLabel.REQUIRES

    def test_marker_stripping(self):
        assert canonical_label("**[Is similar]** ") is DependencyLabel.IS_SIMILAR
        assert canonical_label("is_a_variant") is DependencyLabel.IS_A_VARIANT

    def test_unknown_label_raises(self):
        with pytest.raises(UnknownLabel):
            canonical_label("depends_on")

    def test_round_trip_every_member(self):
        for label in DependencyLabel:
            assert canonical_label(label.value) is label
            assert canonical_label(label.display_name) is label


class TestInvariants:
    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            Requirement(id="R1", system_id="S", text="   ")

    def test_self_pair_rejected(self):
        req = Requirement(id="R1", system_id="S", text="a req")
        with pytest.raises(ValueError):
            RequirementPair(req, req)

    def test_duplicate_ids_rejected(self):
        req = Requirement(id="R1", system_id="S", text="a req")
        other = Requirement(id="R1", system_id="S", text="another")
        with pytest.raises(ValueError):
            Corpus(system_id="S", requirements=(req, other))
