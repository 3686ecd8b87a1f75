import math

import pytest
from hypothesis import given, strategies as st

from reqdep import embedding as emb
from reqdep.errors import DimensionMismatch, InvalidConfig, ZeroVector

STUB = emb.EmbeddingProviderConfig(provider_kind="stub", model_id="stub-16")


def vec(*values, model_id="stub-16"):
    return emb.EmbeddingVector(tuple(float(v) for v in values), model_id)


class TestStubProvider:
    def test_deterministic(self):
        first = emb.embed_batch(["some requirement text"], STUB)
        second = emb.embed_batch(["some requirement text"], STUB)
        assert first == second

    def test_order_preserving(self):
        ab = emb.embed_batch(["a", "b"], STUB)
        ba = emb.embed_batch(["b", "a"], STUB)
        assert ab == [ba[1], ba[0]]

    def test_dimension_and_norm(self):
        (vector,) = emb.embed_batch(["anything"], STUB)
        assert len(vector) == emb.STUB_DIMENSION
        assert math.isclose(sum(v * v for v in vector.values), 1.0, abs_tol=1e-12)

    def test_model_id_changes_vector(self):
        other = emb.EmbeddingProviderConfig(provider_kind="stub", model_id="stub-other")
        assert emb.embed_batch(["x"], STUB) != emb.embed_batch(["x"], other)

    def test_empty_text_rejected(self):
        with pytest.raises(InvalidConfig):
            emb.embed_batch(["ok", ""], STUB)


class TestCache:
    def test_cache_transparent_for_stub(self, tmp_path):
        cached_config = emb.EmbeddingProviderConfig(
            provider_kind="stub", model_id="stub-16", cache_path=tmp_path / "c.jsonl"
        )
        texts = ["first text", "second text", "first text"]
        cold = emb.embed_batch(texts, cached_config)
        warm = emb.embed_batch(texts, cached_config)  # now fully cached
        plain = emb.embed_batch(texts, STUB)
        assert cold == warm == plain
        assert (tmp_path / "c.jsonl").exists()

    def test_cache_keyed_by_model(self, tmp_path):
        cache = emb.EmbeddingCache(tmp_path / "c.jsonl")
        cache.put("m1", "text", (1.0, 0.0))
        assert cache.get("m1", "text") == (1.0, 0.0)
        assert cache.get("m2", "text") is None


class TestCosine:
    def test_identical_vectors(self):
        v = vec(1, 2, 3)
        assert emb.cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert emb.cosine_similarity(vec(1, 0), vec(0, 1)) == 0.0

    def test_hand_computed_value(self):
        # 32 / (sqrt(14) * sqrt(77))
        got = emb.cosine_similarity(vec(1, 2, 3), vec(4, 5, 6))
        assert got == pytest.approx(0.974631846, abs=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            emb.cosine_similarity(vec(0, 0), vec(1, 0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            emb.cosine_similarity(vec(1, 0), vec(1, 0, 0))

    @given(
        st.lists(
            st.floats(min_value=-100, max_value=100),
            min_size=3,
            max_size=3,
        ),
        st.lists(
            st.floats(min_value=-100, max_value=100),
            min_size=3,
            max_size=3,
        ),
    )
    def test_symmetric_and_bounded(self, a, b):
        u, v = vec(*a), vec(*b)
        try:
            forward = emb.cosine_similarity(u, v)
        except ZeroVector:
            return
        assert forward == emb.cosine_similarity(v, u)
        assert abs(forward) <= 1 + 1e-12


class TestEuclideanSimilarity:
    def test_identical(self):
        v = vec(3, 4)
        assert emb.euclidean_similarity(v, v) == 1.0

    def test_hand_computed(self):
        assert emb.euclidean_similarity(vec(0, 0), vec(3, 4)) == pytest.approx(1 / 6)

    def test_monotone_in_distance(self):
        base = vec(0, 0)
        similarities = [
            emb.euclidean_similarity(base, vec(d, 0)) for d in (0.5, 1, 2, 5)
        ]
        assert similarities == sorted(similarities, reverse=True)

    def test_ranking_matches_negative_distance(self):
        # Monotone transform: top-k by similarity == top-k by -distance.
        query = emb.embed_batch(["query text"], STUB)[0]
        candidates = emb.embed_batch([f"candidate {i}" for i in range(30)], STUB)
        by_similarity = sorted(
            range(30), key=lambda i: -emb.euclidean_similarity(query, candidates[i])
        )
        by_distance = sorted(
            range(30),
            key=lambda i: sum(
                (a - b) ** 2 for a, b in zip(query.values, candidates[i].values)
            ),
        )
        assert by_similarity == by_distance


class TestRemoteProvider:
    def test_requires_endpoint(self):
        with pytest.raises(InvalidConfig):
            emb.EmbeddingProviderConfig(provider_kind="remote", endpoint=None)

    def test_batching_matches_single_requests(self, monkeypatch):
        calls = []

        def fake_remote(texts, config):
            calls.append(list(texts))
            return [[float(len(t)), 1.0] for t in texts]

        monkeypatch.setattr(emb, "_remote_embed", fake_remote)
        config = emb.EmbeddingProviderConfig(
            provider_kind="remote",
            endpoint="http://example.invalid/v1/embeddings",
            model_id="remote-model",
            batch_size=4,
        )
        texts = [f"text number {i}" for i in range(10)]
        batched = emb.embed_batch(texts, config)
        assert [len(c) for c in calls] == [4, 4, 2]
        singles = [
            emb.embed_batch([t], config)[0] for t in texts
        ]
        assert batched == singles
