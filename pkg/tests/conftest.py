import pytest

from reqdep.core import AnnotatedPair, Corpus, DependencyLabel, Requirement, RequirementPair
from reqdep.embedding import EmbeddingProviderConfig, embed_batch
from reqdep.retrieval import EmbeddedStore


def make_corpus(texts, system_id="SYS"):
    return Corpus(
        system_id=system_id,
        requirements=tuple(
            Requirement(id=f"R{i+1}", system_id=system_id, text=text)
            for i, text in enumerate(texts)
        ),
    )


def make_pair(text_a, text_b, id_a="A1", id_b="B1", system_id="SYS"):
    return RequirementPair(
        Requirement(id=id_a, system_id=system_id, text=text_a),
        Requirement(id=id_b, system_id=system_id, text=text_b),
    )


def build_store(texts, model_id="stub-16"):
    config = EmbeddingProviderConfig(provider_kind="stub", model_id=model_id)
    store = EmbeddedStore(model_id)
    unique = list(dict.fromkeys(texts))
    for text, vector in zip(unique, embed_batch(unique, config)):
        store.add(text, vector)
    return store


def twin_fixture(copies=5):
    """Dataset where every pair of a class reuses that class's text pair.

    The nearest pool example of a test pair is then always an exact-text
    duplicate carrying the correct label.
    """
    labels = [
        DependencyLabel.NO_DEPENDENCY,
        DependencyLabel.REQUIRES,
        DependencyLabel.IMPLEMENTS,
        DependencyLabel.DETAILS,
    ]
    requirements = []
    annotated = []
    serial = 0
    for label in labels:
        text_a = f"The {label.value} subsystem shall perform the primary action."
        text_b = f"The {label.value} subsystem shall report the secondary status."
        for _ in range(copies):
            a = Requirement(id=f"Q{serial}", system_id="TWIN", text=text_a)
            b = Requirement(id=f"Q{serial+1}", system_id="TWIN", text=text_b)
            serial += 2
            requirements.extend([a, b])
            annotated.append(AnnotatedPair(pair=RequirementPair(a, b), label=label))
    corpus = Corpus(system_id="TWIN", requirements=tuple(requirements))
    return corpus, annotated


@pytest.fixture
def small_corpus():
    return make_corpus(
        [
            "The system shall include the braking control subsystem.",
            "The vehicle shall stop when an obstacle is detected.",
            "Headlights shall dim automatically for oncoming traffic.",
            "The parking assist shall steer the vehicle into the spot.",
            "Brake lights shall activate during automated braking.",
        ]
    )
