import csv

import pytest

from reqpair.data import LabeledPair

CUES = {
    "Requires": "prerequisite precondition gate",
    "Implements": "realizes fulfills lower level",
    "No_dependency": "unrelated separate independent",
    "Details": "refines elaborates specifics",
}


def separable_pairs(per_class=25):
    """Pairs whose label is fully determined by a lexical cue."""
    pairs = []
    serial = 0
    for label, cue in sorted(CUES.items()):
        for i in range(per_class):
            pairs.append(
                LabeledPair(
                    req_a_id=f"A{serial}",
                    req_b_id=f"B{serial}",
                    text_a=f"The subsystem {cue} item {i} shall operate.",
                    text_b=f"The monitor reads the {cue} channel {i}.",
                    label=label,
                )
            )
            serial += 1
    return pairs


def write_fixture_csvs(tmp_path, pairs):
    requirements = tmp_path / "requirements.csv"
    annotations = tmp_path / "annotations.csv"
    with open(requirements, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "system_id", "text"])
        for pair in pairs:
            writer.writerow([pair.req_a_id, "FIX", pair.text_a])
            writer.writerow([pair.req_b_id, "FIX", pair.text_b])
    with open(annotations, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["req_a_id", "req_b_id", "label"])
        for pair in pairs:
            writer.writerow([pair.req_a_id, pair.req_b_id, pair.label])
    return requirements, annotations


@pytest.fixture(scope="session")
def trained_fixture(tmp_path_factory):
    """Train once per session on the separable fixture and share the artifact."""
    from reqpair.training import TrainSpec, train

    pairs = separable_pairs()
    artifact_dir = tmp_path_factory.mktemp("artifact")
    result = train(pairs, TrainSpec(epochs=5, seed=0), artifact_dir)
    return pairs, result
