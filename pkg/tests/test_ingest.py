import pytest
from hypothesis import given, settings, strategies as st

from reqdep import ingest
from reqdep.core import DependencyLabel, generate_pairs
from reqdep.errors import (
    DuplicateId,
    DuplicatePair,
    EmptyText,
    MissingColumn,
    UnknownRequirementId,
)
from reqdep.inference import Prediction


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


REQ_CSV = "id,system_id,text\nR1,ADB,First requirement\nR2,ADB,Second requirement\nR3,ADB,Third requirement\n"


class TestLoadRequirements:
    def test_three_rows_in_file_order(self, tmp_path):
        corpus = ingest.load_requirements(write(tmp_path / "r.csv", REQ_CSV))
        assert [r.id for r in corpus.requirements] == ["R1", "R2", "R3"]
        assert corpus.system_id == "ADB"

    def test_duplicate_id_names_row(self, tmp_path):
        csv_text = "id,system_id,text\nR1,ADB,first\nR1,ADB,second\n"
        with pytest.raises(DuplicateId, match="row 3"):
            ingest.load_requirements(write(tmp_path / "r.csv", csv_text))

    def test_empty_text_names_row(self, tmp_path):
        csv_text = "id,system_id,text\nR1,ADB,first\nR2,ADB,   \n"
        with pytest.raises(EmptyText, match="row 3"):
            ingest.load_requirements(write(tmp_path / "r.csv", csv_text))

    def test_missing_column(self, tmp_path):
        with pytest.raises(MissingColumn):
            ingest.load_requirements(write(tmp_path / "r.csv", "id,text\nR1,x\n"))

    def test_40_rows_give_780_pairs(self, tmp_path):
        rows = "\n".join(f"R{i},ADB,requirement text {i}" for i in range(40))
        corpus = ingest.load_requirements(
            write(tmp_path / "r.csv", "id,system_id,text\n" + rows + "\n")
        )
        assert len(generate_pairs(corpus)) == 780


class TestLoadAnnotations:
    def test_basic_row(self, tmp_path):
        corpus = ingest.load_requirements(write(tmp_path / "r.csv", REQ_CSV))
        path = write(tmp_path / "a.csv", "req_a_id,req_b_id,label\nR1,R2,Requires\n")
        annotated = ingest.load_annotations(path, corpus)
        assert len(annotated) == 1
        assert annotated[0].label is DependencyLabel.REQUIRES
        assert annotated[0].pair.pair_id == "R1__R2"

    def test_reversed_duplicate_rejected(self, tmp_path):
        corpus = ingest.load_requirements(write(tmp_path / "r.csv", REQ_CSV))
        path = write(
            tmp_path / "a.csv",
            "req_a_id,req_b_id,label\nR1,R2,Requires\nR2,R1,Details\n",
        )
        with pytest.raises(DuplicatePair):
            ingest.load_annotations(path, corpus)

    def test_unknown_id(self, tmp_path):
        corpus = ingest.load_requirements(write(tmp_path / "r.csv", REQ_CSV))
        path = write(tmp_path / "a.csv", "req_a_id,req_b_id,label\nR1,R9,Requires\n")
        with pytest.raises(UnknownRequirementId):
            ingest.load_annotations(path, corpus)

    def test_pair_reoriented_to_corpus_order(self, tmp_path):
        corpus = ingest.load_requirements(write(tmp_path / "r.csv", REQ_CSV))
        path = write(tmp_path / "a.csv", "req_a_id,req_b_id,label\nR3,R1,Details\n")
        annotated = ingest.load_annotations(path, corpus)
        assert annotated[0].pair.pair_id == "R1__R3"


class TestLoadSrs:
    def test_round_trip(self, tmp_path):
        path = write(tmp_path / "srs.txt", "line one\nline two\n")
        assert ingest.load_srs(path) == "line one\nline two\n"

    def test_empty_file(self, tmp_path):
        assert ingest.load_srs(write(tmp_path / "srs.txt", "")) == ""

    def test_crlf_normalized(self, tmp_path):
        path = tmp_path / "srs.txt"
        path.write_bytes(b"line one\r\nline two\r\n")
        assert ingest.load_srs(path) == "line one\nline two\n"


def make_prediction(i, label=DependencyLabel.REQUIRES, rationale="because"):
    return Prediction(
        pair_id=f"A{i}__B{i}",
        label=label,
        rationale=rationale,
        confidence=float(i % 6),
        model_id="test-model",
        config_hash="abc123",
    )


class TestPredictionsRoundTrip:
    def test_ten_predictions_round_trip(self, tmp_path):
        predictions = [make_prediction(i) for i in range(10)]
        path = tmp_path / "p.csv"
        ingest.save_predictions(path, predictions)
        assert ingest.load_predictions(path) == sorted(
            predictions, key=lambda p: p.pair_id
        )

    def test_awkward_rationale_survives(self, tmp_path):
        nasty = 'has, commas and "quotes" and\nnewlines'
        predictions = [make_prediction(0, rationale=nasty)]
        path = tmp_path / "p.csv"
        ingest.save_predictions(path, predictions)
        assert ingest.load_predictions(path)[0].rationale == nasty

    def test_nul_bytes_dropped_from_rationale(self, tmp_path):
        predictions = [make_prediction(0, rationale="left\x00right")]
        path = tmp_path / "p.csv"
        ingest.save_predictions(path, predictions)
        assert ingest.load_predictions(path)[0].rationale == "leftright"

    def test_missing_confidence_column(self, tmp_path):
        path = write(
            tmp_path / "p.csv",
            "pair_id,req_a_id,req_b_id,label,rationale,model_id,config_hash\n",
        )
        with pytest.raises(MissingColumn):
            ingest.load_predictions(path)

    @settings(max_examples=50, deadline=None)
    @given(
        rationale=st.text(
            alphabet=st.characters(
                blacklist_categories=("Cs",), blacklist_characters="\r\x00"
            ),
            max_size=80,
        ),
        label=st.sampled_from(list(DependencyLabel)),
        confidence=st.integers(min_value=0, max_value=5),
    )
    def test_round_trip_property(self, tmp_path_factory, rationale, label, confidence):
        prediction = Prediction(
            pair_id="A__B",
            label=label,
            rationale=rationale,
            confidence=float(confidence),
            model_id="m",
            config_hash="h",
        )
        path = tmp_path_factory.mktemp("rt") / "p.csv"
        ingest.save_predictions(path, [prediction])
        assert ingest.load_predictions(path) == [prediction]
