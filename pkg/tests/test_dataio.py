"""CSV and coefficient-bundle round-trip tests."""

import json

import pytest

from traintime import (
    BundleFormatError,
    CoefficientBundle,
    DomainError,
    FitReport,
    RowError,
    RunDataset,
    RunRecord,
    ScalingLaw,
    SchemaError,
    TimeCoefficients,
    TrainBudget,
    TransformerShape,
    ValidationError,
    load_coefficients,
    load_runs,
    save_coefficients,
    save_runs,
    split_dataset,
)

HEADER = (
    "run_id,d,n,s,v,w,h,batch,seconds_per_step,tokens_per_second,"
    "tokens_seen,final_loss,train_seconds"
)


def _shape(**overrides):
    base = dict(d=64, n=2, s=512, v=500, w=512, h=4)
    base.update(overrides)
    return TransformerShape(**base)


def _dataset():
    # Values picked to be awkward in decimal so the round trip is a
    # real test of float serialization.
    return RunDataset(
        records=(
            RunRecord(
                run_id="run-a",
                shape=_shape(),
                batch=4,
                seconds_per_step=0.1 + 0.2,
                tokens_per_second=4 * 512 / (0.1 + 0.2),
                tokens_seen=1.0 / 3.0,
                final_loss=3.7415926535897931,
                train_seconds=10800.0,
            ),
            RunRecord(run_id="run-b", shape=_shape(d=128, h=8), final_loss=2.5),
            RunRecord(run_id="run-c", shape=_shape(n=5)),
        )
    )


def test_csv_round_trip_is_exact(tmp_path):
    path = tmp_path / "runs.csv"
    original = _dataset()
    save_runs(original, path)
    loaded = load_runs(path)
    assert len(loaded) == len(original)
    for got, want in zip(loaded.records, original.records):
        assert got == want
    assert set(loaded.split) == {"unassigned"}


def test_csv_header_matches_documented_schema(tmp_path):
    path = tmp_path / "runs.csv"
    save_runs(_dataset(), path)
    assert path.read_text().splitlines()[0] == HEADER


def test_missing_column_is_a_schema_error(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text("run_id,d,n,s,v,w\nx,64,2,512,500,512\n")
    with pytest.raises(SchemaError, match="missing column"):
        load_runs(path)


def test_empty_file_is_a_schema_error(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text("")
    with pytest.raises(SchemaError, match="empty"):
        load_runs(path)


def test_missing_batch_column_warns_and_defaults(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text(
        "run_id,d,n,s,v,w,h,seconds_per_step,tokens_per_second,"
        "tokens_seen,final_loss,train_seconds\n"
        "x,64,2,512,500,512,4,0.5,,,3.0,100.0\n"
    )
    with pytest.warns(UserWarning, match="batch"):
        loaded = load_runs(path)
    assert loaded.records[0].batch == 1


def test_bad_integer_cell_reports_line_number(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text(f"{HEADER}\nok,64,2,512,500,512,4,1,,,,,\nbad,64,two,512,500,512,4,1,,,,,\n")
    with pytest.raises(RowError, match="line 3.*column n"):
        load_runs(path)


def test_bad_float_cell_reports_line_number(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text(f"{HEADER}\nx,64,2,512,500,512,4,1,fast,,,,\n")
    with pytest.raises(RowError, match="line 2.*seconds_per_step"):
        load_runs(path)


def test_short_row_is_rejected(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text(f"{HEADER}\nx,64,2,512\n")
    with pytest.raises(RowError, match="line 2"):
        load_runs(path)


def test_invalid_shape_in_row_is_a_row_error(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text(f"{HEADER}\nx,64,2,512,500,512,5,1,,,,,\n")
    with pytest.raises(RowError, match="line 2.*divisible"):
        load_runs(path)


def test_inconsistent_timing_pair_is_rejected(tmp_path):
    path = tmp_path / "runs.csv"
    # batch*s/seconds_per_step = 1024 but the file claims 2000
    path.write_text(f"{HEADER}\nx,64,2,512,500,512,4,2,1.0,2000.0,,,\n")
    with pytest.raises(RowError, match="disagrees"):
        load_runs(path)


def test_duplicate_run_ids_are_rejected():
    r = RunRecord(run_id="same", shape=_shape())
    with pytest.raises(ValidationError, match="duplicate"):
        RunDataset(records=(r, r))


class TestRunRecordValidation:
    def test_rejects_nonpositive_timing(self):
        with pytest.raises(ValidationError):
            RunRecord(run_id="x", shape=_shape(), seconds_per_step=0.0)
        with pytest.raises(ValidationError):
            RunRecord(run_id="x", shape=_shape(), tokens_per_second=-1.0)

    def test_rejects_nan_loss(self):
        with pytest.raises(ValidationError):
            RunRecord(run_id="x", shape=_shape(), final_loss=float("nan"))

    def test_rejects_bad_batch(self):
        with pytest.raises(ValidationError):
            RunRecord(run_id="x", shape=_shape(), batch=0)

    def test_accepts_consistent_timing_pair(self):
        RunRecord(
            run_id="x",
            shape=_shape(),
            batch=2,
            seconds_per_step=0.5,
            tokens_per_second=2 * 512 / 0.5,
        )


def _many_records(count):
    return RunDataset(
        records=tuple(
            RunRecord(run_id=f"r{i}", shape=_shape(), final_loss=float(i)) for i in range(count)
        )
    )


class TestSplit:
    def test_half_split_of_1534_runs_is_767_767(self):
        dataset = split_dataset(_many_records(1534), 0.5, seed=0)
        assert len(dataset.subset("holdout")) == 767
        assert len(dataset.subset("train")) == 767

    def test_same_seed_same_assignment(self):
        a = split_dataset(_many_records(100), 0.3, seed=42)
        b = split_dataset(_many_records(100), 0.3, seed=42)
        assert a.split == b.split

    def test_different_seed_different_assignment(self):
        a = split_dataset(_many_records(100), 0.3, seed=1)
        b = split_dataset(_many_records(100), 0.3, seed=2)
        assert a.split != b.split

    def test_preserves_record_order(self):
        dataset = split_dataset(_many_records(50), 0.2, seed=7)
        assert [r.run_id for r in dataset.records] == [f"r{i}" for i in range(50)]

    def test_every_run_gets_exactly_one_tag(self):
        dataset = split_dataset(_many_records(33), 0.4, seed=3)
        assert len(dataset.split) == 33
        assert set(dataset.split) == {"train", "holdout"}

    def test_fraction_bounds(self):
        with pytest.raises(DomainError):
            split_dataset(_many_records(10), 0.0, seed=0)
        with pytest.raises(DomainError):
            split_dataset(_many_records(10), 1.0, seed=0)


def _bundle():
    return CoefficientBundle(
        time=TimeCoefficients(
            c1=3.74e-19,
            c2=2.4e-15,
            c3=0.1 + 0.2,
            mode="both",
            fit_r2=FitReport(slope=1.0 / 3.0, intercept=-1e-300, r2_pearson=0.97, r2_raw=0.9),
            notes=("a note",),
        ),
        law=ScalingLaw(A=195.76, B=182.52, E=2.34, alpha=0.34, beta=0.28),
        budget=TrainBudget(T=10800.0, batch=8, token_mode="tokens"),
        provenance={"dataset": "runs.csv", "dataset_sha256": "abc123"},
    )


def test_bundle_round_trip_is_bit_exact(tmp_path):
    path = tmp_path / "bundle.json"
    original = _bundle()
    save_coefficients(original, path)
    loaded = load_coefficients(path)
    assert loaded.time == original.time
    assert loaded.law == original.law
    assert loaded.budget == original.budget
    assert loaded.provenance == original.provenance


def test_bundle_with_only_time_round_trips(tmp_path):
    path = tmp_path / "bundle.json"
    original = CoefficientBundle(time=TimeCoefficients(c1=1e-18, c2=0.0, c3=1e-7))
    save_coefficients(original, path)
    loaded = load_coefficients(path)
    assert loaded.time == original.time
    assert loaded.law is None
    assert loaded.budget is None


def test_unknown_bundle_fields_warn_but_load(tmp_path):
    path = tmp_path / "bundle.json"
    save_coefficients(_bundle(), path)
    doc = json.loads(path.read_text())
    doc["spicy_extra"] = True
    doc["law"]["gamma"] = 0.5
    path.write_text(json.dumps(doc))
    with pytest.warns(UserWarning, match="unknown field"):
        loaded = load_coefficients(path)
    assert loaded.law.A == 195.76


def test_missing_required_field_names_it(tmp_path):
    path = tmp_path / "bundle.json"
    save_coefficients(_bundle(), path)
    doc = json.loads(path.read_text())
    del doc["law"]["beta"]
    path.write_text(json.dumps(doc))
    with pytest.raises(BundleFormatError, match="beta"):
        load_coefficients(path)


def test_malformed_json_reports_location(tmp_path):
    path = tmp_path / "bundle.json"
    path.write_text('{"time": {"c1": 1.0,,}}')
    with pytest.raises(BundleFormatError, match="line 1"):
        load_coefficients(path)


def test_invalid_mode_in_bundle_is_a_format_error(tmp_path):
    path = tmp_path / "bundle.json"
    path.write_text(
        json.dumps({"time": {"c1": 1.0, "c2": 1.0, "c3": 0.0, "mode": "memcpy_only"}})
    )
    with pytest.raises(BundleFormatError, match="c2"):
        load_coefficients(path)
