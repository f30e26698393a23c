import json

import pytest

from trainharness import (
    DEFAULT_SECONDS_PER_RUN,
    DEFAULT_WARMUP_STEPS,
    MeasurementPlan,
    PlanError,
    PlannedShape,
    load_plan,
)


def shape(**overrides):
    base = dict(d=64, n=2, s=64, v=512, w=256, h=2)
    base.update(overrides)
    return PlannedShape(**base)


class TestPlannedShape:
    def test_accepts_a_valid_shape(self):
        s = shape()
        assert s.describe() == "d=64 n=2 s=64 v=512 w=256 h=2"

    @pytest.mark.parametrize("field", ["d", "n", "s", "v", "w", "h"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(PlanError, match="positive"):
            shape(**{field: 0})

    def test_rejects_float_dimensions(self):
        with pytest.raises(PlanError, match="integer"):
            shape(d=64.0)

    def test_rejects_indivisible_heads(self):
        with pytest.raises(PlanError, match="divisible"):
            shape(d=64, h=3)

    def test_rejects_single_position_sequences(self):
        # Next-token loss shifts by one, so s=1 leaves nothing to predict.
        with pytest.raises(PlanError, match="at least 2"):
            shape(s=1)


class TestMeasurementPlan:
    def test_defaults(self):
        plan = MeasurementPlan(shapes=(shape(),))
        assert plan.seconds_per_run == DEFAULT_SECONDS_PER_RUN == 300.0
        assert plan.warmup_steps == DEFAULT_WARMUP_STEPS
        assert plan.batch == 1
        assert plan.device == "cpu"
        assert plan.out is None

    def test_rejects_empty_plans(self):
        with pytest.raises(PlanError, match="no shapes"):
            MeasurementPlan(shapes=())

    def test_rejects_zero_warmup(self):
        with pytest.raises(PlanError, match="warmup"):
            MeasurementPlan(shapes=(shape(),), warmup_steps=0)

    def test_rejects_nonpositive_seconds(self):
        with pytest.raises(PlanError, match="seconds_per_run"):
            MeasurementPlan(shapes=(shape(),), seconds_per_run=0.0)

    def test_rejects_bad_batch(self):
        with pytest.raises(PlanError, match="batch"):
            MeasurementPlan(shapes=(shape(),), batch=0)

    def test_coerces_integer_seconds_to_float(self):
        plan = MeasurementPlan(shapes=(shape(),), seconds_per_run=300)
        assert plan.seconds_per_run == 300.0
        assert isinstance(plan.seconds_per_run, float)


class TestLoadPlan:
    def write(self, tmp_path, doc):
        path = tmp_path / "plan.json"
        path.write_text(json.dumps(doc))
        return path

    def test_round_trip(self, tmp_path):
        path = self.write(
            tmp_path,
            {
                "shapes": [
                    {"d": 64, "n": 2, "s": 64, "v": 512, "w": 256, "h": 2},
                    {"d": 128, "n": 1, "s": 32, "v": 512, "w": 512, "h": 4},
                ],
                "batch": 4,
                "seconds_per_run": 2.5,
                "warmup_steps": 3,
                "device": "cpu",
                "out": "runs.csv",
            },
        )
        plan = load_plan(path)
        assert len(plan.shapes) == 2
        assert plan.shapes[1].w == 512
        assert plan.batch == 4
        assert plan.seconds_per_run == 2.5
        assert plan.out == "runs.csv"

    def test_missing_shapes_is_an_error(self, tmp_path):
        with pytest.raises(PlanError, match="missing field: shapes"):
            load_plan(self.write(tmp_path, {"batch": 1}))

    def test_missing_shape_field_names_the_entry(self, tmp_path):
        doc = {"shapes": [{"d": 64, "n": 2, "s": 64, "v": 512, "w": 256}]}
        with pytest.raises(PlanError, match=r"shapes\[0\].*h"):
            load_plan(self.write(tmp_path, doc))

    def test_invalid_shape_names_the_entry(self, tmp_path):
        doc = {"shapes": [{"d": 64, "n": 2, "s": 64, "v": 512, "w": 256, "h": 3}]}
        with pytest.raises(PlanError, match=r"shapes\[0\].*divisible"):
            load_plan(self.write(tmp_path, doc))

    def test_unknown_fields_warn_but_load(self, tmp_path):
        doc = {
            "shapes": [{"d": 64, "n": 2, "s": 64, "v": 512, "w": 256, "h": 2}],
            "gpu_count": 8,
        }
        with pytest.warns(UserWarning, match="gpu_count"):
            plan = load_plan(self.write(tmp_path, doc))
        assert len(plan.shapes) == 1

    def test_malformed_json_reports_location(self, tmp_path):
        path = tmp_path / "plan.json"
        path.write_text("{not json")
        with pytest.raises(PlanError, match="line 1"):
            load_plan(path)

    def test_null_optional_fields_fall_back_to_defaults(self, tmp_path):
        doc = {
            "shapes": [{"d": 64, "n": 2, "s": 64, "v": 512, "w": 256, "h": 2}],
            "out": None,
        }
        plan = load_plan(self.write(tmp_path, doc))
        assert plan.out is None
        assert plan.warmup_steps == DEFAULT_WARMUP_STEPS
