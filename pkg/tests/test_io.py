import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge.domain import Grid, ScalarField, VecField3
from fracgauge.harness.generators import SampleSpec, gen_frame
from fracgauge.io import csv_text, dumps, field_from_dict, field_to_dict, frame_from_dict, frame_to_dict


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_reals_round_trip_exactly(x):
    assert json.loads(dumps(x)) == x


def test_non_finite_becomes_null():
    assert json.loads(dumps([float("nan"), float("inf"), 1.5])) == [None, None, 1.5]


def test_dumps_is_deterministic_and_ordered():
    obj = {"b": np.float64(0.1), "a": [np.int64(3), True, None], "c": np.arange(3.0)}
    text = dumps(obj)
    assert text == dumps(obj)
    assert list(json.loads(text)) == ["b", "a", "c"]
    assert text.endswith("\n")


def test_dumps_rejects_unknown_objects():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_field_file_layout():
    g = Grid("disk", 1.0, 8)
    f = ScalarField(g, np.arange(g.size, dtype=float))
    d = field_to_dict(f)
    assert d["grid"] == {"kind": "disk", "R": 1.0, "n": 8}
    assert len(d["values"]) == 64
    assert d["values"][0] is None  # corner node lies outside the disk
    assert sum(v is not None for v in d["values"]) == g.size


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 24), st.integers(0, 2**32 - 1))
def test_field_round_trip(n, seed):
    g = Grid("disk", 1.0, n)
    vals = np.random.default_rng(seed).standard_normal((g.size, 3))
    back = field_from_dict(json.loads(dumps(field_to_dict(VecField3(g, vals)))))
    assert back.grid == g
    np.testing.assert_array_equal(back.values, vals)


def test_field_with_wrong_null_pattern_is_rejected():
    g = Grid("disk", 1.0, 8)
    d = field_to_dict(ScalarField(g, np.zeros(g.size)))
    d["values"][0] = 1.0
    with pytest.raises(ValueError):
        field_from_dict(d)


def test_frame_round_trip():
    g = Grid("disk", 1.0, 12)
    fr = gen_frame(SampleSpec(seed=5), g)
    back = frame_from_dict(json.loads(dumps(frame_to_dict(fr))))
    np.testing.assert_array_equal(back.e1.values, fr.e1.values)
    np.testing.assert_array_equal(back.u.values, fr.u.values)


def test_csv_uses_lf_and_header():
    text = csv_text(["r", "f"], [(0.5, 1.0 / 3.0), (1, None)])
    assert text.split("\n")[0] == "r,f"
    assert "\r" not in text
    assert float(text.split("\n")[1].split(",")[1]) == 1.0 / 3.0
    assert math.isclose(float(text.split("\n")[1].split(",")[0]), 0.5)
