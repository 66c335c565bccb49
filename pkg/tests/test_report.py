"""
Tests for canonical JSON reports and CSV series
"""
import json
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from src.data.report import ReportWriter, canonical_json
from src.errors import ReportError


class TestCanonicalJson:
    def test_sorted_keys_and_full_precision(self):
        text = canonical_json({"b": 1, "a": [0.1, None, True]})
        assert text == '{\n  "a": [\n    0.10000000000000001,\n    null,\n    true\n  ],\n  "b": 1\n}\n'
        assert json.loads(text) == {"a": [0.1, None, True], "b": 1}

    def test_fraction_and_numpy_values(self):
        data = json.loads(canonical_json({
            "eps": Fraction(1, 3), "n": np.int64(3), "x": np.float64(0.5), "ok": np.bool_(False),
            "arr": np.array([1.5, 2.5]), "empty": {}, "none": [],
        }))
        assert data == {"eps": "1/3", "n": 3, "x": 0.5, "ok": False, "arr": [1.5, 2.5], "empty": {}, "none": []}

    def test_objects_with_to_dict(self):
        class Summary:
            def to_dict(self):
                return {"value": 2}

        assert json.loads(canonical_json({"summary": Summary()})) == {"summary": {"value": 2}}

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -np.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ReportError, match=r"\$\.values\[1\]"):
            canonical_json({"values": [0.0, bad]})

    def test_rejects_unknown_types(self):
        with pytest.raises(ReportError):
            canonical_json({"thing": object()})


class TestReportWriter:
    def test_report_and_series_files(self, tmp_path):
        writer = ReportWriter(tmp_path / "out")
        series = {"values": pd.DataFrame({"r": [0.5, 0.1], "n": [1, 2]})}
        path = writer.emit_report({"k": 1}, "demo", series)
        assert path == tmp_path / "out" / "demo.json"
        csv = (tmp_path / "out" / "demo_values.csv").read_bytes()
        assert csv == b"r,n\n0.5,1\n0.10000000000000001,2\n"

    def test_rewrite_is_byte_identical(self, tmp_path):
        report = {"z": [1 / 3, 2 / 3], "a": {"nested": Fraction(5, 7)}}
        first = ReportWriter(tmp_path / "a").emit_report(report, "r").read_bytes()
        second = ReportWriter(tmp_path / "b").emit_report(report, "r").read_bytes()
        assert first == second

    def test_invalid_report_writes_nothing(self, tmp_path):
        with pytest.raises(ReportError):
            ReportWriter(tmp_path / "out").emit_report({"x": float("nan")}, "bad")
        assert not (tmp_path / "out" / "bad.json").exists()
