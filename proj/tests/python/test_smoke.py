import json
import os
from pathlib import Path

import pytest

import convexopf

DATA = Path(os.environ.get("CONVEXOPF_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_case_summary():
    s = convexopf.case_summary(str(DATA / "case14.m"))
    assert s["buses"] == 14
    assert s["generators"] == 5
    assert s["load_mw"] == pytest.approx(259.0)


def test_run_case_ieee14():
    report, code = convexopf.run_case(DATA / "case14.m", mode="both")
    assert code == 0
    modes = {m["mode"]: m for m in report["modes"]}
    assert modes["nonconvex"]["objective"] == pytest.approx(8081.53, rel=5e-3)
    assert modes["convex"]["objective"] == pytest.approx(8081.14, rel=5e-3)
    assert report["power_flow"]["converged"]
    assert report["plan"]["transformed_variables"] > 0


def test_deterministic_json():
    a, _ = convexopf.run_case(DATA / "case14.m", mode="convex", include_timing=False)
    b, _ = convexopf.run_case(DATA / "case14.m", mode="convex", include_timing=False)
    assert json.dumps(a) == json.dumps(b)


def test_bad_case(tmp_path):
    bad = tmp_path / "bad.m"
    bad.write_text("not a case\n")
    with pytest.raises(convexopf.CaseError):
        convexopf.run_case(bad)


def test_classifier_and_plan():
    assert convexopf.classify_term(2.0, {0: -1.0, 1: -2.0}) == "ConvexPositive"
    assert convexopf.classify_term(1.0, {0: 2.0, 1: 0.5}) == "Nonconvex"
    plan = convexopf.plan_exponents([(-15.0, {0: 3.0})])
    assert plan == {(0, -1): pytest.approx(1.0 / 3.0)}
    assert -3.0 in convexopf.default_exponent_grid()


def test_suite(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"cases": [{
        "path": str(DATA / "case14.m"), "mode": "nonconvex",
        "expected": {"nonconvex": {"objective": 1.0}}}]}))
    reports, code, diffs = convexopf.run_suite(manifest)
    assert code == 1
    assert len(reports) == 1
    assert diffs and diffs[0].startswith("DIFF case14 nonconvex objective")
