"""Convexified AC optimal power flow."""

import json

from ._core import (
    CaseError,
    InputError,
    NoPlanFound,
    case_summary,
    classify_term,
    default_exponent_grid,
    plan_exponents,
)
from . import _core

__all__ = [
    "CaseError",
    "InputError",
    "NoPlanFound",
    "case_summary",
    "classify_term",
    "default_exponent_grid",
    "plan_exponents",
    "run_case",
    "run_suite",
]


def run_case(path, mode="both", max_angle_diff=0.6, tol_kkt=1e-6, exponent_grid=None,
             relaxed_inverse=False, include_timing=True):
    """Run one case. Returns (report dict, exit code)."""
    text, code = _core.run_case_json(str(path), mode, max_angle_diff, tol_kkt, exponent_grid,
                                     relaxed_inverse, include_timing)
    return json.loads(text)["reports"][0], code


def run_suite(manifest_path):
    """Run a manifest. Returns (list of report dicts, exit code, diff lines)."""
    text, code, diffs = _core.run_suite_json(str(manifest_path))
    return json.loads(text)["reports"], code, list(diffs)
