"""Acceptance gate: one pass/fail line per criterion, all at the pinned
default seed.  The full measured report is computed once per session and
shared across the parametrized tests.

Criterion 10 (single corrector run of unit total time halving the fitted
total-variation distance) fails by design: the corrector's mean dynamics
contract the offset by at least 0.54 for every friction value at that
time budget, so the required ratio of 0.5 is unreachable.  The test is
kept red rather than weakened.
"""

import numpy as np
import pytest

from cmlab.acceptance import DEFAULT_SEED, run_all

CRITERIA = {
    1: "one-step W2 excess scales linearly in step size h",
    2: "one-step W2 excess scales linearly in measured score error",
    3: "one-step W2 excess scales linearly in measured consistency error",
    4: "multistep error contracts to a plateau no worse than one-step",
    5: "stationary data: every sampler within 3x the sampling noise floor",
    6: "smoothed total variation obeys the W1/sqrt(e^{2 tau}-1) bound",
    7: "score Hessian norm obeys the bounded-support bound",
    8: "recovered score error within 1.1x the measured error budget",
    9: "CT/CD gradient gap shrinks second order in grid spacing",
    10: "unit-time corrector run halves the fitted TV distance",
    11: "repeated runs at the pinned seed emit identical bytes",
}


@pytest.fixture(scope="session")
def report():
    return run_all(DEFAULT_SEED)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(report, number):
    entry = next(c for c in report["criteria"] if c["number"] == number)
    status = "PASS" if entry["passed"] else "FAIL"
    print(f"criterion {number:2d} [{status}] {CRITERIA[number]}")
    assert entry["passed"], (
        f"criterion {number} failed: {CRITERIA[number]}; "
        f"details: {entry['details']}")


def test_report_is_complete(report):
    assert sorted(c["number"] for c in report["criteria"]) == sorted(CRITERIA)
    assert report["seed"] == DEFAULT_SEED
