"""Acceptance table: one test and one PASS/FAIL line per criterion."""

import pytest

from cornerscatter.acceptance import CRITERIA, run_criteria

RESULTS: dict[int, str] = {}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    (res,) = run_criteria([number], seed=0, workers=1)
    RESULTS[number] = res.line()
    print(res.line())
    assert res.passed, res.summary
