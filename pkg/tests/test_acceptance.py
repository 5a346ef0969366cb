"""Acceptance criteria 1-12 at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary.  Run standalone with ``python3 tests/test_acceptance.py``.
"""

import sys

import pytest

from covergff import experiments as ex

RESULTS = {}

# wall-clock budgets in seconds
BUDGET = {1: 120, 2: 30, 3: 120, 4: 180, 5: 300, 8: 600, 9: 1200, 11: 600}


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(ex.CRITERIA))
def test_criterion(number):
    r = ex.run_criterion(number)
    RESULTS[number] = r
    print(r.line())
    print(f"    {r.detail}")
    assert r.passed, r.detail
    if number in BUDGET:
        assert r.seconds < BUDGET[number]


if __name__ == "__main__":
    failed = 0
    for k in sorted(ex.CRITERIA):
        r = ex.run_criterion(k)
        print(r.line(), flush=True)
        failed += not r.passed
    sys.exit(1 if failed else 0)
