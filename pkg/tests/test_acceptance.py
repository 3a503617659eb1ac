"""One test per acceptance criterion; each prints a PASS/FAIL line with its tolerances."""

import pytest

from pathint.acceptance import CRITERIA

ACCEPTANCE_LINES: list[str] = []


@pytest.mark.parametrize("check", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(check):
    outcome = check()
    line = outcome.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert outcome.passed, line
