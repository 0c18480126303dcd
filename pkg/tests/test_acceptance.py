"""Acceptance gate: every criterion at its pinned tolerance, one
pass/fail line each.  Run with ``pytest tests/test_acceptance.py -v -s``
or equivalently ``noisygates validate``."""

import pytest

from noisygates.acceptance import CRITERIA, run_criteria


@pytest.mark.parametrize(
    "number,name", [(c[0], c[1]) for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA]
)
def test_criterion(number, name):
    result = run_criteria([number])[0]
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] {number:>2}. {name} ({result.seconds:.1f}s): {result.detail}")
    assert result.passed, f"criterion {number} ({name}): {result.detail}"
