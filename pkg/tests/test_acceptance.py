"""Acceptance criteria 1-10 at their stated tolerances.

Each test records a one-line PASS/FAIL summary, repeated at the end of the
pytest run.
"""

import subprocess
import sys
import time

import pytest

from dicke3 import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda c: f"criterion_{c.number}")
def test_criterion(criterion, record_criterion):
    result = criterion()
    record_criterion(result.line())
    assert result.passed, result.detail


def test_criterion_10_verify_command(record_criterion):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "dicke3.cli", "verify"], capture_output=True, text=True, timeout=900)
    elapsed = time.perf_counter() - t0
    passed = proc.returncode == 0 and elapsed <= 300
    detail = f"verify exit {proc.returncode} in {elapsed:.1f} s (need exit 0 within 300 s)"
    if proc.returncode != 0:
        detail += "; " + proc.stderr.strip().splitlines()[-1]
    mark = "PASS" if passed else "FAIL"
    record_criterion(f"[{mark}] 10 verify end-to-end: {detail} ({elapsed:.2f} s)")
    assert passed, detail
