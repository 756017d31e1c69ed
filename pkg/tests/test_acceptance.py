"""One test per acceptance criterion, each with its wall-clock bound.

Every test records a ``[PASS]/[FAIL] name (seconds)`` line that the conftest
prints in an "acceptance criteria" section at the end of the run.
"""

from __future__ import annotations

from conftest import ACCEPTANCE_LINES
from stepkernel import suite


def _record(number: int, result: suite.SuiteResult, bound: float) -> None:
    in_time = result.seconds < bound
    status = "PASS" if result.passed and in_time else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {result.name} ({result.seconds:.2f} s, bound {bound:g} s)")
    assert not result.failures, "\n".join(result.failures)
    assert result.passed
    assert in_time, f"took {result.seconds:.2f} s, bound is {bound} s"


def test_criterion_1_four_block_kernel():
    # (a) cannot hold: see test_kernels.py::test_four_block_has_a_sparse_set
    _record(1, suite.check_four_block(), 1.0)


def test_criterion_2_five_block_negative_density():
    result = suite.check_five_block()
    assert int(result.values["negative graphs"]) >= 1
    _record(2, result, 120.0)


def test_criterion_3_identities():
    _record(3, suite.check_identities(count=100, seed=0), 30.0)


def test_criterion_4_cone_closure():
    _record(4, suite.check_cone_closure(count=100, seed=0), 60.0)


def test_criterion_5_psd_nonnegativity():
    _record(5, suite.check_psd_nonnegativity(count=50, seed=0), 120.0)


def test_criterion_6_knrs_inequalities():
    _record(6, suite.check_knrs(count=100, seed=0), 120.0)


def test_criterion_7_search_and_certification():
    _record(7, suite.check_search(seed=0, restarts=200), 300.0)
