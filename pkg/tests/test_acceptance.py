"""Acceptance criteria: one pass/fail line per criterion.

The full report is computed once per session (about half a minute). Each
criterion is then asserted separately so that the pytest log reads as a
checklist. Criteria that are not met by a faithful implementation stay red.
"""

import json

import pytest

from beamlab.acceptance import CRITERIA, run_acceptance


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    return run_acceptance(tmp_path_factory.mktemp("accept"))


@pytest.mark.slow
@pytest.mark.parametrize("criterion", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(report, criterion):
    checks = report.by_criterion(criterion)
    assert checks, f"no checks recorded for criterion {criterion}"
    for c in checks:
        print(c.line())
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, "\n".join(failed)


@pytest.mark.slow
def test_report_files(report, tmp_path):
    run_acceptance(tmp_path, criteria=[9])
    doc = json.loads((tmp_path / "acceptance.json").read_text(encoding="utf-8"))
    assert [c["name"] for c in doc["checks"]] == [c.name for c in report.by_criterion(9)]
    assert doc["pass"] is True


def test_perturbed_cubic_coefficient_is_detected():
    # a 10% error in c3 leaves a cubic residual, so the fourth-order check must fail
    good = run_acceptance(None, criteria=[3])
    bad = run_acceptance(None, criteria=[3], c3_factor=1.1)
    assert good.by_criterion(3)[0].passed
    assert not bad.by_criterion(3)[0].passed
    assert bad.by_criterion(3)[0].measured < 3.5


def test_unknown_criterion():
    with pytest.raises(ValueError):
        run_acceptance(None, criteria=[13])
