import json

import numpy as np
import pytest

from wishfisher.mcverify import McConfig
from wishfisher.suite import CATALOGUE, family_z_tolerance, run_verification_suite, zscore, zvalues


@pytest.fixture(scope="module")
def fast_report():
    return run_verification_suite("fast")


def test_fast_suite_passes_on_defaults(fast_report):
    failed = [(r.check_id, r.measured, r.details) for r in fast_report if not r.passed]
    assert not failed


def test_report_has_one_entry_per_check(fast_report):
    assert [r.check_id for r in fast_report] == [cid for cid, _, _ in CATALOGUE]
    for r in fast_report:
        entry = json.loads(json.dumps(r.to_json()))
        assert {"check_id", "paper_ref", "status", "measured", "tolerance", "runtime_ms"} <= set(entry)
        assert entry["paper_ref"]


def test_report_includes_required_checks(fast_report):
    ids = {r.check_id for r in fast_report}
    assert {"wishart.laplace", "model.jeffreys"} <= ids


def test_scope_validation():
    with pytest.raises(ValueError):
        run_verification_suite("medium")


def test_crashing_check_is_reported(monkeypatch):
    from wishfisher import suite

    def boom(ctx):
        raise RuntimeError("broken")

    monkeypatch.setattr(suite, "CATALOGUE", [("x.boom", "crash", boom)])
    (result,) = suite.run_verification_suite("fast")
    assert result.status == "fail" and "broken" in result.details["error"]


def test_zvalues_upper_triangle_and_zero_se():
    mean = np.array([[1.0, 2.0], [2.0, 3.0]])
    se = np.ones((2, 2))
    assert zvalues(mean, se, np.zeros((2, 2))).size == 3
    assert zvalues(np.array([[1.0, 2.0], [0.0, 3.0]]), se, np.zeros((2, 2))).size == 4
    assert zscore([1.0], [0.0], [1.0]) == 0.0
    assert zscore([1.0], [0.0], [2.0]) == np.inf


def test_family_tolerance():
    assert family_z_tolerance(10**7, 1) == pytest.approx(3.0, abs=1e-3)
    assert 4.5 < family_z_tolerance(100) < 5.0


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_verdicts_stable_across_seeds(seed):
    report = run_verification_suite("fast", McConfig(seed=seed, samples=20_000))
    assert all(r.passed for r in report), [r.check_id for r in report if not r.passed]
