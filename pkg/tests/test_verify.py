import time

import numpy as np
import pytest

from kleindim import verify
from kleindim.verify import FAIL, PASS, SKIP, Check, run_check, run_checks

BY_ID = {c.cid: c for c in verify.CHECKS}


def test_eleven_checks_with_unique_ids():
    assert sorted(BY_ID) == list(range(1, 12))
    assert all(c.time_limit > 0 and c.claim for c in verify.CHECKS)


@pytest.mark.parametrize("cid", sorted(BY_ID))
def test_corrupted_builtin_fails(cid):
    # time limits off: the corrupted variants are not what the limits were set for
    res = run_check(BY_ID[cid], corrupt=True, enforce_time=False)
    assert res.status == FAIL, res.line()


@pytest.mark.parametrize("name,fn", verify.PROPERTY_CHECKS)
def test_property_suites_detect_corruption(name, fn):
    assert fn(np.random.default_rng(0))
    assert not fn(np.random.default_rng(0), corrupt=True)


def _check(run, limit=1.0, budgeted=False):
    return Check(99, "probe", "probe claim", "none", limit, budgeted, run)


def test_timeout_is_a_failure_with_partial_data():
    def slow(ctx, out):
        out["stage"] = 1
        time.sleep(3)
        return True

    res = run_check(_check(slow))
    assert res.status == FAIL and "timed out" in res.note
    assert res.measured == {"stage": 1}


def test_crash_is_a_failure():
    def broken(ctx, out):
        raise ValueError("boom")

    res = run_check(_check(broken))
    assert res.status == FAIL and "boom" in res.note


def test_budget_scaling_turns_failures_into_skips():
    res = run_check(_check(lambda ctx, out: False, budgeted=True), budget_scale=0.1)
    assert res.status == SKIP
    res = run_check(_check(lambda ctx, out: False, budgeted=False), budget_scale=0.1)
    assert res.status == FAIL
    res = run_check(_check(lambda ctx, out: False, budgeted=True), budget_scale=1.0)
    assert res.status == FAIL


def test_budget_helper():
    ctx = verify.CheckContext(0, 0.1, False)
    assert ctx.budget(200_000) == 20_000


def test_report_csv_and_timing():
    report = run_checks([1, 2])
    assert report.ok
    lines = report.csv_text().splitlines()
    assert lines[0] == verify.REPORT_HEADER
    assert [l.split(",")[0] for l in lines[1:]] == ["1", "2"]
    assert len(report.timing_text().splitlines()) == 2


def test_report_rejects_unknown_ids_and_bad_scale():
    with pytest.raises(ValueError):
        run_checks([42])
    with pytest.raises(ValueError):
        run_checks([1], budget_scale=0)


def test_only_named_checks_are_corrupted():
    report = run_checks([1, 2], corrupt=[2])
    assert [r.status for r in report.results] == [PASS, FAIL]
    assert not report.ok
