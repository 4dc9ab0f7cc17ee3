import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbmexit.results import (CheckResult, MCEstimate, all_passed, at_least, at_most, within_abs, within_rel,
                             within_stderr)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
positive = st.floats(min_value=1e-6, max_value=1e6)


def test_mc_estimate():
    e = MCEstimate.from_samples([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5
    assert e.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert e.scaled(-2).stderr == pytest.approx(2 * e.stderr)
    with pytest.raises(ValueError):
        MCEstimate.from_samples([])


@given(finite, positive, finite)
def test_within_stderr_rule(est, se, target):
    r = within_stderr("x", est, se, target)
    assert r.passed == (abs(est - target) <= 3 * se)


@given(finite, finite, positive)
def test_bounds_are_complementary(est, bound, se):
    assert at_most("a", est, bound, se=se).passed == (est <= bound + 3 * se)
    assert at_least("b", est, bound, se=se).passed == (est >= bound - 3 * se)


def test_rel_abs_rules():
    assert within_rel("r", 1.05, 1.0, 0.1).passed
    assert not within_rel("r", 1.2, 1.0, 0.1).passed
    assert within_abs("a", 1.0 + 1e-7, 1.0, 1e-6).passed


def test_json_keys_and_infinities():
    r = at_most("n", 0.5, 1.0, detail=1)
    j = r.to_json()
    assert list(j)[:6] == ["name", "estimate", "stderr", "target", "tolerance_rule", "pass"]
    assert j["target"] == ["-inf", 1.0]
    json.dumps(j)
    assert "PASS" in r.line() and "n" in r.line()
    assert all_passed([r]) and not all_passed([r, CheckResult("f", 0, 0, 1, "x", False)])
    assert math.isinf(r.target[0])
