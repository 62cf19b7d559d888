"""The ten acceptance criteria at their stated tolerances.

Each criterion runs once per session; its status line is printed both by the
test and in the terminal summary.
"""
import math

import pytest

from prethermal import acceptance
from prethermal.measures import entropy_analytic_principal

from helpers import ACCEPTANCE_LINES

_cache: dict[int, acceptance.CriterionResult] = {}


def result(k):
    if k not in _cache:
        _cache[k] = acceptance.run_criterion(k)
        ACCEPTANCE_LINES[k] = _cache[k].line()
    return _cache[k]


def report(res):
    print(res.line())
    print(acceptance.table([res]))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 7, 8, 9, 10])
def test_criterion(k):
    res = result(k)
    report(res)
    assert res.error is None, res.error
    assert res.passed, res.line()


def test_criterion_6_except_quoted_principal_limit():
    res = result(6)
    report(res)
    assert res.error is None, res.error
    failing = [c.label for c in res.checks if not c.ok]
    assert failing in ([], ["principal limit"]), failing


@pytest.mark.xfail(strict=True, reason=(
    "the large-N principal-block entropy at beta omega0 = ln 4 is 0.749780; the quoted "
    "0.74798 differs by 1.8e-3, far outside the 1e-5 tolerance (see notes/decisions.md)"))
def test_criterion_6_quoted_principal_limit():
    check = next(c for c in result(6).checks if c.label == "principal limit")
    assert check.ok, f"computed {check.computed!r}, expected {check.expected}"


def test_principal_limit_formula_value():
    x = math.log(4)
    direct = (x / 2) / math.tanh(x / 2) - math.log(2 * math.sinh(x / 2))
    assert entropy_analytic_principal(x) == pytest.approx(direct, abs=1e-15)
    assert direct == pytest.approx(0.749780, abs=1e-6)
    # finite blocks converge to it
    assert abs(entropy_analytic_principal(x, 40) - direct) < 1e-6
