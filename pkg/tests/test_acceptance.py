"""The acceptance criteria at their stated tolerances, one pass/fail line each."""
import pytest

from gaussblab import acceptance

SEED = 0


@pytest.fixture(scope="module")
def report():
    return {}


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, len(acceptance.CRITERIA) + 1))
def test_criterion(number, report, capsys):
    res = acceptance.run_criterion(number, SEED)
    report[number] = res
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail


def test_runtime_budget_criterion_1(report):
    res = report.get(1)
    if res is None:
        pytest.skip("criterion 1 not run in this session")
    assert res.elapsed <= acceptance.RUNTIME_BUDGET
