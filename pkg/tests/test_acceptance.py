"""Exit criteria at their stated sizes and tolerances.

Each test prints one PASS/FAIL line, collected in the terminal summary.
Run alone with ``pytest -m acceptance``.
"""

import pytest

from sl0.harness import checks

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def systems():
    found, report = checks.default_systems(search_seeds=10_000)
    return found, report


def test_01_guaranteed_recovery(systems, record_criterion):
    found, report = systems
    res = checks.check_guaranteed_recovery(found, trials=100, delta=1e-6)
    res.seconds += report.wall_time
    res.summary += (
        f"; random {report.n}x{report.m} search: {len(report.qualifying)} qualifying in "
        f"{report.seeds_tried} seeds (best margin {report.best_margin:.3f}), "
        f"systems used: {', '.join(s.label for s in found)}"
    )
    assert record_criterion(1, res, limit_s=60), res.line()


def test_02_noisy_error_bound(systems, record_criterion):
    res = checks.check_noisy_bound(systems[0], eps_list=(1e-4, 1e-3), trials=100)
    assert record_criterion(2, res, limit_s=60), res.line()


def test_03_inner_loop(systems, record_criterion):
    res = checks.check_inner_loop(systems[0], starts=1000)
    assert record_criterion(3, res, limit_s=120), res.line()


def test_04_objective_calculus(record_criterion):
    res = checks.check_objective_calculus(points=200, draws=10_000)
    assert record_criterion(4, res), res.line()


def test_05_concavity_narrowness(record_criterion):
    res = checks.check_concavity_narrowness(systems=10, points=500, pairs=1000)
    assert record_criterion(5, res), res.line()


def test_06_sigma_step(record_criterion):
    res = checks.check_sigma_step(draws=10_000)
    assert record_criterion(6, res), res.line()


def test_07_constants(record_criterion):
    res = checks.check_constants(systems=50)
    assert record_criterion(7, res), res.line()


def test_08_gaussian(record_criterion):
    res = checks.check_gaussian(l=100, n=200, r=0.2, trials=2000)
    assert record_criterion(8, res, limit_s=120), res.line()


def test_09_msl0(record_criterion):
    res = checks.check_msl0(T=8, m=64)
    assert record_criterion(9, res), res.line()


def test_10_scaling(record_criterion):
    res = checks.check_scaling(m_list=(256, 512, 1024, 2048), alpha=0.5)
    assert record_criterion(10, res, limit_s=600), res.line()


def test_11_oracle_agreement(record_criterion):
    res = checks.check_oracle_agreement(trials=500, n=10, m=20, k=2)
    assert record_criterion(11, res), res.line()
