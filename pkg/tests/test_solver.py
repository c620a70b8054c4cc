import numpy as np
import pytest

from sl0.dictionary import orthonormalize, project_nullspace
from sl0.errors import PreconditionViolated
from sl0.harness.experiments import constructed_system
from sl0.harness.instances import plant
from sl0.objective import F, SplineFamily
from sl0.schedule import derive_schedule_heuristic, derive_schedule_known_gamma, derive_schedule_noisy_theorem4
from sl0.solver import feasibility_tolerance, inner_loop_contraction_check, solve


@pytest.fixture(scope="module")
def system():
    return constructed_system(0)


def test_zero_measurement_returns_zero(small_dict):
    sched = derive_schedule_heuristic(1.0, m=8)
    tr = solve(small_dict, np.zeros(4), sched)
    assert not np.any(tr.s_out)


def test_guaranteed_recovery_and_feasibility(system):
    rng = np.random.default_rng(0)
    d = system.d
    for _ in range(5):
        s0 = plant(rng, d.m, 1)
        x = d.A @ s0
        sched = derive_schedule_known_gamma(d, system.n0, system.gamma, 1, 1e-6, 0.0, x)
        tr = solve(d, x, sched, record_iterates=True)
        assert np.linalg.norm(tr.s_out - s0) <= 1e-6
        assert tr.max_residual() <= feasibility_tolerance(x)
        assert tr.iterates.shape == (sched.J, sched.steps + 1, d.m)
        assert np.all(tr.per_j_F >= d.m - sched.k_double_prime - 1e-9)


def test_noisy_recovery_within_bound(system):
    rng = np.random.default_rng(1)
    d = system.d
    eps = 1e-3
    s0 = plant(rng, d.m, 1)
    v = rng.standard_normal(d.n)
    x = d.A @ s0 + 0.999 * eps * v / np.linalg.norm(v)
    sched = derive_schedule_noisy_theorem4(d, system.n0, system.gamma, 1, None, eps, np.linalg.norm(d.A.T @ x))
    tr = solve(d, x, sched)
    assert np.linalg.norm(tr.s_out - s0) <= sched.C * eps


def test_heuristic_recovers_planted(rng):
    d, _ = orthonormalize(rng.standard_normal((10, 20)))
    s0 = plant(rng, 20, 1)
    x = d.A @ s0
    tr = solve(d, x, derive_schedule_heuristic(2 * np.max(np.abs(d.A.T @ x)), m=20))
    assert np.linalg.norm(tr.s_out - s0) <= 1e-3 * np.linalg.norm(s0)


def test_schedule_dimension_mismatch(small_dict):
    with pytest.raises(ValueError):
        solve(small_dict, np.ones(4), derive_schedule_heuristic(1.0, m=9))


def test_inner_loop_contracts(system):
    rng = np.random.default_rng(2)
    d = system.d
    s0 = plant(rng, d.m, 1)
    x = d.A @ s0
    sched = derive_schedule_known_gamma(d, system.n0, system.gamma, 1, 1e-6, 0.0, x)
    j = sched.J // 2
    sp = SplineFamily(sched.shape, sched.sigma[j])
    floor = d.m - system.n0 / (2 + 2 * system.gamma)
    for _ in range(5):
        z = project_nullspace(d, rng.standard_normal(d.m))
        s = s0 + 0.1 * sched.sigma[j] * z / np.linalg.norm(z)
        if F(sp, s) < floor:
            continue
        rep = inner_loop_contraction_check(d, sched, j, s)
        assert rep.passed and rep.max_ratio <= sched.CR_prime + 1e-10


def test_inner_loop_fixed_point(system):
    d = system.d
    s0 = np.zeros(d.m)
    s0[0] = 1.0
    x = d.A @ s0
    sched = derive_schedule_known_gamma(d, system.n0, system.gamma, 1, 1e-6, 0.0, x)
    tr = solve(d, x, sched)
    rep = inner_loop_contraction_check(d, sched, sched.J - 1, tr.s_out)
    assert rep.passed
    assert rep.steps <= 2 and np.all(np.isnan(rep.ratios) | (rep.ratios == 0))


def test_inner_loop_refuses_outside_region(system):
    d = system.d
    x = d.A @ np.eye(d.m)[0]
    sched = derive_schedule_known_gamma(d, system.n0, system.gamma, 1, 1e-6, 0.0, x)
    with pytest.raises(PreconditionViolated):
        inner_loop_contraction_check(d, sched, sched.J - 1, 100 * np.ones(d.m))
    with pytest.raises(PreconditionViolated):
        inner_loop_contraction_check(d, derive_schedule_heuristic(1.0), 0, np.zeros(d.m))
