import numpy as np
import pytest

from sl0.dictionary import min_norm_solution, orthonormalize
from sl0.errors import PreconditionViolated
from sl0.objective import (
    F,
    ClippedNormSpec,
    F_lower_bound,
    SplineFamily,
    clipped_l0,
    f,
    f_prime,
    f_second,
    grad_F,
    gradient_norm_bound,
    projected_hessian_check,
)

UNIT = SplineFamily(1.0, 1.0)


@pytest.mark.parametrize("s,want", [(0, 1), (0.5, 0.875), (1.5, 0.125), (2.5, 0), (1.0, 0.5), (-1.5, 0.125)])
def test_f_values(s, want):
    assert f(UNIT, s) == pytest.approx(want, abs=1e-15)


def test_f_prime_and_second_values():
    assert f_prime(UNIT, 0.0) == 0
    assert f_prime(UNIT, 0.5) == pytest.approx(-0.5)
    assert f_second(UNIT, 0.0) == pytest.approx(-1)
    assert f_second(UNIT, 1.5) == pytest.approx(1)
    assert f_second(UNIT, 3.0) == 0


def test_f_prime_finite_differences():
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(200):
        sp = SplineFamily(rng.uniform(0.2, 3), rng.uniform(0.1, 2))
        s = rng.uniform(-1.2, 1.2) * (1 + sp.gamma) * sp.sigma
        t = abs(s) / sp.sigma
        if min(abs(t - 1), abs(t - 1 - sp.gamma), t) < 1e-3:
            continue
        fd = (f(sp, s + h) - f(sp, s - h)) / (2 * h)
        ref = f_prime(sp, s)
        assert abs(fd - ref) <= 1e-6 * max(abs(ref), 1e-3)


def test_F_values():
    assert F(UNIT, np.zeros(5)) == 5
    assert F(UNIT, np.array([0.5, 3.0])) == pytest.approx(0.875)


def test_F_bounds_random():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        m = int(rng.integers(1, 20))
        sp = SplineFamily(rng.uniform(0.1, 4), rng.uniform(0.05, 3))
        s = rng.standard_normal(m) * rng.uniform(0.01, 5)
        assert m - F(sp, s) <= s @ s / ((1 + sp.gamma) * sp.sigma**2) + 1e-12
        assert F(sp, s) >= F_lower_bound(sp, s) - 1e-12
        assert np.linalg.norm(grad_F(sp, s)) <= gradient_norm_bound(sp, m) + 1e-12


def test_grad_F_zero_and_fd():
    assert not np.any(grad_F(UNIT, np.zeros(4)))
    rng = np.random.default_rng(3)
    sp = SplineFamily(0.7, 0.4)
    h = 1e-7
    for _ in range(100):
        s = rng.uniform(-0.6, 0.6, size=5)
        g = grad_F(sp, s)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            fd = (F(sp, s + e) - F(sp, s - e)) / (2 * h)
            assert abs(fd - g[i]) <= 1e-6 * max(abs(g[i]), 1e-2)


def test_clipped_l0():
    s = np.array([3, 0.1, -0.5])
    assert clipped_l0(ClippedNormSpec(0.5), s) == 1
    assert clipped_l0(ClippedNormSpec(0.0), s) == 3
    assert clipped_l0(ClippedNormSpec(0.5), np.zeros(3)) == 0


def test_spline_validation():
    with pytest.raises(ValueError):
        SplineFamily(0.0, 1.0)
    with pytest.raises(ValueError):
        SplineFamily(1.0, -1.0)
    with pytest.raises(ValueError):
        ClippedNormSpec(-1.0)


def test_projected_hessian_check():
    rng = np.random.default_rng(4)
    d, _ = orthonormalize(rng.standard_normal((6, 12)))
    x = rng.standard_normal(6)
    s = min_norm_solution(d, x)
    sp = SplineFamily(1.0, 2 * np.max(np.abs(s)))
    assert projected_hessian_check(sp, d, s, 3)
    with pytest.raises(PreconditionViolated):
        projected_hessian_check(SplineFamily(1.0, 1e-6), d, s, 3)
