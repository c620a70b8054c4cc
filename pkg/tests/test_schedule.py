import math

import numpy as np
import pytest

from sl0.constants import rho
from sl0.dictionary import orthonormalize
from sl0.errors import DeltaTooSmall, DegenerateInput, InvalidKPrime, SparsityTooHigh
from sl0.schedule import (
    derive_schedule_gaussian,
    derive_schedule_heuristic,
    derive_schedule_known_gamma,
    derive_schedule_noisy_theorem4,
    gaussian_schedule_from_sizes,
)


@pytest.fixture
def d16():
    d, _ = orthonormalize(np.random.default_rng(0).standard_normal((8, 16)))
    return d


@pytest.fixture
def x2():
    x = np.zeros(8)
    x[0] = 2.0  # ||A^T x|| = 2 for orthonormal rows
    return x


def test_known_gamma_worked_example(d16, x2):
    s = derive_schedule_known_gamma(d16, 6, 0.5, 1, 1e-3, 0.0, x2)
    assert s.Delta == pytest.approx(1 / 64)
    assert s.k_prime == pytest.approx(1.25)
    assert s.k_double_prime == pytest.approx(1.5)
    assert s.gamma_prime == pytest.approx(5 / 7)
    assert s.lambda_max_prime == pytest.approx(4 / 3)
    assert s.lambda_min_prime == pytest.approx(7 / 30)
    assert s.mu == pytest.approx(60 / 47)
    assert s.CR_prime == pytest.approx(33 / 47)
    assert s.L == 16 and s.steps == 15
    assert s.sigma1 == pytest.approx(2 / math.sqrt(1.75))
    assert s.guaranteed and s.shape == pytest.approx(5 / 7)
    assert np.all(np.diff(s.sigma) < 0)
    with pytest.raises(ValueError):
        s.sigma[0] = 1.0


def test_known_gamma_refusals(d16, x2):
    with pytest.raises(SparsityTooHigh):
        derive_schedule_known_gamma(d16, 6, 0.5, 2, 1e-3, 0.0, x2)
    with pytest.raises(SparsityTooHigh):
        derive_schedule_known_gamma(d16, 6, math.inf, 1, 1e-3, 0.0, x2)
    with pytest.raises(DeltaTooSmall):
        derive_schedule_known_gamma(d16, 6, 0.5, 1, -1e-3, 0.0, x2)
    with pytest.raises(DeltaTooSmall):
        derive_schedule_known_gamma(d16, 6, 0.5, 1, 1e-6, 1e-3, x2)


def test_gaussian_sigma1_and_refusals():
    s = gaussian_schedule_from_sizes(50_000, 100_000, 1e-5, 0.0, 1.0, delta=1e-3)
    assert s.sigma1 == pytest.approx((1 + math.sqrt(0.5)) ** 2)
    with pytest.raises(DeltaTooSmall):
        gaussian_schedule_from_sizes(50_000, 100_000, 1e-5, 0.0, 1.0)
    with pytest.raises(SparsityTooHigh):
        gaussian_schedule_from_sizes(50_000, 100_000, rho(0.5)[0], 0.0, 1.0, delta=1e-3)
    with pytest.raises(ValueError):
        gaussian_schedule_from_sizes(10, 10, 1e-5, 0.0, 1.0, delta=1e-3)


def test_gaussian_refuses_small_systems(d16):
    with pytest.raises(SparsityTooHigh):
        derive_schedule_gaussian(d16, 1e-5, 0.0, delta=1e-3)


def test_noisy_schedule(d16):
    s = derive_schedule_noisy_theorem4(d16, 6, 0.5, 1, 1.5, 1e-3, 2.0)
    assert s.c == pytest.approx(32 / 32.5)
    thr = 2 * math.sqrt(16) * d16.spectral_norm * 1e-3 / (1.5 * 0.5)
    assert s.sigma[-1] >= thr > s.sigma[-1] * s.c
    assert s.mu == pytest.approx(0.75)
    mid = derive_schedule_noisy_theorem4(d16, 6, 0.5, 1, None, 1e-3, 2.0)
    assert mid.k_prime == pytest.approx(1.5)
    with pytest.raises(InvalidKPrime):
        derive_schedule_noisy_theorem4(d16, 6, 0.5, 1, 1.0, 1e-3, 2.0)
    with pytest.raises(DeltaTooSmall):
        derive_schedule_noisy_theorem4(d16, 6, 0.5, 1, 1.5, 0.0, 2.0)
    with pytest.raises(DegenerateInput):
        derive_schedule_noisy_theorem4(d16, 6, 0.5, 1, 1.5, 1e-3, 1e-6)


def test_heuristic_schedule():
    s = derive_schedule_heuristic(1.0, c=0.5, sigma_min=0.1)
    np.testing.assert_allclose(s.sigma, [1, 0.5, 0.25, 0.125, 0.0625])
    assert s.J == 5 and not s.guaranteed
    d = derive_schedule_heuristic(4.0)
    assert d.sigma[-1] <= 4e-3 < d.sigma[-2]
    with pytest.raises(ValueError):
        derive_schedule_heuristic(1.0, c=1.0)
    with pytest.raises(ValueError):
        derive_schedule_heuristic(0.0)


def test_schedule_serializes(d16, x2):
    s = derive_schedule_known_gamma(d16, 6, 0.5, 1, 1e-3, 0.0, x2)
    out = s.to_dict()
    assert out["mode"] == "guaranteed" and len(out["sigma"]) == s.J
    assert "sigma" not in s.summary() and s.summary()["J"] == s.J
