import numpy as np
import pytest

from sl0.dictionary import Dictionary, orthonormalize
from sl0.errors import CapExceeded, NoSparseSolution
from sl0.harness.instances import plant
from sl0.oracle import l0_brute_force, urp_check


def test_single_column(small_dict):
    res = l0_brute_force(small_dict, 3 * small_dict.A[:, 2], 3)
    assert res.support == (2,) and res.k_found == 1 and res.unique
    assert res.coefficients[0] == pytest.approx(3)


def test_zero_measurement(small_dict):
    res = l0_brute_force(small_dict, np.zeros(4), 3)
    assert res.support == () and res.k_found == 0


def test_planted_support():
    rng = np.random.default_rng(8)
    d, _ = orthonormalize(rng.standard_normal((6, 12)))
    for _ in range(10):
        s0 = plant(rng, 12, 2)
        res = l0_brute_force(d, d.A @ s0, 3)
        assert res.support == tuple(np.flatnonzero(s0))
        np.testing.assert_allclose(res.vector(12), s0, atol=1e-10)


def test_refusals(small_dict):
    x = np.random.default_rng(0).standard_normal(4)
    with pytest.raises(NoSparseSolution):
        l0_brute_force(small_dict, x, 2)
    d, _ = orthonormalize(np.random.default_rng(0).standard_normal((10, 40)))
    with pytest.raises(CapExceeded):
        l0_brute_force(d, np.ones(10), 8, enumeration_cap=1000)


def test_urp():
    rng = np.random.default_rng(1)
    d, _ = orthonormalize(rng.standard_normal((4, 8)))
    assert urp_check(d)
    raw = rng.standard_normal((4, 8))
    raw[:, 3] = raw[:, 5]
    assert not urp_check(orthonormalize(raw)[0])
    assert urp_check(Dictionary.from_orthonormal(np.array([[0.6, 0.8]])))
    assert not urp_check(Dictionary.from_orthonormal(np.array([[1.0, 0.0]])))
