import math

import numpy as np
import pytest

from sl0.dictionary import (
    Dictionary,
    min_norm_solution,
    nullspace_basis,
    orthonormalize,
    project_feasible,
    project_nullspace,
    read_matrix,
    write_matrix,
)
from sl0.errors import CapExceeded, NotOrthonormalized, RankDeficient

R2 = 1 / math.sqrt(2)


def test_orthonormalize_row_rescaling():
    d, x = orthonormalize(np.array([[2.0, 0, 0], [0, 2.0, 0]]), np.array([2.0, 4.0]))
    np.testing.assert_allclose(d.A, [[1, 0, 0], [0, 1, 0]], atol=1e-15)
    np.testing.assert_allclose(x, [1, 2])


def test_orthonormalize_fixed_point():
    raw = np.array([[R2, R2, 0.0], [0.0, 0.0, 1.0]])
    d, x = orthonormalize(raw, np.array([1.0, 2.0]))
    np.testing.assert_allclose(d.A, raw, atol=1e-15)
    np.testing.assert_allclose(d.G, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(x, [1, 2], atol=1e-15)


def test_orthonormalize_random_preserves_solutions(rng):
    raw = rng.standard_normal((4, 8))
    x_raw = rng.standard_normal(4)
    d, x = orthonormalize(raw, x_raw)
    assert d.orthonormality_error() <= 1e-10
    base = np.linalg.lstsq(raw, x_raw, rcond=None)[0]
    N = nullspace_basis(d)
    for _ in range(100):
        s = base + N.T @ rng.standard_normal(4)
        assert np.linalg.norm(d.A @ s - x) <= 1e-9


def test_orthonormalize_rank_deficient():
    with pytest.raises(RankDeficient):
        orthonormalize(np.array([[1.0, 2, 3], [2.0, 4, 6]]))


def test_dictionary_requires_wide_matrix():
    with pytest.raises(ValueError):
        Dictionary(np.eye(3), np.eye(3))


def test_from_orthonormal_checks():
    Dictionary.from_orthonormal(np.array([[R2, R2]]))
    with pytest.raises(NotOrthonormalized):
        Dictionary.from_orthonormal(np.array([[1.0, 1.0]]))


def test_project_nullspace():
    d = Dictionary.from_orthonormal(np.array([[R2, R2]]))
    np.testing.assert_allclose(project_nullspace(d, [1.0, 0.0]), [0.5, -0.5])
    np.testing.assert_allclose(project_nullspace(d, d.A.T @ [3.0]), 0, atol=1e-15)
    z = np.array([1.0, -1.0])
    np.testing.assert_allclose(project_nullspace(d, z), z)


def test_project_feasible(small_dict, rng):
    d = small_dict
    x = rng.standard_normal(4)
    np.testing.assert_allclose(project_feasible(d, np.zeros(8), x), min_norm_solution(d, x))
    s = project_feasible(d, rng.standard_normal(8), x)
    assert np.linalg.norm(d.A @ s - x) <= 1e-12 * max(1, np.linalg.norm(x))
    np.testing.assert_allclose(project_feasible(d, s, x), s, atol=1e-14)


def test_nullspace_basis():
    d = Dictionary.from_orthonormal(np.array([[R2, R2]]))
    D = nullspace_basis(d)
    assert D.shape == (1, 2)
    np.testing.assert_allclose(np.abs(D), [[R2, R2]])
    assert D[0, 0] * D[0, 1] < 0
    d6, _ = orthonormalize(np.random.default_rng(0).standard_normal((6, 12)))
    D6 = nullspace_basis(d6)
    assert D6.shape == (6, 12)
    assert np.max(np.abs(d6.A @ D6.T)) <= 1e-10
    with pytest.raises(CapExceeded):
        nullspace_basis(d6, basis_cap=10)


def test_matrix_roundtrip(tmp_path, rng):
    M = rng.standard_normal((3, 5))
    p = tmp_path / "m.txt"
    write_matrix(p, M)
    np.testing.assert_array_equal(read_matrix(p), M)
