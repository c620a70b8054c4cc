"""Quadratic-spline surrogate of the l0 "norm".

``f(s) = f_gamma(s / sigma)`` with the unit-scale spline

    1 - t^2 / (1 + gamma)            |t| <= 1
    (|t| - 1 - gamma)^2 / (gamma^2 + gamma)   1 <= |t| <= 1 + gamma
    0                                |t| >= 1 + gamma

``F(s) = sum_i f(s_i)`` approximates the number of zero entries of ``s``.
All element-wise functions accept scalars or arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import BASIS_CAP, Dictionary, nullspace_basis
from .errors import PreconditionViolated


@dataclass(frozen=True)
class SplineFamily:
    gamma: float
    sigma: float

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")

    def with_sigma(self, sigma: float) -> "SplineFamily":
        return SplineFamily(self.gamma, sigma)

    @property
    def support(self) -> float:
        """Half-width of the support, ``(1 + gamma) * sigma``."""
        return (1.0 + self.gamma) * self.sigma


@dataclass(frozen=True)
class ClippedNormSpec:
    threshold: float

    def __post_init__(self):
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


def _out(v, like):
    return float(v) if np.ndim(like) == 0 else v


def f(sp: SplineFamily, s):
    s_arr = np.asarray(s, dtype=np.float64)
    g = sp.gamma
    t = np.abs(s_arr / sp.sigma)
    out = np.where(
        t <= 1.0,
        1.0 - t * t / (1.0 + g),
        np.where(t < 1.0 + g, (t - 1.0 - g) ** 2 / (g * g + g), 0.0),
    )
    return _out(out, s)


def f_prime(sp: SplineFamily, s):
    s_arr = np.asarray(s, dtype=np.float64)
    g = sp.gamma
    t = s_arr / sp.sigma
    a = np.abs(t)
    shoulder = 2.0 * t / (g * g + g) - 2.0 * np.sign(t) / g
    out = np.where(a <= 1.0, -2.0 * t / (1.0 + g), np.where(a < 1.0 + g, shoulder, 0.0))
    return _out(out / sp.sigma, s)


def f_second(sp: SplineFamily, s):
    """Piecewise-constant curvature; at ``|s| = sigma`` the inner value is
    returned, at ``|s| = (1 + gamma) sigma`` the shoulder value."""
    s_arr = np.asarray(s, dtype=np.float64)
    g = sp.gamma
    a = np.abs(s_arr / sp.sigma)
    out = np.where(
        a <= 1.0, -2.0 / (1.0 + g), np.where(a <= 1.0 + g, 2.0 / (g * g + g), 0.0)
    )
    return _out(out / sp.sigma**2, s)


def F(sp: SplineFamily, s) -> float:
    # np.sum uses pairwise summation on contiguous input
    return float(np.sum(f(sp, np.ravel(np.asarray(s, dtype=np.float64)))))


def F_columns(sp: SplineFamily, S) -> np.ndarray:
    """``F`` of each column of an ``m x T`` matrix."""
    return np.sum(f(sp, np.asarray(S, dtype=np.float64)), axis=0)


def grad_F(sp: SplineFamily, s) -> np.ndarray:
    return np.asarray(f_prime(sp, np.asarray(s, dtype=np.float64)))


def hessian_diag(sp: SplineFamily, s) -> np.ndarray:
    return np.asarray(f_second(sp, np.asarray(s, dtype=np.float64)))


def gradient_norm_bound(sp: SplineFamily, m: int) -> float:
    """Upper bound ``2 sqrt(m) / ((1 + gamma) sigma)`` on ``||grad F||``.

    Also the Lipschitz constant of ``F``.
    """
    return 2.0 * np.sqrt(m) / ((1.0 + sp.gamma) * sp.sigma)


def F_lower_bound(sp: SplineFamily, s) -> float:
    s = np.asarray(s, dtype=np.float64)
    return s.size - float(s @ s) / ((1.0 + sp.gamma) * sp.sigma**2)


def clipped_l0(spec: ClippedNormSpec, s) -> int:
    """Number of entries with magnitude strictly above the threshold."""
    return int(np.count_nonzero(np.abs(np.asarray(s)) > spec.threshold))


def projected_hessian(sp: SplineFamily, d: Dictionary, s, basis_cap: int = BASIS_CAP):
    """``D H_F(s) D^T`` with ``D`` an explicit orthonormal null-space basis."""
    D = nullspace_basis(d, basis_cap)
    h = hessian_diag(sp, s)
    return (D * h) @ D.T


def projected_hessian_check(
    sp: SplineFamily,
    d: Dictionary,
    s,
    n0: int,
    gamma_n0: float | None = None,
    tol: float = 1e-9,
    basis_cap: int = BASIS_CAP,
) -> bool:
    """Whether ``D H_F(s) D^T`` is negative semi-definite (largest eigenvalue <= tol).

    Test oracle only.  Refuses points with more than ``n0`` entries above
    ``sigma`` and, when ``gamma_n0`` is given, shapes below it.
    """
    s = np.asarray(s, dtype=np.float64)
    count = clipped_l0(ClippedNormSpec(sp.sigma), s)
    if count > n0:
        raise PreconditionViolated(f"{count} entries exceed sigma, more than n0={n0}")
    if gamma_n0 is not None and sp.gamma < gamma_n0:
        raise PreconditionViolated(f"gamma={sp.gamma} is below gamma(n0)={gamma_n0}")
    H = projected_hessian(sp, d, s, basis_cap)
    if H.size == 0:
        return True
    return bool(np.linalg.eigvalsh(H)[-1] <= tol)
