"""Ground truth by exhaustive search: the sparsest exact representation and URP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import subsets
from .dictionary import Dictionary
from .errors import NoSparseSolution
from .subsets import ENUMERATION_CAP

FIT_TOL = 1e-8
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    support: tuple[int, ...]
    coefficients: np.ndarray
    residual: float
    k_found: int
    unique: bool
    fitting_supports: int = 1

    def vector(self, m: int) -> np.ndarray:
        s = np.zeros(m)
        s[list(self.support)] = self.coefficients
        return s

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "coefficients": [float(v) for v in self.coefficients],
            "residual": self.residual,
            "k_found": self.k_found,
            "unique": self.unique,
            "fitting_supports": self.fitting_supports,
        }


def _support_residuals(cols: np.ndarray, idx: np.ndarray, x: np.ndarray, rank_tol: float):
    """Least-squares residuals of ``x`` on each support in ``idx`` (QR based)."""
    Ab = cols[idx].transpose(0, 2, 1)  # (c, n, k)
    Q, R = np.linalg.qr(Ab)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    full = np.all(diag > rank_tol, axis=1)
    proj = np.einsum("cnk,n->ck", Q, x)
    res = np.linalg.norm(x[None, :] - np.einsum("cnk,ck->cn", Q, proj), axis=1)
    # rank-deficient supports: Householder Q may span extra directions
    for i in np.flatnonzero(~full):
        coef, *_ = np.linalg.lstsq(Ab[i], x, rcond=None)
        res[i] = np.linalg.norm(Ab[i] @ coef - x)
    return res


def l0_brute_force(
    d: Dictionary,
    x,
    k_max: int,
    fit_tol: float = FIT_TOL,
    enumeration_cap: int = ENUMERATION_CAP,
) -> OracleResult:
    """Sparsest ``s`` with ``A s = x`` by enumerating supports of increasing size.

    A support fits when its least-squares residual is at most
    ``fit_tol * max(1, ||x||)``.  The whole first fitting size is scanned, so
    ``unique`` reports whether exactly one support of that size fits; among
    several, the lexicographically smallest index set is returned.

    Raises
    ------
    NoSparseSolution
        No support of size ``<= k_max`` fits.
    CapExceeded
        ``sum_{k <= k_max} C(m, k)`` exceeds ``enumeration_cap``.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != d.n:
        raise ValueError(f"x has length {x.shape[0]}, expected {d.n}")
    k_max = min(k_max, d.m)
    subsets.check_cap(sum(subsets.count(d.m, k) for k in range(k_max + 1)), enumeration_cap)
    tol = fit_tol * max(1.0, float(np.linalg.norm(x)))
    if np.linalg.norm(x) <= tol:
        return OracleResult((), np.zeros(0), float(np.linalg.norm(x)), 0, True)
    cols = np.ascontiguousarray(d.A.T)
    rank_tol = RANK_RTOL * d.spectral_norm
    for k in range(1, k_max + 1):
        hits = []
        for _, idx in subsets.colex_chunks(d.m, k):
            res = _support_residuals(cols, idx, x, rank_tol)
            hits.extend((tuple(int(v) for v in idx[i]), float(res[i])) for i in np.flatnonzero(res <= tol))
        if hits:
            support, residual = min(hits)
            coef, *_ = np.linalg.lstsq(d.A[:, list(support)], x, rcond=None)
            return OracleResult(support, coef, residual, k, len(hits) == 1, len(hits))
    raise NoSparseSolution(f"no support of size <= {k_max} fits x within {tol:.3g}")


def urp_check(d: Dictionary, enumeration_cap: int = ENUMERATION_CAP) -> bool:
    """Whether every ``n x n`` column submatrix is invertible (``sigma_min > 1e-10 ||A||``)."""
    total = subsets.count(d.m, d.n)
    subsets.check_cap(total, enumeration_cap)
    cols = np.ascontiguousarray(d.A.T)
    thr = RANK_RTOL * d.spectral_norm
    for _, idx in subsets.colex_chunks(d.m, d.n):
        sv = np.linalg.svd(cols[idx], compute_uv=False)
        if np.any(sv[:, -1] <= thr):
            return False
    return True
