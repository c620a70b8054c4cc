"""Measurement matrices with orthonormal rows and their projectors.

Every other module touches the measurement matrix only through a
:class:`Dictionary`.  The null-space projector is applied as
``g - A.T @ (A @ g)`` so that the ``(m - n) x m`` completion ``D`` is never
formed except on request (:func:`nullspace_basis`, small ``m`` only).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapExceeded, NotOrthonormalized, RankDeficient

ORTHO_TOL = 1e-10
RANK_RTOL = 1e-10
BASIS_CAP = 64


@dataclass(frozen=True, eq=False)
class Dictionary:
    """An ``n x m`` matrix with orthonormal rows (``A @ A.T == I_n``).

    Attributes
    ----------
    A : ndarray, shape (n, m)
        Row-orthonormal measurement matrix (C-contiguous float64).
    G : ndarray, shape (n, n)
        Transform that produced ``A`` from the raw input (``A = G @ raw``).
    spectral_norm : float
        Largest singular value of ``A``.
    """

    A: np.ndarray
    G: np.ndarray = field(repr=False)
    spectral_norm: float = 1.0

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=np.float64)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        G = np.asarray(self.G, dtype=np.float64)
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        n, m = A.shape
        if not m > n >= 1:
            raise ValueError(f"need m > n >= 1, got n={n}, m={m}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def alpha(self) -> float:
        return self.n / self.m

    @classmethod
    def from_orthonormal(cls, A, tol: float = ORTHO_TOL) -> "Dictionary":
        """Wrap a matrix that already has orthonormal rows (checked)."""
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("matrix must be 2-D")
        err = np.max(np.abs(A @ A.T - np.eye(A.shape[0])))
        if err > tol:
            raise NotOrthonormalized(f"max |A A^T - I| = {err:.3e} > {tol:g}")
        return cls(A, np.eye(A.shape[0]), _spectral_norm(A))

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.A @ self.A.T - np.eye(self.n))))


def _spectral_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2))


def orthonormalize(raw, x_raw=None):
    """Left-multiply ``raw`` by a nonsingular ``G`` so its rows become orthonormal.

    Uses the symmetric choice ``G = (raw raw^T)^(-1/2)`` computed from an SVD,
    which leaves an already-orthonormal matrix unchanged and gives the
    nearest row-orthonormal matrix in general.  The solution set of
    ``raw @ s = x_raw`` equals that of ``A @ s = G @ x_raw``.

    Returns
    -------
    (Dictionary, ndarray or None)
        The dictionary and the transformed measurement (``None`` when
        ``x_raw`` is not given).  ``x_raw`` may be a vector or an ``n x T``
        matrix of measurement columns.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n, m = raw.shape
    if not m > n >= 1:
        raise ValueError(f"need m > n >= 1, got n={n}, m={m}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("matrix contains non-finite entries")

    if np.max(np.abs(raw @ raw.T - np.eye(n))) <= 1e-14:
        G = np.eye(n)
        A = raw.copy()
    else:
        U, sv, Vt = np.linalg.svd(raw, full_matrices=False)
        if sv[-1] < RANK_RTOL * sv[0]:
            raise RankDeficient(
                f"smallest singular value {sv[-1]:.3e} below {RANK_RTOL:g} x {sv[0]:.3e}"
            )
        G = (U / sv) @ U.T
        A = U @ Vt
    d = Dictionary(A, G, _spectral_norm(A))
    if x_raw is None:
        return d, None
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.shape[0] != n:
        raise ValueError(f"measurement has {x_raw.shape[0]} rows, matrix has {n}")
    return d, G @ x_raw


def project_nullspace(d: Dictionary, g) -> np.ndarray:
    """Orthogonal projection onto ``null(A)``: ``g - A^T (A g)``.

    Works column-wise when ``g`` is an ``m x T`` matrix.
    """
    g = np.asarray(g, dtype=np.float64)
    return g - d.A.T @ (d.A @ g)


def project_feasible(d: Dictionary, s, x) -> np.ndarray:
    """Closest point to ``s`` on the affine set ``{s : A s = x}``."""
    s = np.asarray(s, dtype=np.float64)
    return s - d.A.T @ (d.A @ s - np.asarray(x, dtype=np.float64))


def min_norm_solution(d: Dictionary, x) -> np.ndarray:
    return d.A.T @ np.asarray(x, dtype=np.float64)


def nullspace_basis(d: Dictionary, basis_cap: int = BASIS_CAP) -> np.ndarray:
    """Rows form an orthonormal basis of ``null(A)``; shape ``(m - n, m)``."""
    if d.m > basis_cap:
        raise CapExceeded(f"m={d.m} exceeds basis_cap={basis_cap}")
    Q, _ = np.linalg.qr(d.A.T, mode="complete")
    D = Q[:, d.n:].T
    # one re-orthogonalisation pass against A keeps A D^T at rounding level
    D = D - (D @ d.A.T) @ d.A
    D, _ = np.linalg.qr(D.T)
    return np.ascontiguousarray(D.T)


def read_matrix(path) -> np.ndarray:
    """Parse the plain-text matrix format (``"n m"`` header, one row per line)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        n, m = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header says {n} rows, found {len(lines) - 1}")
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        vals = [float(t) for t in ln.split()]
        if len(vals) != m:
            raise ValueError(f"{path}:{i}: expected {m} values, found {len(vals)}")
        rows.append(vals)
    return np.array(rows, dtype=np.float64).reshape(n, m)


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    n, m = M.shape
    out = [f"{n} {m}"]
    out += [" ".join(repr(float(v)) for v in row) for row in M]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
