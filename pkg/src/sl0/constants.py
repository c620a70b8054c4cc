"""Constants that gate convergence.

* ``gamma(n0)``: the largest value of ``||s_I||^2 / ||s_{I^c}||^2`` over null
  vectors ``s`` and supports ``|I| <= n0``, by exact enumeration or through
  singular-value bounds.
* Asymmetric restricted isometry constants of a matrix.
* Gaussian-ensemble asymptotics ``gamma(alpha, beta)``, ``r0``, ``rho(alpha)``
  and the tail bound on extreme singular values.

With ``B`` an orthonormal basis of the null space (``m x (m - n)``) every null
vector is ``B z`` and ``||s||^2 = ||z||^2``.  For a fixed support ``I`` the
ratio becomes ``lambda / (1 - lambda)`` with ``lambda`` the largest eigenvalue
of ``B_I^T B_I``, so each subset costs one small symmetric eigenproblem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import subsets
from .dictionary import BASIS_CAP, Dictionary, nullspace_basis
from .subsets import ENUMERATION_CAP

URP_TOL = 1e-9
SINGULAR_RTOL = 1e-10

METHODS = ("exact-enumeration", "bound-aric", "bound-subset", "gaussian-asymptotic")


@dataclass(frozen=True)
class GammaReport:
    """Value of ``gamma(n0)`` (``math.inf`` flags a URP failure)."""

    n0: int
    value: float
    method: str
    argmax_subset: tuple[int, ...] | None = None
    subsets_checked: int = 0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self) -> dict:
        return {
            "n0": self.n0,
            "value": None if self.infinite else self.value,
            "infinite": self.infinite,
            "method": self.method,
            "argmax_subset": None if self.argmax_subset is None else list(self.argmax_subset),
            "subsets_checked": self.subsets_checked,
        }


@dataclass(frozen=True)
class AricReport:
    k: int
    delta_min: float
    delta_max: float
    worst_min_subset: tuple[int, ...]
    worst_max_subset: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "delta_min": self.delta_min,
            "delta_max": self.delta_max,
            "worst_min_subset": list(self.worst_min_subset),
            "worst_max_subset": list(self.worst_max_subset),
        }


@dataclass(frozen=True)
class EnsembleParams:
    """Gaussian ensemble with ``alpha = n/m`` and ``beta = n0/m``."""

    alpha: float
    beta: float
    r: float = 0.0
    eps_conc: float = 0.0
    r0: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.beta <= self.alpha:
            raise ValueError(f"beta must lie in (0, alpha], got {self.beta}")
        if self.r < 0 or self.eps_conc < 0:
            raise ValueError("r and eps_conc must be nonnegative")
        object.__setattr__(self, "r0", r0(self.alpha, self.beta))


# ---------------------------------------------------------------------------
# exact enumeration


def _reduce_max(parts):
    """Merge ``(value, rank, subset)`` partial maxima; ties keep the lower rank."""
    best = None
    for p in parts:
        if p is None:
            continue
        if best is None or p[0] > best[0] or (p[0] == best[0] and p[1] < best[1]):
            best = p
    return best


def _reduce_min(parts):
    best = None
    for p in parts:
        if p is None:
            continue
        if best is None or p[0] < best[0] or (p[0] == best[0] and p[1] < best[1]):
            best = p
    return best


def _complement(idx: np.ndarray, m: int) -> np.ndarray:
    keep = np.ones((idx.shape[0], m), dtype=bool)
    keep[np.arange(idx.shape[0])[:, None], idx] = False
    return np.nonzero(keep)[1].reshape(idx.shape[0], m - idx.shape[1])


def _null_gap(B: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``1 - sigma_max(B_I)^2`` per subset, computed as ``sigma_min(B_{I^c})^2``.

    ``B`` has orthonormal columns, so the two agree exactly; the complement
    form avoids the cancellation in ``1 - lambda``, which otherwise costs
    ``gamma * eps`` relative accuracy on nearly singular supports.
    """
    return np.linalg.svd(B[_complement(idx, B.shape[0])], compute_uv=False)[:, -1] ** 2


def gamma_exact(
    d: Dictionary,
    n0: int,
    enumeration_cap: int = ENUMERATION_CAP,
    basis_cap: int = BASIS_CAP,
    workers: int = 1,
) -> GammaReport:
    """Exact ``gamma(n0)`` by enumerating every support of size ``n0``.

    Parameters
    ----------
    d : Dictionary
        Row-orthonormal matrix.
    n0 : int
        Support size, ``0 <= n0 <= n``.
    enumeration_cap, basis_cap : int
        Refuse (``CapExceeded``) rather than approximate beyond these sizes.
    workers : int
        Threads splitting the colex rank range; the result does not depend on it.

    Returns
    -------
    GammaReport
        ``value`` is ``math.inf`` when some support carries a null vector
        (``sigma_min(B_{I^c})^2`` at most ``1e-9``).
    """
    if not 0 <= n0 <= d.n:
        raise ValueError(f"n0 must lie in [0, n={d.n}], got {n0}")
    if n0 == 0:
        return GammaReport(0, 0.0, "exact-enumeration", (), 1)
    total = subsets.count(d.m, n0)
    subsets.check_cap(total, enumeration_cap)
    B = nullspace_basis(d, basis_cap).T  # m x (m - n)

    # gamma_I = (1 - gap_I) / gap_I decreases in the gap, so the worst
    # support is the one with the smallest gap
    def scan(a, b):
        best = None
        for first, idx in subsets.colex_chunks(d.m, n0, a, b):
            gap = _null_gap(B, idx)
            i = int(np.argmin(gap))
            best = _reduce_min([best, (float(gap[i]), first + i, tuple(int(v) for v in idx[i]))])
        return best

    gap, _, subset = _reduce_min(subsets.map_ranges(scan, total, workers))
    if gap <= URP_TOL:
        value = math.inf
    else:
        value = float(np.linalg.svd(B[list(subset)], compute_uv=False)[0] ** 2) / gap
    return GammaReport(n0, value, "exact-enumeration", subset, total)


def gamma_generalized_eig(d: Dictionary, n0: int, basis_cap: int = BASIS_CAP) -> float:
    """Independent check of :func:`gamma_exact` for small systems.

    For every ``|I| <= n0`` solves the generalized symmetric eigenproblem
    ``N_I^T N_I z = mu N_{I^c}^T N_{I^c} z`` on the null-space basis ``N``
    (``m x (m - n)``) directly, without the ``lambda / (1 - lambda)`` reduction.
    The pencil is solved through the SVD of ``N_{I^c}`` so that nearly singular
    supports keep full relative accuracy.
    """
    if n0 == 0:
        return 0.0
    N = nullspace_basis(d, basis_cap).T
    best = 0.0
    for k in range(1, n0 + 1):
        for _, idx in subsets.colex_chunks(d.m, k):
            for I in idx:
                mask = np.zeros(d.m, dtype=bool)
                mask[I] = True
                # generalized singular pairs: N_Ic = U diag(s) V^T, c_j = ||N_I v_j||
                _, s, Vt = np.linalg.svd(N[~mask], full_matrices=False)
                if s[-1] ** 2 <= URP_TOL:
                    return math.inf
                c = np.linalg.norm(N[mask] @ Vt.T, axis=0)
                best = max(best, float(np.max(c**2 / s**2)))
                # the pencil form agrees wherever it is well conditioned
                if s[-1] > 1e-3:
                    P, Q = N[mask].T @ N[mask], N[~mask].T @ N[~mask]
                    best = max(best, float(eigh(P, Q, eigvals_only=True)[-1]))
    return best


def _gram_extremes(M: np.ndarray, k: int, enumeration_cap: int, workers: int):
    """Min of smallest and max of largest eigenvalue of ``M_I^T M_I`` over ``|I| = k``."""
    m = M.shape[1]
    total = subsets.count(m, k)
    subsets.check_cap(total, enumeration_cap)
    cols = np.ascontiguousarray(M.T)

    def scan(a, b):
        lo = hi = None
        for first, idx in subsets.colex_chunks(m, k, a, b):
            sv = np.linalg.svd(cols[idx], compute_uv=False)  # (c, min(k, n))
            wmax = sv[:, 0] ** 2
            wmin = sv[:, -1] ** 2 if k <= M.shape[0] else np.zeros(len(idx))
            i, j = int(np.argmin(wmin)), int(np.argmax(wmax))
            lo = _reduce_min([lo, (float(wmin[i]), first + i, tuple(int(v) for v in idx[i]))])
            hi = _reduce_max([hi, (float(wmax[j]), first + j, tuple(int(v) for v in idx[j]))])
        return lo, hi

    parts = subsets.map_ranges(scan, total, workers)
    return _reduce_min([p[0] for p in parts]), _reduce_max([p[1] for p in parts])


def gamma_bound_subset(
    d: Dictionary, n0: int, enumeration_cap: int = ENUMERATION_CAP, workers: int = 1
) -> GammaReport:
    """Upper bound ``||A||^2 / min_{|I|=n0} sigma_min(A_I)^2 - 1`` on ``gamma(n0)``.

    Infinite exactly when some ``n0``-column submatrix is (numerically) singular.
    """
    if not 0 <= n0 <= d.m:
        raise ValueError(f"n0 must lie in [0, m={d.m}], got {n0}")
    norm2 = d.spectral_norm**2
    if n0 == 0:
        return GammaReport(0, max(norm2 - 1.0, 0.0), "bound-subset")
    (lo, _, _), _ = _gram_extremes(d.A, n0, enumeration_cap, workers)
    # Gram eigenvalues of a singular A_I sit at rounding level, far below this
    if lo <= SINGULAR_RTOL * norm2:
        return GammaReport(n0, math.inf, "bound-subset")
    return GammaReport(n0, norm2 / lo - 1.0, "bound-subset")


def aric_exact(
    M, k: int, enumeration_cap: int = ENUMERATION_CAP, workers: int = 1
) -> AricReport:
    """Asymmetric restricted isometry constants of order ``k``.

    ``delta_min = max(0, 1 - min sigma_min(M_I)^2)`` and
    ``delta_max = max(0, max sigma_max(M_I)^2 - 1)`` over ``|I| = k``.
    Accepts a :class:`Dictionary` or a raw ``n x m`` matrix.
    """
    A = M.A if isinstance(M, Dictionary) else np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not 1 <= k <= A.shape[1]:
        raise ValueError(f"k must lie in [1, m={A.shape[1]}], got {k}")
    (lo, _, s_lo), (hi, _, s_hi) = _gram_extremes(A, k, enumeration_cap, workers)
    return AricReport(k, max(0.0, 1.0 - lo), max(0.0, hi - 1.0), s_lo, s_hi)


def gamma_bound_aric(
    d: Dictionary, n0: int, enumeration_cap: int = ENUMERATION_CAP, workers: int = 1
) -> GammaReport:
    """Upper bound ``||A||^2 / (1 - delta_min(n0)) - 1`` on ``gamma(n0)``."""
    if n0 == 0:
        return GammaReport(0, max(d.spectral_norm**2 - 1.0, 0.0), "bound-aric")
    aric = aric_exact(d, n0, enumeration_cap, workers)
    if aric.delta_min >= 1.0 - SINGULAR_RTOL:
        return GammaReport(n0, math.inf, "bound-aric")
    return GammaReport(n0, d.spectral_norm**2 / (1.0 - aric.delta_min) - 1.0, "bound-aric")


def check_sufficient_condition(aric: AricReport, spec_norm: float, k: int, alpha: float) -> bool:
    """Whether ``alpha * delta_min + ||A|| <= alpha`` for the order ``ceil(2 k alpha)``."""
    need = math.ceil(2 * k * alpha)
    if aric.k != need:
        raise ValueError(f"aric must be computed at k'=ceil(2*k*alpha)={need}, got {aric.k}")
    return alpha * aric.delta_min + spec_norm <= alpha


# ---------------------------------------------------------------------------
# Gaussian asymptotics


def r0(alpha: float, beta: float) -> float:
    if not (0 < beta and 0 < alpha):
        raise ValueError("alpha and beta must be positive")
    return math.sqrt(2.0 * (beta / alpha) * math.log(math.e / beta))


def gaussian_gamma(alpha: float, beta: float) -> float:
    """Asymptotic ``gamma(alpha, beta)``; ``math.inf`` when the base is not positive."""
    if not 0 < beta <= alpha <= 1:
        raise ValueError(f"need 0 < beta <= alpha <= 1, got alpha={alpha}, beta={beta}")
    base = 1.0 - math.sqrt(beta / alpha) - r0(alpha, beta)
    if base <= 0:
        return math.inf
    return (1.0 + math.sqrt(1.0 / alpha)) ** 2 / base**2


def _rho_objective(alpha: float, beta: float) -> float:
    g = gaussian_gamma(alpha, beta)
    return 0.0 if math.isinf(g) else beta / (2.0 + 2.0 * g)


def _golden_max(fn, a: float, b: float, tol: float) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def rho(alpha: float, grid: int = 10_000, tol: float = 1e-8) -> tuple[float, float]:
    """``max_beta beta / (2 + 2 gamma(alpha, beta))`` and its argmax.

    A uniform grid of ``grid`` points on ``(0, alpha]`` locates the peak and a
    golden-section search on the neighbouring cells refines it to ``tol``.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    betas = alpha * np.arange(1, grid + 1) / grid
    vals = np.array([_rho_objective(alpha, b) for b in betas])
    i = int(np.argmax(vals))
    lo = betas[i - 1] if i > 0 else betas[0] * 1e-6
    hi = betas[min(i + 1, grid - 1)]
    beta = _golden_max(lambda b: _rho_objective(alpha, b), lo, hi, tol)
    value = _rho_objective(alpha, beta)
    if value < vals[i]:
        beta, value = float(betas[i]), float(vals[i])
    return float(value), float(beta)


def theorem2_probability_bound(p: EnsembleParams, n: int) -> float:
    """Raw ``exp(-n r^2/2 + n r0^2/2) + exp(-n eps^2/2)`` (may exceed one)."""
    return math.exp(-n * p.r**2 / 2.0 + n * p.r0**2 / 2.0) + math.exp(-n * p.eps_conc**2 / 2.0)


def clamp_probability(v: float) -> float:
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class ConcentrationReport:
    l: int
    n: int
    r: float
    trials: int
    rate_max: float
    rate_min: float
    bound: float

    @property
    def standard_error(self) -> float:
        p = self.bound
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    @property
    def passed(self) -> bool:
        lim = self.bound + 3.0 * self.standard_error
        return self.rate_max <= lim and self.rate_min <= lim

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "n": self.n,
            "r": self.r,
            "trials": self.trials,
            "rate_max": self.rate_max,
            "rate_min": self.rate_min,
            "bound": self.bound,
            "standard_error": self.standard_error,
            "passed": self.passed,
        }


CONC_BATCH = 50


def singular_value_concentration_trial(
    l: int, n: int, r: float, trials: int, seed: int, workers: int = 1
) -> ConcentrationReport:
    """Monte Carlo exceedance rates of the extreme singular values of ``l x n``
    matrices with i.i.d. ``N(0, 1/n)`` entries.

    Trials are drawn in fixed batches, each batch with its own stream keyed by
    ``(seed, batch)``, so the result depends only on ``seed``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    upper = 1.0 + math.sqrt(l / n) + r
    lower = 1.0 - math.sqrt(l / n) - r
    nbatch = -(-trials // CONC_BATCH)

    def run(a, b):
        hi = lo = 0
        for bi in range(a, b):
            size = min(CONC_BATCH, trials - bi * CONC_BATCH)
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, bi])))
            G = rng.standard_normal((size, l, n)) / math.sqrt(n)
            sv = np.linalg.svd(G, compute_uv=False)
            hi += int(np.count_nonzero(sv[:, 0] > upper))
            lo += int(np.count_nonzero(sv[:, -1] < lower))
        return hi, lo

    parts = subsets.map_ranges(run, nbatch, workers)
    hi = sum(p[0] for p in parts)
    lo = sum(p[1] for p in parts)
    return ConcentrationReport(
        l, n, r, trials, hi / trials, lo / trials, math.exp(-n * r * r / 2.0)
    )
