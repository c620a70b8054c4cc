"""Two-loop SL0: graduated ``sigma`` outer loop, fixed-step projected ascent inner loop."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .dictionary import Dictionary, project_nullspace
from .errors import NonFinite, PreconditionViolated
from .objective import F as F_value
from .objective import SplineFamily, grad_F
from .schedule import SL0Schedule

FEAS_RTOL = 1e-9


@dataclass
class SolveTrace:
    """Outcome of :func:`solve`.

    Attributes
    ----------
    s_out : ndarray, shape (m,)
        Final point ``s_{J,L}``.
    F_values : ndarray or None, shape (J, steps + 1)
        ``F_{shape, sigma_j}`` at every inner iterate (column 0 is the level
        start).  Entries after an early level exit are NaN.
    per_j_F : ndarray, shape (J,)
        ``F_{shape, sigma_j}`` at the end of each level.
    residuals : ndarray, shape (J,)
        ``||A s - x||`` at the end of each level.
    iterates : ndarray or None, shape (J, steps + 1, m)
        Every inner iterate, when requested.
    iterate_residuals : ndarray or None, shape (J, steps + 1)
    iterations : int
        Number of ascent updates performed.
    """

    s_out: np.ndarray
    schedule: SL0Schedule
    per_j_F: np.ndarray
    residuals: np.ndarray
    F_values: np.ndarray | None
    iterates: np.ndarray | None
    iterate_residuals: np.ndarray | None
    iterations: int
    wall_time: float

    @property
    def residual(self) -> float:
        return float(self.residuals[-1])

    @property
    def F_final(self) -> float:
        return float(self.per_j_F[-1])

    def max_residual(self) -> float:
        vals = self.residuals if self.iterate_residuals is None else self.iterate_residuals
        return float(np.nanmax(vals))


def check_schedule(d: Dictionary, sched: SL0Schedule) -> None:
    if sched.m not in (0, d.m) or (sched.n is not None and sched.n != d.n):
        raise ValueError(
            f"schedule built for n={sched.n}, m={sched.m}; dictionary is n={d.n}, m={d.m}"
        )


def solve(
    d: Dictionary,
    x,
    sched: SL0Schedule,
    record_iterates: bool = False,
    record_F: bool = True,
) -> SolveTrace:
    """Run the schedule from the minimum-norm point ``A^T x``.

    Parameters
    ----------
    d : Dictionary
    x : array_like, shape (n,)
    sched : SL0Schedule
    record_iterates : bool
        Keep every inner iterate and its residual (memory ``J * steps * m``).
    record_F : bool
        Keep ``F`` at every inner iterate.

    Raises
    ------
    NonFinite
        If an iterate stops being finite (a mis-derived schedule).
    """
    check_schedule(d, sched)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != d.n:
        raise ValueError(f"x has length {x.shape[0]}, expected {d.n}")
    t0 = time.perf_counter()
    X = np.ascontiguousarray(x.reshape(d.n, 1))
    S = np.ascontiguousarray(d.A.T @ X)
    out = _kernel.run(d.A, X, S, sched, record_F, record_iterates)
    wall = time.perf_counter() - t0
    if out["status"] != _kernel.OK:
        raise NonFinite(f"non-finite iterate at level {out['level'] + 1} of {sched.J}")
    return SolveTrace(
        s_out=S[:, 0].copy(),
        schedule=sched,
        per_j_F=out["F_levels"][:, 0],
        residuals=out["resid_levels"][:, 0],
        F_values=None if out["F_steps"] is None else out["F_steps"][:, :, 0],
        iterates=out["iterates"],
        iterate_residuals=out["resid_steps"],
        iterations=int(out["counts"][0]),
        wall_time=wall,
    )


@dataclass
class ContractionReport:
    """Observed behaviour of one inner loop run to convergence.

    ``ratios[i] = ||s_{i+1} - s_opt|| / ||s_i - s_opt||`` (NaN once the
    distance is within the additive slack).  A contraction violation is a step with
    ``||s_{i+1} - s_opt|| > CR' ||s_i - s_opt|| + 1e-10``; an ascent violation
    is ``F(s_{i+1}) < F(s_i) - 1e-12``.
    """

    CR_prime: float
    ratios: np.ndarray
    contraction_violations: int
    ascent_violations: int
    steps: int
    converged: bool

    @property
    def max_ratio(self) -> float:
        r = self.ratios[np.isfinite(self.ratios)]
        return float(r.max()) if r.size else 0.0

    @property
    def passed(self) -> bool:
        return self.converged and self.contraction_violations == 0 and self.ascent_violations == 0


def inner_loop_contraction_check(
    d: Dictionary,
    sched: SL0Schedule,
    sigma_index: int,
    s_start,
    step_tol: float = 1e-14,
    max_steps: int = 100_000,
    contraction_slack: float = 1e-10,
    ascent_slack: float = 1e-12,
) -> ContractionReport:
    """Compare the inner loop at ``sigma_j`` against its guaranteed contraction ``CR'``.

    The loop is iterated from ``s_start`` until an update moves the point by
    less than ``step_tol * max(1, ||s||)``; the limit is taken as ``s_opt``.

    Raises
    ------
    PreconditionViolated
        When ``F(s_start) < m - n0/(2+2 gamma)`` or the schedule carries no
        ``CR'``.
    """
    if sched.CR_prime is None or sched.n0 is None or sched.gamma is None:
        raise PreconditionViolated("schedule has no contraction constants (heuristic mode)")
    check_schedule(d, sched)
    sp = SplineFamily(sched.shape, float(sched.sigma[sigma_index]))
    s = np.array(s_start, dtype=np.float64)
    floor = d.m - sched.n0 / (2.0 + 2.0 * sched.gamma)
    F0 = F_value(sp, s)
    if F0 < floor:
        raise PreconditionViolated(f"F(s_start)={F0:.6g} is below m - n0/(2+2 gamma)={floor:.6g}")
    step = sched.mu * sp.sigma**2
    path = [s.copy()]
    Fs = [F0]
    converged = False
    for _ in range(max_steps):
        upd = step * project_nullspace(d, grad_F(sp, s))
        s = s + upd
        path.append(s.copy())
        Fs.append(F_value(sp, s))
        if not np.all(np.isfinite(s)):
            break
        if np.linalg.norm(upd) < step_tol * max(1.0, np.linalg.norm(s)):
            converged = True
            break
    s_opt = path[-1]
    dist = np.array([np.linalg.norm(p - s_opt) for p in path])
    with np.errstate(divide="ignore", invalid="ignore"):
        # below the additive slack a ratio only measures rounding noise
        ratios = np.where(dist[:-1] > contraction_slack, dist[1:] / dist[:-1], np.nan)
    contraction = int(np.count_nonzero(dist[1:] > sched.CR_prime * dist[:-1] + contraction_slack))
    Fs = np.array(Fs)
    ascent = int(np.count_nonzero(np.diff(Fs) < -ascent_slack))
    return ContractionReport(
        sched.CR_prime, ratios, contraction, ascent, len(path) - 1, converged
    )


def feasibility_tolerance(x) -> float:
    return FEAS_RTOL * max(1.0, float(np.linalg.norm(x)))


def theorem_floor(sched: SL0Schedule) -> float:
    """``m - k''``, the level-end value of ``F`` the guarantee maintains."""
    return sched.m - sched.k_double_prime


def warm_up() -> None:
    """Compile the kernel once (cached on disk afterwards)."""
    A = np.array([[1.0, 0.0]])
    from .schedule import derive_schedule_heuristic

    sched = derive_schedule_heuristic(1.0, 0.5, 1, 1.0, 0.4)
    S = np.zeros((2, 1))
    _kernel.run(A, A.T, np.zeros((1, 1)), S, sched, True, True)


__all__ = [
    "SolveTrace",
    "ContractionReport",
    "solve",
    "inner_loop_contraction_check",
    "feasibility_tolerance",
    "theorem_floor",
]
