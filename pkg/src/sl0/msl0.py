"""Multiple-measurement-vector SL0: one schedule applied to ``T`` columns at once."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .dictionary import Dictionary, orthonormalize
from .errors import NonFinite
from .schedule import SL0Schedule, derive_schedule_heuristic
from .solver import check_schedule, solve


@dataclass
class MultiInstance:
    """Measurements ``X = A S + N`` stacked column-wise (``n x T``)."""

    X: np.ndarray
    S0: np.ndarray | None = None
    eps: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("X must be an n x T matrix with T >= 1")
        self.X = X
        if self.S0 is not None:
            S0 = np.asarray(self.S0, dtype=np.float64)
            if S0.ndim == 1:
                S0 = S0[:, None]
            if S0.shape[1] != X.shape[1]:
                raise ValueError(f"S0 has {S0.shape[1]} columns, X has {X.shape[1]}")
            self.S0 = S0
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def T(self) -> int:
        return self.X.shape[1]


@dataclass
class MultiTrace:
    S_out: np.ndarray
    schedule: SL0Schedule
    per_j_F: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    wall_time: float
    notes: tuple[str, ...] = field(default=())

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals[-1]))


def dominant_column(d: Dictionary, X) -> np.ndarray:
    """Column of ``X`` with the largest ``||A^T x_t||``.

    Deriving a guaranteed schedule from this column gives a ``sigma_1`` that
    is at least every column's own starting value, so one schedule serves all.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        return X
    norms = np.linalg.norm(d.A.T @ X, axis=0)
    return X[:, int(np.argmax(norms))]


def msolve(d: Dictionary, mi: MultiInstance, sched: SL0Schedule) -> MultiTrace:
    """Solve every column of ``mi.X`` with the same schedule in batched updates.

    Column ``t`` of the result matches :func:`sl0.solver.solve` on ``X[:, t]``.
    """
    check_schedule(d, sched)
    if mi.X.shape[0] != d.n:
        raise ValueError(f"X has {mi.X.shape[0]} rows, expected {d.n}")
    t0 = time.perf_counter()
    X = np.ascontiguousarray(mi.X)
    S = np.ascontiguousarray(d.A.T @ X)
    out = _kernel.run(d.A, X, S, sched)
    wall = time.perf_counter() - t0
    if out["status"] != _kernel.OK:
        raise NonFinite(f"non-finite iterate at level {out['level'] + 1} of {sched.J}")
    notes = ("shared schedule: sigma_1 taken from the dominant column",) if mi.T > 1 else ()
    return MultiTrace(
        S_out=S,
        schedule=sched,
        per_j_F=out["F_levels"],
        residuals=out["resid_levels"],
        iterations=out["counts"],
        wall_time=wall,
        notes=notes,
    )


@dataclass(frozen=True)
class ThroughputRow:
    m: int
    T: int
    batched_ms_per_col: float
    columnwise_ms_per_col: float

    @property
    def speedup(self) -> float:
        return self.columnwise_ms_per_col / self.batched_ms_per_col


def throughput_benchmark(
    T_list,
    m_list,
    reps: int = 3,
    alpha: float = 0.5,
    seed: int = 0,
    J: int = 10,
    L: int = 3,
) -> list[ThroughputRow]:
    """Per-column wall time of :func:`msolve` against column-by-column :func:`solve`.

    Uses a Gaussian dictionary per ``m`` and a fixed heuristic schedule with
    ``J`` levels and ``L`` steps, so both paths do identical arithmetic work.
    Each timing is the best of ``reps``.
    """
    rows = []
    for m in m_list:
        n = max(1, int(round(alpha * m)))
        rng = np.random.default_rng([seed, m])
        d, _ = orthonormalize(rng.standard_normal((n, m)))
        sched = derive_schedule_heuristic(1.0, 0.5, L, 2.0, 0.5 ** (J - 1) * 1.0000001)
        for T in T_list:
            X = rng.standard_normal((n, T))
            mi = MultiInstance(X)
            best_b = best_c = np.inf
            for _ in range(reps):
                t0 = time.perf_counter()
                msolve(d, mi, sched)
                best_b = min(best_b, time.perf_counter() - t0)
                t0 = time.perf_counter()
                for t in range(T):
                    solve(d, X[:, t], sched, record_F=False)
                best_c = min(best_c, time.perf_counter() - t0)
            rows.append(ThroughputRow(m, T, 1e3 * best_b / T, 1e3 * best_c / T))
    return rows
