"""Compiled annealing loop shared by the single- and multi-vector solvers.

Both solvers call :func:`anneal` on an ``m x T`` block (``T = 1`` for a single
measurement), so a single column is processed by exactly the same sequence of
floating-point operations in either case.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NON_FINITE = 1

# rows of A per projector block: about 512 KB, so the second product re-reads
# a block that is still in cache instead of streaming A from memory twice
BLOCK_BYTES = 1 << 19


@njit(cache=True)
def _spline_sum(S, sig, g, out):
    m, T = S.shape
    inner = 1.0 / (1.0 + g)
    sh = 1.0 / (g * g + g)
    for t in range(T):
        out[t] = 0.0
    for i in range(m):
        for t in range(T):
            a = abs(S[i, t]) / sig
            if a <= 1.0:
                out[t] += 1.0 - a * a * inner
            elif a < 1.0 + g:
                b = a - 1.0 - g
                out[t] += b * b * sh


@njit(cache=True)
def _residual_norms(A, S, X, out):
    R = A @ S - X
    n, T = R.shape
    for t in range(T):
        acc = 0.0
        for i in range(n):
            acc += R[i, t] * R[i, t]
        out[t] = np.sqrt(acc)


@njit(cache=True)
def _project(A, G, rows, P):
    """``P = G - A^T (A G)``, streaming ``A`` in blocks of ``rows`` rows."""
    n = A.shape[0]
    P[:, :] = G
    for i0 in range(0, n, rows):
        Ab = A[i0:min(n, i0 + rows)]
        P -= Ab.T @ (Ab @ G)


@njit(cache=True, nogil=True)
def anneal(
    A, X, S, sigmas, steps, mu, g, tol,
    F_levels, resid_levels, counts,
    record_steps, F_steps, record_iterates, iterates, resid_steps,
):
    """Run every level of the schedule in place on ``S`` (``m x T``).

    The update is ``S += mu sigma^2 (I - A^T A) grad F``; with the
    unit-scale derivative ``phi'`` this is ``mu sigma (P phi'(S / sigma))``.
    Returns ``(status, level)`` where ``status`` is ``NON_FINITE`` when a
    non-finite entry appeared at the end of ``level``.
    """
    m, T = S.shape
    J = sigmas.shape[0]
    inner = 2.0 / (1.0 + g)
    sh = 2.0 / (g * g + g)
    edge = 2.0 / g
    G = np.empty((m, T))
    P = np.empty((m, T))
    rows = max(8, BLOCK_BYTES // (8 * m))
    active = np.empty(T, dtype=np.bool_)
    Fbuf = np.empty(T)
    Rbuf = np.empty(T)
    for j in range(J):
        sig = sigmas[j]
        step = mu * sig
        for t in range(T):
            active[t] = True
        if record_steps:
            _spline_sum(S, sig, g, Fbuf)
            for t in range(T):
                F_steps[j, 0, t] = Fbuf[t]
        if record_iterates:
            for i in range(m):
                iterates[j, 0, i] = S[i, 0]
            _residual_norms(A, S, X, Rbuf)
            resid_steps[j, 0] = Rbuf[0]
        for l in range(steps):
            for i in range(m):
                for t in range(T):
                    v = S[i, t] / sig
                    a = abs(v)
                    if a <= 1.0:
                        G[i, t] = -inner * v
                    elif a < 1.0 + g:
                        G[i, t] = sh * v - edge * np.sign(v)
                    else:
                        G[i, t] = 0.0
            _project(A, G, rows, P)
            n_active = 0
            for t in range(T):
                if not active[t]:
                    continue
                moved = 0.0
                for i in range(m):
                    dv = step * P[i, t]
                    S[i, t] += dv
                    moved += dv * dv
                counts[t] += 1
                if tol > 0.0 and np.sqrt(moved) <= tol * sig:
                    active[t] = False
                else:
                    n_active += 1
            if record_steps:
                _spline_sum(S, sig, g, Fbuf)
                for t in range(T):
                    F_steps[j, l + 1, t] = Fbuf[t]
            if record_iterates:
                for i in range(m):
                    iterates[j, l + 1, i] = S[i, 0]
                _residual_norms(A, S, X, Rbuf)
                resid_steps[j, l + 1] = Rbuf[0]
            if n_active == 0:
                if record_steps:
                    for ll in range(l + 2, steps + 1):
                        for t in range(T):
                            F_steps[j, ll, t] = np.nan
                if record_iterates:
                    for ll in range(l + 2, steps + 1):
                        for i in range(m):
                            iterates[j, ll, i] = np.nan
                        resid_steps[j, ll] = np.nan
                break
        _spline_sum(S, sig, g, Fbuf)
        _residual_norms(A, S, X, Rbuf)
        for t in range(T):
            F_levels[j, t] = Fbuf[t]
            resid_levels[j, t] = Rbuf[t]
            if not np.isfinite(Fbuf[t]) or not np.isfinite(Rbuf[t]):
                return NON_FINITE, j
    return OK, J


def run(A, X, S, sched, record_steps=False, record_iterates=False):
    """Allocate trace buffers and call :func:`anneal`."""
    m, T = S.shape
    J, steps = sched.J, sched.steps
    F_levels = np.full((J, T), np.nan)
    resid_levels = np.full((J, T), np.nan)
    counts = np.zeros(T, dtype=np.int64)
    F_steps = np.full((J, steps + 1, T) if record_steps else (1, 1, 1), np.nan)
    iterates = np.full((J, steps + 1, m) if record_iterates else (1, 1, 1), np.nan)
    resid_steps = np.full((J, steps + 1) if record_iterates else (1, 1), np.nan)
    status, level = anneal(
        A, X, S, np.ascontiguousarray(sched.sigma), steps, float(sched.mu),
        float(sched.shape), float(sched.inner_tol), F_levels, resid_levels, counts,
        record_steps, F_steps, record_iterates, iterates, resid_steps,
    )
    return dict(
        status=status, level=level, F_levels=F_levels, resid_levels=resid_levels,
        counts=counts, F_steps=F_steps if record_steps else None,
        iterates=iterates if record_iterates else None,
        resid_steps=resid_steps if record_iterates else None,
    )
