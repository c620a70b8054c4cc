"""Property checks behind the acceptance tests and ``sl0 verify``.

Every check takes its sizes as arguments (so ``verify --level quick`` can run
scaled-down versions) and returns a :class:`CheckResult` instead of raising.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..constants import (
    gamma_bound_aric,
    gamma_bound_subset,
    gamma_exact,
    gamma_generalized_eig,
    rho,
    singular_value_concentration_trial,
)
from ..dictionary import orthonormalize, project_nullspace
from ..errors import SparsityTooHigh
from ..msl0 import MultiInstance, dominant_column, msolve
from ..objective import (
    F,
    F_lower_bound,
    SplineFamily,
    gradient_norm_bound,
    grad_F,
    projected_hessian,
    projected_hessian_check,
)
from ..oracle import l0_brute_force
from ..schedule import (
    _fig2_core,
    derive_schedule_heuristic,
    derive_schedule_known_gamma,
    derive_schedule_noisy_theorem4,
    heuristic_sigma1,
)
from ..solver import feasibility_tolerance, inner_loop_contraction_check, solve
from .experiments import QualifiedSystem, qualifying_systems, recover, scaling_study
from .instances import generate, plant, sphere_noise, stream

# recovery rate of the heuristic defaults on the 500 seeded trials of
# check_oracle_agreement (seed 0), measured once and pinned; later runs may
# not fall more than two points below it
ORACLE_AGREEMENT_PINNED = 0.938
ORACLE_AGREEMENT_FLOOR = 0.90


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.summary} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "summary": self.summary,
                "details": self.details, "seconds": self.seconds}


def _timed(name):
    def wrap(fn):
        def inner(*a, **kw):
            t0 = time.perf_counter()
            res = fn(*a, **kw)
            res.name = name
            res.seconds = time.perf_counter() - t0
            return res
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


# ---------------------------------------------------------------------------
# guaranteed-mode checks on qualifying systems


def _planted(sys_: QualifiedSystem, seed: int, idx: int, trial: int, eps: float = 0.0):
    rng = stream(seed, 11, idx, trial)
    s0 = plant(rng, sys_.d.m, sys_.k)
    x = sys_.d.A @ s0 + sphere_noise(rng, sys_.d.n, eps)
    return s0, x


@_timed("guaranteed recovery")
def check_guaranteed_recovery(
    systems: list[QualifiedSystem], trials: int = 100, delta: float = 1e-6, seed: int = 0,
    confirm_with_oracle: bool = True,
) -> CheckResult:
    """Planted ``k``-sparse vectors recovered within ``delta`` on every trial."""
    worst_err = worst_resid = 0.0
    failures = floor_violations = oracle_mismatch = 0
    total = 0
    for i, sy in enumerate(systems):
        for t in range(trials):
            s0, x = _planted(sy, seed, i, t)
            if confirm_with_oracle:
                orc = l0_brute_force(sy.d, x, sy.k)
                if not (orc.unique and set(orc.support) == set(np.flatnonzero(s0))):
                    oracle_mismatch += 1
            sched = derive_schedule_known_gamma(sy.d, sy.n0, sy.gamma, sy.k, delta, 0.0, x)
            tr = solve(sy.d, x, sched, record_F=False)
            err = float(np.linalg.norm(tr.s_out - s0))
            worst_err = max(worst_err, err)
            worst_resid = max(worst_resid, tr.max_residual() / feasibility_tolerance(x))
            failures += err > delta
            floor_violations += int(np.count_nonzero(tr.per_j_F < sched.m - sched.k_double_prime))
            total += 1
    ok = failures == 0 and oracle_mismatch == 0 and worst_resid <= 1.0
    return CheckResult(
        "", ok,
        f"{total - failures}/{total} within delta={delta:g}, worst error {worst_err:.2e}",
        dict(trials=total, failures=failures, worst_error=worst_err,
             worst_residual_over_tol=worst_resid, level_floor_violations=floor_violations,
             oracle_mismatch=oracle_mismatch,
             systems=[dict(label=s.label, n0=s.n0, gamma=s.gamma, margin=s.margin) for s in systems]),
    )


@_timed("noisy error bound")
def check_noisy_bound(
    systems: list[QualifiedSystem], eps_list=(1e-4, 1e-3), trials: int = 100, seed: int = 0
) -> CheckResult:
    """``||s_J - s0|| <= C eps`` with the noisy schedule and noise on the eps-sphere."""
    failures = total = 0
    worst = 0.0
    for i, sy in enumerate(systems):
        for eps in eps_list:
            for t in range(trials):
                s0, x = _planted(sy, seed + 1, i, t, eps)
                sched = derive_schedule_noisy_theorem4(
                    sy.d, sy.n0, sy.gamma, sy.k, None, eps, float(np.linalg.norm(sy.d.A.T @ x))
                )
                tr = solve(sy.d, x, sched, record_F=False)
                ratio = float(np.linalg.norm(tr.s_out - s0)) / (sched.C * eps)
                worst = max(worst, ratio)
                failures += ratio > 1.0
                total += 1
    return CheckResult(
        "", failures == 0,
        f"{total - failures}/{total} within C*eps, worst error/(C*eps) = {worst:.3g}",
        dict(trials=total, failures=failures, worst_ratio=worst, eps=list(eps_list)),
    )


def _qualifying_start(sy: QualifiedSystem, sched, rng, s0, max_tries: int = 200):
    """Feasible point near ``s0`` meeting the inner-loop precondition at a random level."""
    floor = sy.d.m - sched.n0 / (2.0 + 2.0 * sched.gamma)
    for _ in range(max_tries):
        j = int(rng.integers(sched.J))
        sig = float(sched.sigma[j])
        z = project_nullspace(sy.d, rng.standard_normal(sy.d.m))
        s = s0 + z / np.linalg.norm(z) * sig * 10 ** rng.uniform(-2, 1)
        if F(SplineFamily(sched.shape, sig), s) >= floor:
            return j, s
    raise RuntimeError("no qualifying start found")


@_timed("inner-loop theory")
def check_inner_loop(
    systems: list[QualifiedSystem], starts: int = 1000, seed: int = 0, mu_scale: float = 1.0
) -> CheckResult:
    """Monotone ascent and contraction ``<= CR'`` from qualifying starts.

    ``mu_scale`` multiplies the step size (fault injection).
    """
    rng = stream(seed, 13)
    contraction = ascent = unconverged = 0
    max_ratio = 0.0
    for t in range(starts):
        sy = systems[t % len(systems)]
        s0, x = _planted(sy, seed + 2, t % len(systems), t)
        sched = derive_schedule_known_gamma(sy.d, sy.n0, sy.gamma, sy.k, 1e-6, 0.0, x)
        if mu_scale != 1.0:
            sched = replace(sched, mu=sched.mu * mu_scale)
        j, s = _qualifying_start(sy, sched, rng, s0)
        rep = inner_loop_contraction_check(sy.d, sched, j, s, max_steps=20_000)
        contraction += rep.contraction_violations
        ascent += rep.ascent_violations
        unconverged += not rep.converged
        max_ratio = max(max_ratio, rep.max_ratio if rep.converged else math.inf)
    ok = contraction == 0 and ascent == 0 and unconverged == 0
    return CheckResult(
        "", ok,
        f"{starts} starts: {ascent} ascent and {contraction} contraction violations, "
        f"max ratio {max_ratio:.4f}",
        dict(starts=starts, ascent_violations=ascent, contraction_violations=contraction,
             unconverged=unconverged, max_ratio=max_ratio,
             CR_prime=[float(derive_schedule_known_gamma(s.d, s.n0, s.gamma, s.k, 1e-6, 0.0,
                                                         s.d.A[:, 0]).CR_prime) for s in systems]),
    )


# ---------------------------------------------------------------------------
# objective calculus and lemmas


def _random_family(rng) -> SplineFamily:
    return SplineFamily(10 ** rng.uniform(-1.5, 1.5), 10 ** rng.uniform(-1.5, 1.0))


def _non_knot_point(rng, sp: SplineFamily, m: int, gap: float):
    while True:
        t = rng.uniform(-(2.0 + sp.gamma), 2.0 + sp.gamma, size=m)
        a = np.abs(t)
        if np.all(np.abs(a - 1.0) > gap) and np.all(np.abs(a - 1.0 - sp.gamma) > gap):
            return t * sp.sigma


@_timed("objective calculus")
def check_objective_calculus(points: int = 200, draws: int = 10_000, seed: int = 0) -> CheckResult:
    """Central differences, the Lipschitz and gradient bounds, and the quadratic lower bound."""
    rng = stream(seed, 17)
    worst_fd = 0.0
    for _ in range(points):
        sp = _random_family(rng)
        m = int(rng.integers(1, 40))
        h = 1e-6 * sp.sigma
        s = _non_knot_point(rng, sp, m, 1e-4)
        g = grad_F(sp, s)
        fd = np.empty(m)
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            fd[i] = (F(sp, s + e) - F(sp, s - e)) / (2 * h)
        scale = max(np.linalg.norm(g), 1.0 / sp.sigma)
        worst_fd = max(worst_fd, float(np.linalg.norm(fd - g)) / scale)
    lip = grad = low = 0.0  # most negative slack seen
    for _ in range(draws):
        sp = _random_family(rng)
        m = int(rng.integers(1, 60))
        s1 = rng.standard_normal(m) * sp.sigma * 10 ** rng.uniform(-1, 1)
        s2 = s1 + rng.standard_normal(m) * sp.sigma * 10 ** rng.uniform(-3, 1)
        Lc = gradient_norm_bound(sp, m)
        lip = min(lip, Lc * np.linalg.norm(s1 - s2) - abs(F(sp, s1) - F(sp, s2)))
        grad = min(grad, Lc - float(np.linalg.norm(grad_F(sp, s1))))
        low = min(low, F(sp, s1) - F_lower_bound(sp, s1))
    ok = worst_fd <= 1e-6 and min(lip, grad, low) >= -1e-12
    return CheckResult(
        "", ok,
        f"max FD relative error {worst_fd:.2e}; worst slacks Lipschitz {lip:.1e}, "
        f"gradient {grad:.1e}, lower bound {low:.1e}",
        dict(fd_points=points, draws=draws, worst_fd=worst_fd, lipschitz_slack=lip,
             gradient_slack=grad, lower_bound_slack=low),
    )


def _small_systems(count: int, n: int, m: int, seed: int):
    out = []
    for i in range(count):
        raw = stream(seed, 19, i).standard_normal((n, m))
        out.append(orthonormalize(raw)[0])
    return out


@_timed("concavity and narrowness")
def check_concavity_narrowness(
    systems: int = 10, points: int = 500, pairs: int = 1000, n: int = 6, m: int = 12,
    n0: int = 3, seed: int = 0,
) -> CheckResult:
    """Negative semi-definite projected Hessian on qualifying points and the
    diameter bounds of the high-``F`` feasible set."""
    rng = stream(seed, 23)
    ds = _small_systems(systems, n, m, seed)
    gammas = [gamma_exact(d, n0).value for d in ds]
    worst_eig = -math.inf
    hess_fail = 0
    for p in range(points):
        i = p % systems
        d, g = ds[i], gammas[i]
        sp = SplineFamily(g, 10 ** rng.uniform(-1, 1))
        c = int(rng.integers(0, n0 + 1))
        s = rng.uniform(-1, 1, size=m) * sp.sigma
        big = rng.choice(m, size=c, replace=False)
        s[big] = np.sign(rng.standard_normal(c)) * sp.sigma * rng.uniform(1.0001, 2.5 + g, size=c)
        ok = projected_hessian_check(sp, d, s, n0, g)
        worst_eig = max(worst_eig, float(np.linalg.eigvalsh(projected_hessian(sp, d, s))[-1]))
        hess_fail += not ok
    pair_viol = planted_viol = 0
    worst_pair = worst_planted = 0.0
    for p in range(pairs):
        i = p % systems
        d, g = ds[i], gammas[i]
        s0 = plant(rng, m, 1)
        x = d.A @ s0
        # s0 itself lies in the set only when |s0_i| / sigma <= sqrt(n0 / 2)
        sig = float(np.max(np.abs(s0))) / math.sqrt(n0 / 2.0) * 10 ** rng.uniform(0.0, 1.0)
        sp = SplineFamily(g, sig)
        floor = m - n0 / (2.0 + 2.0 * g)
        pts = []
        while len(pts) < 2:
            z = project_nullspace(d, rng.standard_normal(m))
            s = s0 + z / np.linalg.norm(z) * sig * 10 ** rng.uniform(-2.0, 0.5)
            if F(sp, s) >= floor:
                pts.append(s)
        assert np.allclose(d.A @ pts[0], x)
        diam = 2.0 * math.sqrt(m * (g + 1.0)) * sig
        rad = math.sqrt(m * (g + 1.0)) * sig
        dist = float(np.linalg.norm(pts[0] - pts[1]))
        worst_pair = max(worst_pair, dist / diam)
        pair_viol += dist > diam
        for s in pts:
            r = float(np.linalg.norm(s - s0))
            worst_planted = max(worst_planted, r / rad)
            planted_viol += r > rad
    ok = hess_fail == 0 and pair_viol == 0 and planted_viol == 0
    return CheckResult(
        "", ok,
        f"largest projected-Hessian eigenvalue {worst_eig:.2e} over {points} points; "
        f"{pair_viol} pair and {planted_viol} planted-distance violations in {pairs} pairs",
        dict(points=points, pairs=pairs, hessian_failures=hess_fail, max_eigenvalue=worst_eig,
             pair_violations=pair_viol, planted_violations=planted_viol,
             worst_pair_ratio=worst_pair, worst_planted_ratio=worst_planted, n0=n0),
    )


@_timed("sigma-step lemma")
def check_sigma_step(draws: int = 10_000, seed: int = 0) -> CheckResult:
    """``F_sigma(s) >= m - a`` implies ``F_{c sigma}(s) >= m - b`` for ``c = 2m/(2m + b - a)``."""
    rng = stream(seed, 29)
    viol = 0
    worst = math.inf
    for _ in range(draws):
        m = int(rng.integers(1, 60))
        sp = _random_family(rng)
        s = rng.standard_normal(m) * sp.sigma * 10 ** rng.uniform(-1, 1, size=m)
        s[rng.random(m) < rng.random()] = 0.0
        a = m - F(sp, s) + rng.exponential(0.1) * rng.integers(0, 2)
        b = a + 10 ** rng.uniform(-4, math.log10(m + 1))
        c = 2.0 * m / (2.0 * m + b - a)
        slack = F(sp.with_sigma(c * sp.sigma), s) - (m - b)
        worst = min(worst, slack)
        viol += slack < -1e-12
    return CheckResult("", viol == 0, f"{viol} violations in {draws} draws (min slack {worst:.2e})",
                       dict(draws=draws, violations=viol, min_slack=worst))


# ---------------------------------------------------------------------------
# constants


@_timed("constants cross-checks")
def check_constants(systems: int = 50, n: int = 4, m: int = 8, seed: int = 0) -> CheckResult:
    """Exact ``gamma`` against the generalized eigenproblem, monotonicity,
    invariance under row mixing, and the bound chain."""
    rng = stream(seed, 31)
    worst_oracle = worst_inv = 0.0
    mono = chain = 0
    for i in range(systems):
        raw = stream(seed, 37, i).standard_normal((n, m))
        d, _ = orthonormalize(raw)
        Q = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
        dq, _ = orthonormalize(Q @ raw)
        prev = -1.0
        for n0 in range(1, n + 1):
            ge = gamma_exact(d, n0).value
            go = gamma_generalized_eig(d, n0)
            worst_oracle = max(worst_oracle, abs(ge - go) / max(1.0, abs(go)))
            gq = gamma_exact(dq, n0).value
            worst_inv = max(worst_inv, abs(ge - gq) / max(1.0, abs(ge)))
            mono += ge < prev
            prev = ge
            bs = gamma_bound_subset(d, n0).value
            ba = gamma_bound_aric(d, n0).value
            rel = 1e-9 * max(1.0, ge)
            chain += not (ge <= bs + rel and bs <= ba + rel)
    ok = worst_oracle <= 1e-8 and worst_inv <= 1e-9 and mono == 0 and chain == 0
    return CheckResult(
        "", ok,
        f"oracle agreement {worst_oracle:.1e}, invariance {worst_inv:.1e}, "
        f"{mono} monotonicity and {chain} bound-chain violations",
        dict(systems=systems, worst_oracle_rel=worst_oracle, worst_invariance_rel=worst_inv,
             monotonicity_violations=mono, chain_violations=chain),
    )


@_timed("gaussian asymptotics")
def check_gaussian(
    alphas=tuple(round(0.1 * i, 1) for i in range(1, 11)), l: int = 100, n: int = 200,
    r: float = 0.2, trials: int = 2000, seed: int = 0,
) -> CheckResult:
    """``rho(alpha) > 0`` and the singular-value tail rates against their bound."""
    rhos = {a: rho(a)[0] for a in alphas}
    conc = singular_value_concentration_trial(l, n, r, trials, seed)
    ok = all(v > 0 for v in rhos.values()) and conc.passed
    return CheckResult(
        "", ok,
        f"min rho {min(rhos.values()):.3e}; exceedance max/min {conc.rate_max:.4f}/"
        f"{conc.rate_min:.4f} vs {conc.bound:.4f} + 3 SE",
        dict(rho=rhos, concentration=conc.to_dict()),
    )


# ---------------------------------------------------------------------------
# batching, scaling and the oracle


@_timed("msl0 equivalence")
def check_msl0(T: int = 8, m: int = 64, alpha: float = 0.5, instances: int = 3, seed: int = 0) -> CheckResult:
    """Batched columns against column-by-column solves (heuristic schedule)."""
    n = int(round(alpha * m))
    worst = 0.0
    bit_exact = True
    for i in range(instances):
        A = generate(n, m, 0, 0.0, seed, cell=i).A
        d, _ = orthonormalize(A)
        S0 = np.stack([plant(stream(seed, 41, i, t), m, max(1, m // 16)) for t in range(T)], axis=1)
        X = d.A @ S0
        sched = derive_schedule_heuristic(heuristic_sigma1(d, dominant_column(d, X)), m=m)
        out = msolve(d, MultiInstance(X, S0), sched)
        for t in range(T):
            col = solve(d, X[:, t], sched, record_F=False).s_out
            worst = max(worst, float(np.max(np.abs(out.S_out[:, t] - col))))
        one = msolve(d, MultiInstance(X[:, :1]), sched).S_out[:, 0]
        bit_exact &= bool(np.array_equal(one, solve(d, X[:, 0], sched, record_F=False).s_out))
    ok = worst <= 1e-9 and bit_exact
    return CheckResult("", ok, f"max-abs deviation {worst:.1e} (T={T}, m={m}); T=1 bit-identical: {bit_exact}",
                       dict(max_abs=worst, T=T, m=m, t1_bit_identical=bit_exact))


@_timed("complexity scaling")
def check_scaling(m_list=(256, 512, 1024, 2048), alpha: float = 0.5, reps: int = 5,
                  lo: float = 1.7, hi: float = 2.5) -> CheckResult:
    res = scaling_study(m_list, alpha, reps)
    ok = lo <= res.slope <= hi
    return CheckResult(
        "", ok,
        f"slope {res.slope:.3f} (95% CI {res.ci_low:.2f}..{res.ci_high:.2f}), target [{lo}, {hi}]",
        res.to_dict(),
    )


@_timed("oracle agreement")
def check_oracle_agreement(
    trials: int = 500, n: int = 10, m: int = 20, k: int = 2, seed: int = 0,
    floor: float | None = None, success_tol: float = 1e-3,
) -> CheckResult:
    """Heuristic SL0 against the brute-force sparsest solution on Gaussian instances."""
    if floor is None:
        floor = max(ORACLE_AGREEMENT_FLOOR, ORACLE_AGREEMENT_PINNED - 0.02)
    agree = 0
    for t in range(trials):
        inst = generate(n, m, k, 0.0, seed, cell=99, trial=t)
        d, x, _ = inst.dictionary()
        ref = l0_brute_force(d, x, k).vector(m)
        s_hat, _, _ = recover(d, x, "heuristic")
        agree += np.linalg.norm(s_hat - ref) <= success_tol * np.linalg.norm(ref)
    rate = agree / trials
    return CheckResult("", rate >= floor, f"rate {rate:.3f} over {trials} trials, floor {floor:.3f}",
                       dict(rate=rate, trials=trials, floor=floor, pinned=ORACLE_AGREEMENT_PINNED))


# ---------------------------------------------------------------------------
# fault injection


@_timed("fault injection")
def check_fault_injection(systems: list[QualifiedSystem], starts: int = 20, seed: int = 0) -> CheckResult:
    """The suite must notice a ten-fold step size and a negative ``Delta``."""
    mutated = check_inner_loop(systems, starts=starts, seed=seed, mu_scale=10.0)
    refused = False
    sy = systems[0]
    try:
        # a sparsity budget above n0/(2(1+gamma)) makes Delta negative
        _fig2_core(sy.d.m, sy.n0, sy.gamma, sy.k + sy.n0, 1e-6, 0.0, 1.0)
    except SparsityTooHigh:
        refused = True
    ok = (not mutated.passed) and refused
    return CheckResult("", ok,
                       f"mu x10 detected: {not mutated.passed}; negative Delta refused: {refused}",
                       dict(mu_detected=not mutated.passed, delta_refused=refused))


def default_systems(search_seeds: int = 10_000):
    return qualifying_systems(3, search_seeds)


__all__ = [
    "CheckResult",
    "check_guaranteed_recovery",
    "check_noisy_bound",
    "check_inner_loop",
    "check_objective_calculus",
    "check_concavity_narrowness",
    "check_sigma_step",
    "check_constants",
    "check_gaussian",
    "check_msl0",
    "check_scaling",
    "check_oracle_agreement",
    "check_fault_injection",
    "default_systems",
]
