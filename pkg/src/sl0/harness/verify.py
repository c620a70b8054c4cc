"""Property suite at two budgets: ``quick`` (about half a minute) and ``full``."""

from __future__ import annotations

from . import checks
from .checks import CheckResult

QUICK = dict(
    search_seeds=200,
    recovery_trials=5,
    noisy_trials=5,
    inner_starts=30,
    fd_points=50,
    draws=2000,
    hess_points=60,
    pairs=100,
    sigma_draws=2000,
    constant_systems=5,
    conc_trials=300,
    msl0_instances=1,
    oracle_trials=100,
    scaling=False,
)

FULL = dict(
    search_seeds=10_000,
    recovery_trials=100,
    noisy_trials=100,
    inner_starts=1000,
    fd_points=200,
    draws=10_000,
    hess_points=500,
    pairs=1000,
    sigma_draws=10_000,
    constant_systems=50,
    conc_trials=2000,
    msl0_instances=3,
    oracle_trials=500,
    scaling=True,
)


def verify_suite(level: str = "quick", seed: int = 0, progress=None) -> list[CheckResult]:
    """Run every property check; failures are reported in the results, never raised."""
    if level not in ("quick", "full"):
        raise ValueError(f"level must be quick or full, got {level!r}")
    p = QUICK if level == "quick" else FULL
    systems, _ = checks.default_systems(p["search_seeds"])
    runs = [
        lambda: checks.check_guaranteed_recovery(systems, p["recovery_trials"], seed=seed),
        lambda: checks.check_noisy_bound(systems, trials=p["noisy_trials"], seed=seed),
        lambda: checks.check_inner_loop(systems, p["inner_starts"], seed=seed),
        lambda: checks.check_objective_calculus(p["fd_points"], p["draws"], seed=seed),
        lambda: checks.check_concavity_narrowness(points=p["hess_points"], pairs=p["pairs"], seed=seed),
        lambda: checks.check_sigma_step(p["sigma_draws"], seed=seed),
        lambda: checks.check_constants(p["constant_systems"], seed=seed),
        lambda: checks.check_gaussian(trials=p["conc_trials"], seed=seed),
        lambda: checks.check_msl0(instances=p["msl0_instances"], seed=seed),
        lambda: checks.check_oracle_agreement(p["oracle_trials"], seed=seed),
        lambda: checks.check_fault_injection(systems, seed=seed),
    ]
    if p["scaling"]:
        runs.append(lambda: checks.check_scaling())
    results = []
    for run in runs:
        try:
            res = run()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(getattr(run, "__name__", "check"), False, f"raised {exc!r}")
        results.append(res)
        if progress is not None:
            progress(res)
    return results
