import csv
import json

import numpy as np
import pytest

from sl0.dictionary import orthonormalize
from sl0.harness.experiments import (
    SweepConfig,
    best_n0,
    build_schedule,
    constructed_system,
    greedy_gamma_lower,
    provenance,
    rate_increase_violations,
    recover,
    run_sweep,
    scaling_study,
    search_random_qualifying,
)
from sl0.constants import gamma_exact


def test_provenance_is_stable():
    a = provenance(1, {"b": 2, "a": 1})
    assert a == provenance(1, {"a": 1, "b": 2})
    assert a["config_hash"] != provenance(1, {"a": 2})["config_hash"]


def test_greedy_lower_bound(small_dict):
    lows = greedy_gamma_lower(small_dict, 4)
    for n0 in range(1, 5):
        assert lows[n0 - 1] <= gamma_exact(small_dict, n0).value * (1 + 1e-12)


def test_constructed_system_qualifies():
    sys = constructed_system(0)
    assert sys.margin > 0 and sys.d.m == 16
    n0, g, margin = best_n0(sys.d, 1)
    assert (n0, margin) == (sys.n0, pytest.approx(sys.margin))


def test_random_search_reports():
    rep = search_random_qualifying(12, 16, 20, k=1)
    assert rep.seeds_tried == 20 and rep.best_margin < 0


def test_build_schedule_modes():
    sys = constructed_system(1)
    x = sys.d.A @ np.eye(16)[3]
    assert build_schedule(sys.d, x, "guaranteed", k=1).mode == "guaranteed"
    assert build_schedule(sys.d, x, "noisy", k=1, eps=1e-4).mode == "noisy"
    assert build_schedule(sys.d, x, "heuristic").mode == "heuristic"
    with pytest.raises(ValueError):
        build_schedule(sys.d, x, "guaranteed")
    with pytest.raises(ValueError):
        build_schedule(sys.d, x, "bogus", k=1)


def test_recover_zero():
    d, _ = orthonormalize(np.random.default_rng(0).standard_normal((3, 6)))
    s, tr, sched = recover(d, np.zeros(3), "heuristic")
    assert not np.any(s) and tr is None


def test_sweep_rows_and_csv(tmp_path):
    cfg = SweepConfig(m_list=[16], alpha_list=[0.5], k_list=[0, 1, 3], trials=10, seed=4)
    res = run_sweep(cfg)
    rates = {r["k"]: r["recovery_rate"] for r in res.rows}
    assert rates[0] == 1.0
    assert rate_increase_violations(res.rows) == []
    p = tmp_path / "s.csv"
    res.write_csv(p)
    rows = list(csv.DictReader(p.open()))
    assert len(rows) == 3 and float(rows[0]["recovery_rate"]) == 1.0
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["seed"] == 4 and meta["config"]["trials"] == 10
    again = run_sweep(cfg).rows
    assert [r["recovery_rate"] for r in again] == [r["recovery_rate"] for r in res.rows]


def test_sweep_counts_refusals():
    cfg = SweepConfig(m_list=[16], alpha_list=[0.5], k_list=[2], modes=["guaranteed"], trials=2)
    row = run_sweep(cfg).rows[0]
    assert row["refused"] == 2 and row["recovery_rate"] == 0


def test_rate_violation_detected():
    rows = [
        dict(m=20, n=10, eps=0.0, mode="h", k=1, recovery_rate=0.1, trials=200),
        dict(m=20, n=10, eps=0.0, mode="h", k=2, recovery_rate=0.9, trials=200),
    ]
    assert len(rate_increase_violations(rows)) == 1


def test_scaling_validation():
    with pytest.raises(ValueError):
        scaling_study([64, 128])
    with pytest.raises(ValueError):
        scaling_study([64, 128, 256], fixed_n=32)
    res = scaling_study([64, 128, 256], reps=1, J=3, L=2)
    assert res.ci_low <= res.slope <= res.ci_high
