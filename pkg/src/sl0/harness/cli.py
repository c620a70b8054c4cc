"""``sl0`` command-line front end.

Every subcommand prints one JSON object (or CSV for ``sweep --format csv``)
to stdout, or writes it to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from ..constants import (
    aric_exact,
    gamma_bound_aric,
    gamma_bound_subset,
    gamma_exact,
    rho,
    singular_value_concentration_trial,
)
from ..dictionary import orthonormalize, read_matrix
from ..errors import SL0Error
from ..msl0 import MultiInstance, dominant_column, msolve
from ..oracle import l0_brute_force
from ..schedule import MODES
from .experiments import SweepConfig, build_schedule, provenance, run_sweep, scaling_study
from .instances import ProblemInstance, generate
from ..solver import solve


def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(args, payload, path=None) -> None:
    payload = dict(payload)
    payload.setdefault("provenance", provenance(args.seed, {k: v for k, v in vars(args).items() if k != "func"}))
    text = json.dumps(_clean(payload), indent=1)
    path = path or args.out
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _schedule_kwargs(args, eps: float) -> dict:
    kw = dict(k=args.k, delta=args.delta, eps=eps if args.eps is None else args.eps)
    if args.n0 is not None:
        kw["n0"] = args.n0
    if args.gamma is not None:
        kw["gamma"] = args.gamma
    if args.k_prime is not None:
        kw["k_prime"] = args.k_prime
    return kw


def _guarantees(mode: str, args, sched) -> dict:
    checks = []
    if mode in ("guaranteed", "noisy"):
        checks.append("gamma(n0) user-supplied" if args.gamma is not None else "gamma(n0) by exact enumeration")
        checks.append("k < n0/(2(1+gamma))")
    elif mode == "gaussian":
        checks.append("r < rho(alpha) (asymptotic; gamma not certified for this matrix)")
    verified = mode in ("guaranteed", "noisy") and args.gamma is None
    return {"verified": verified, "checks": checks}


def cmd_gen(args) -> int:
    A = read_matrix(args.matrix) if args.matrix else None
    inst = generate(args.n, args.m, args.k, args.eps, args.seed, A=A, trial=args.trial)
    text = inst.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_solve(args) -> int:
    inst = ProblemInstance.load(args.instance)
    d, x, eps_eff = inst.dictionary()
    sched = build_schedule(d, x, args.mode, **_schedule_kwargs(args, eps_eff))
    tr = solve(d, x, sched, record_iterates=args.record_iterates)
    report = {
        "mode": args.mode,
        "schedule": sched.summary(),
        "s_out": tr.s_out,
        "residual": tr.residual,
        "F_final": tr.F_final,
        "per_j_F": tr.per_j_F,
        "wall_time_ms": 1e3 * tr.wall_time,
        "iterations": tr.iterations,
        "error_vs_s0": float(np.linalg.norm(tr.s_out - inst.s0)),
        "guarantees_verified": _guarantees(args.mode, args, sched),
    }
    if args.record_iterates:
        report["iterates"] = tr.iterates
    _emit(args, report, args.report)
    return 0


def cmd_msolve(args) -> int:
    raw = read_matrix(args.matrix)
    X_raw = read_matrix(args.measurements)
    d, X = orthonormalize(raw, X_raw)
    x_dom = dominant_column(d, X)
    sched = build_schedule(d, x_dom, args.mode, **_schedule_kwargs(args, 0.0))
    out = msolve(d, MultiInstance(X), sched)
    _emit(args, {
        "mode": args.mode,
        "schedule": sched.summary(),
        "S_out": out.S_out,
        "residuals": out.residuals[-1],
        "per_j_F_final": out.per_j_F[-1],
        "wall_time_ms": 1e3 * out.wall_time,
        "notes": list(out.notes),
    }, args.report)
    return 0


def cmd_oracle(args) -> int:
    inst = ProblemInstance.load(args.instance)
    d, x, _ = inst.dictionary()
    res = l0_brute_force(d, x, args.k_max, args.fit_tol)
    _emit(args, res.to_dict())
    return 0


def cmd_gamma(args) -> int:
    d, _ = orthonormalize(read_matrix(args.matrix))
    fn = {"exact": gamma_exact, "bound-subset": gamma_bound_subset, "bound-aric": gamma_bound_aric}[args.method]
    kw = {"workers": args.threads}
    _emit(args, fn(d, args.n0, **kw).to_dict())
    return 0


def cmd_aric(args) -> int:
    _emit(args, aric_exact(read_matrix(args.matrix), args.k, workers=args.threads).to_dict())
    return 0


def cmd_rho(args) -> int:
    value, beta = rho(args.alpha)
    _emit(args, {"alpha": args.alpha, "rho": value, "beta_star": beta})
    return 0


def cmd_concentration(args) -> int:
    rep = singular_value_concentration_trial(args.l, args.n, args.r, args.trials, args.seed, args.threads)
    _emit(args, rep.to_dict())
    return 0


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v]


def cmd_sweep(args) -> int:
    if args.config:
        cfg_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg_obj = {}
    cfg_obj.setdefault("m_list", [int(v) for v in _floats(args.m)])
    cfg_obj.setdefault("alpha_list", _floats(args.alpha))
    cfg_obj.setdefault("k_list", [int(v) for v in _floats(args.k)])
    cfg_obj.setdefault("eps_list", _floats(args.eps))
    cfg_obj.setdefault("modes", args.modes.split(","))
    cfg_obj.setdefault("trials", args.trials)
    cfg_obj["seed"] = args.seed
    cfg_obj["threads"] = args.threads
    res = run_sweep(SweepConfig(**cfg_obj))
    if args.format == "csv":
        if args.out:
            res.write_csv(args.out)
        else:
            sys.stdout.write(res.csv_text())
    else:
        _emit(args, {"rows": res.rows, "provenance": res.provenance})
    return 0


def cmd_scaling(args) -> int:
    res = scaling_study([int(v) for v in _floats(args.m_list)], args.alpha, args.reps, args.J, args.L, args.seed)
    _emit(args, res.to_dict())
    return 0


def cmd_verify(args) -> int:
    from .verify import verify_suite

    results = verify_suite(args.level, args.seed, progress=lambda r: print(r.line(), file=sys.stderr))
    ok = all(r.passed for r in results)
    _emit(args, {"level": args.level, "passed": ok, "checks": [r.to_dict() for r in results]})
    return 0 if ok else 1


def _add_schedule_args(p) -> None:
    p.add_argument("--mode", choices=MODES, default="heuristic")
    p.add_argument("--n0", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-method", choices=["exact"], default="exact",
                   help="how gamma(n0) is obtained when --gamma is not given")
    p.add_argument("--k", type=int, help="sparsity upper bound (guaranteed, noisy, gaussian modes)")
    p.add_argument("--k-prime", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float, help="noise radius (defaults to the instance's)")
    p.add_argument("--report", help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(prog="sl0", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a planted instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--matrix", help="use this raw matrix instead of a Gaussian one")
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", parents=[common], help="solve one instance")
    p.add_argument("--instance", required=True)
    _add_schedule_args(p)
    p.add_argument("--record-iterates", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("msolve", parents=[common], help="solve many measurement columns")
    p.add_argument("--matrix", required=True)
    p.add_argument("--measurements", required=True)
    _add_schedule_args(p)
    p.set_defaults(func=cmd_msolve)

    p = sub.add_parser("oracle", parents=[common], help="brute-force sparsest solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--fit-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gamma", parents=[common], help="gamma(n0) of a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--method", choices=["exact", "bound-subset", "bound-aric"], default="exact")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("aric", parents=[common], help="asymmetric restricted isometry constants")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_aric)

    p = sub.add_parser("rho", parents=[common], help="asymptotic sparsity threshold rho(alpha)")
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("concentration", parents=[common], help="singular-value tail Monte Carlo")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--trials", type=int, default=2000)
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("sweep", parents=[common], help="recovery-rate grid")
    p.add_argument("--config", help="JSON object with SweepConfig fields")
    p.add_argument("--m", default="20")
    p.add_argument("--alpha", default="0.5")
    p.add_argument("--k", default="0,1,2,3")
    p.add_argument("--eps", default="0")
    p.add_argument("--modes", default="heuristic")
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", parents=[common], help="solve-time exponent in m")
    p.add_argument("--m-list", default="256,512,1024,2048")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--J", type=int, default=20)
    p.add_argument("--L", type=int, default=5)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("verify", parents=[common], help="run the property suite")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SL0Error, ValueError, OSError) as exc:
        print(f"sl0 {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
