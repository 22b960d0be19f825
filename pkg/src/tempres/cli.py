"""``tempres`` command line.

Subcommands: ``mse`` (one point), ``sweep`` (manifest driven), ``plan``
(step-size recommendations), ``sample-system`` and ``moments``.  Exit status
is 0 on success, 2 for bad input and 3 when a computation fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .closed_form import mse_for_plan
from .errors import ConfigError, IoFailure, NumericalFailure, TempresError
from .experiment import SweepConfig, run_sweep, sample_stable_matrix, write_records
from .gaussian_process import cross_moment, fourth_moment, second_moment
from .ground_truth import value_finite, value_infinite
from .monte_carlo import empirical_mse
from .oracle import mse_exact
from .stepsize import (
    extrapolate_budget,
    hstar_grid,
    hstar_infinite,
    hstar_leading,
    hstar_marginal,
    hstar_poly_root,
    hstar_refined,
)
from .system import HorizonMode, ScalarSystem, build_plan, validate_scalar

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
MODES = [m.value for m in HorizonMode]


def _scalar_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=float, required=True, help="drift (a <= 0)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0, help="cost weight")
    p.add_argument("--T", type=float, required=True, help="estimation horizon")
    p.add_argument("--gamma", type=float, default=None, help="discount factor (default 1)")
    p.add_argument("--mode", choices=MODES, default=None)


def _mode_and_gamma(args) -> tuple[HorizonMode, float]:
    if args.mode is None:
        mode = HorizonMode.FINITE_UNDISCOUNTED if args.gamma in (None, 1.0) else HorizonMode.FINITE_DISCOUNTED
    else:
        mode = HorizonMode.parse(args.mode)
    gamma = 1.0 if args.gamma is None else args.gamma
    return mode, gamma


def cmd_mse(args) -> int:
    mode, gamma = _mode_and_gamma(args)
    sys_ = validate_scalar(args.a, args.sigma, args.q, mode, gamma)
    plan = build_plan(args.h, args.B, args.T, gamma, mode)
    br = mse_exact(sys_, plan)
    out = {"h": plan.h, "N": plan.N, "M": plan.M, "mse_closed": mse_for_plan(sys_, plan), "mse_oracle": br.total}
    out.update(br.as_dict())
    if args.replicates:
        target = value_finite(sys_, args.T, gamma).value if mode.is_finite else value_infinite(sys_, gamma).value
        emp = empirical_mse(sys_, plan, target, args.replicates, args.seed)
        out.update(mse_emp_mean=emp.mean, mse_emp_se=emp.std_error)
    for k, v in out.items():
        print(f"{k:>16}  {v:.10g}" if isinstance(v, float) else f"{k:>16}  {v}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = SweepConfig.from_file(args.config) if args.config else SweepConfig()
    cfg = cfg.with_overrides(output=args.out, format=args.format, seed=args.seed, workers=args.workers)
    records = run_sweep(cfg)
    text = write_records(records, cfg.output, cfg.format)
    if cfg.output is None:
        sys.stdout.write(text)
    failed = sum(1 for r in records if r.error)
    if failed:
        print(f"{failed} of {len(records)} records failed; see the error column", file=sys.stderr)
    return EXIT_OK


def _read_pilot(path: str) -> list[tuple[float, float]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read pilot file {path}: {exc}") from exc
    key = "h_star" if rows and "h_star" in rows[0] else "h"
    try:
        return [(float(r["B"]), float(r[key])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"pilot file needs columns B and h_star (or h): {exc}") from None


def cmd_plan(args) -> int:
    mode, gamma = _mode_and_gamma(args)
    sys_ = validate_scalar(args.a, args.sigma, args.q, mode, gamma)
    B, T = args.B, args.T
    recs = []
    if mode is HorizonMode.INFINITE_DISCOUNTED:
        recs.append(hstar_infinite(args.a, gamma, T, B, args.sigma))
    elif mode is HorizonMode.FINITE_UNDISCOUNTED:
        if args.a == 0:
            recs.append(hstar_marginal(T, B, args.sigma))
        else:
            recs.append(hstar_leading(args.a, args.sigma, T, B))
            recs.append(hstar_refined(args.a, args.sigma, T, B))
            try:
                recs.append(hstar_poly_root(args.a, args.sigma, T, B))
            except NumericalFailure as exc:
                print(f"poly-root unavailable: {exc}", file=sys.stderr)
    recs.append(hstar_grid(sys_, T, B, gamma, mode, evaluator="exact-oracle", m_max=args.m_max))
    print(f"{'method':<18}{'h*':>14}{'episodes':>14}{'predicted MSE':>18}  notes")
    for r in recs:
        mse = "" if r.predicted_mse is None else f"{r.predicted_mse:.6e}"
        notes = ",".join(r.flags)
        if r.bracket is not None:
            notes = (notes + " " if notes else "") + f"bracket=[{r.bracket[0]:.6g}, {r.bracket[1]:.6g}]"
        if r.alternatives:
            notes += " " + " ".join(f"{k}={v:.6g}" for k, v in r.alternatives.items())
        print(f"{r.method.value:<18}{r.h_star:>14.6g}{r.episodes:>14.6g}{mse:>18}  {notes}".rstrip())
    if args.pilot:
        fit = extrapolate_budget(_read_pilot(args.pilot), mode)
        print(
            f"{'extrapolated':<18}{fit.predict(B):>14.6g}{B * fit.predict(B) / T:>14.6g}{'':>18}  "
            f"c={fit.coefficient:.6g} exponent={fit.exponent:.6g} pilot_rms={fit.fit_residual:.3g}"
        )
    return EXIT_OK


def cmd_sample_system(args) -> int:
    A = sample_stable_matrix(args.n, args.seed)
    print(json.dumps({"n": args.n, "seed": args.seed, "A": A.tolist(), "eigenvalues": np.linalg.eigvalsh(A).tolist()}, indent=2))
    return EXIT_OK


def cmd_moments(args) -> int:
    s = ScalarSystem(args.a, args.sigma)
    t = args.t
    s_ = t if args.s is None else args.s
    print(f"E[x(t)^2]          {float(second_moment(s, t)):.17g}")
    print(f"E[x(t)^4]          {float(fourth_moment(s, t)):.17g}")
    print(f"E[x(s)^2 x(t)^2]   {float(cross_moment(s, s_, t)):.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempres", description="Step-size and data-budget trade-offs for Monte-Carlo cost estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mse", help="MSE breakdown at one (h, B)")
    _scalar_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--replicates", type=int, default=0, help="empirical replicates (0 = skip)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mse)

    p = sub.add_parser("sweep", help="run a sweep manifest")
    p.add_argument("--config", help="JSON manifest")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plan", help="compare step-size recommendations")
    _scalar_args(p)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--m-max", type=int, default=None, help="largest T/h searched on the grid")
    p.add_argument("--pilot", help="CSV with columns B,h_star from pilot runs")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample-system", help="random stable symmetric matrix")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample_system)

    p = sub.add_parser("moments", help="scalar moments at times s, t")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, default=None)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TempresError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
