"""Command-line front end: generate instances, solve them, compare against
the deterministic plan, replay a plan under its scenarios, or export the
compact model.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
4 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import __version__
from .errors import (CapacityError, InvalidInputError, NonConvergedError,
                     ShiftPlanError)
from .generator import PROFILES, GeneratorSpec, generate_instance
from .model import (evaluate_solution, load_instance, load_plan, save_instance,
                    save_plan, simulate)
from .solver import (CgConfig, build_compact_model, compare_deterministic,
                     export_lp_format, run_column_generation, run_exact,
                     solve_deterministic)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3
EXIT_CAPACITY = 4


def _thread_cap() -> int:
    """Worker cap from SHIFTCG_THREADS; the solvers are currently
    single-threaded, so this only validates and records the setting."""
    raw = os.environ.get("SHIFTCG_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"SHIFTCG_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise InvalidInputError("SHIFTCG_THREADS must be at least 1")
    return value


def _add_generate(sub):
    p = sub.add_parser("generate", help="write a synthetic instance file")
    p.add_argument("--out", required=True, help="output instance path")
    p.add_argument("--n-jobs", type=int, required=True)
    p.add_argument("--n-scenarios", type=int, required=True)
    p.add_argument("--profile", choices=PROFILES, default="full-day")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delay-mean", type=float, default=8.0)
    p.add_argument("--delay-std", type=float, default=20.0)
    p.add_argument("--vl-prob", type=float, default=0.03)
    p.add_argument("--cbu", type=float, default=None)


def _add_solve(sub):
    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("--mode", default="exact",
                   choices=["exact", "cg-only", "deterministic", "compact-export"])
    p.add_argument("--delta0", type=float, default=None,
                   help="initial pricing threshold (negative; default -cbu)")
    p.add_argument("--kappa", type=int, default=1,
                   help="bound-set size (sizes above 1 collapse to 1)")
    p.add_argument("--seed", type=int, default=0,
                   help="reserved; the solve pipeline is deterministic")
    p.add_argument("--max-iterations", type=int, default=1000,
                   help="column-generation iteration cap")
    p.add_argument("--report", default=None, help="write the run report JSON here")
    p.add_argument("--gap-csv", default=None, help="write the gap history CSV here")
    p.add_argument("--plan-out", default=None, help="write the solution plan here")
    p.add_argument("--lp-out", default=None,
                   help="LP file path for --mode compact-export")


def _add_compare(sub):
    p = sub.add_parser("compare",
                       help="improvement of the stochastic optimum over the"
                            " deterministic plan re-priced under the scenarios")
    p.add_argument("instance")
    p.add_argument("--report", default=None)


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="replay a plan under every scenario")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("--out", default=None, help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftcg",
        description="stochastic ground-staff shift planning by column generation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_solve(sub)
    _add_compare(sub)
    _add_simulate(sub)
    return parser


def _cmd_generate(args) -> int:
    spec = GeneratorSpec(
        n_jobs=args.n_jobs, n_scenarios=args.n_scenarios, profile=args.profile,
        seed=args.seed, delay_mean=args.delay_mean, delay_std=args.delay_std,
        vl_prob=args.vl_prob, cbu=args.cbu)
    save_instance(generate_instance(spec), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _print_report(report) -> None:
    d = report.to_dict()
    print(f"iterations={d['iterations']} columns={d['columns_generated']}")
    print(f"times: lp={d['lp_time_s']:.3f}s pricing={d['pricing_time_s']:.3f}s"
          f" ip={d['ip_time_s']:.3f}s total={d['total_time_s']:.3f}s"
          f" (pricing {100 * d['pricing_share']:.1f}%)")


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    config = CgConfig(delta0=args.delta0, kappa=args.kappa,
                      max_iterations=args.max_iterations)
    if args.mode == "compact-export":
        out = args.lp_out or (args.instance + ".lp")
        export_lp_format(build_compact_model(instance), out)
        print(f"wrote {out}")
        return EXIT_OK
    if args.mode == "cg-only":
        outcome, _pool, report = run_column_generation(instance, config=config)
        print(f"c_low={outcome.objective:.6f}")
        _print_report(report)
        if args.report:
            report.save_json(args.report)
        if args.gap_csv:
            report.save_gap_csv(args.gap_csv)
        return EXIT_OK if report.converged else EXIT_NONCONVERGED
    if args.mode == "deterministic":
        result = solve_deterministic(instance, config)
        stochastic_eval = evaluate_solution(result.shifts, instance)
        print(f"c_final={result.objective:.6f}")
        print(f"stochastic_evaluation={stochastic_eval.total_cost:.6f}")
    else:
        result = run_exact(instance, config)
        r = result.report
        print(f"c_low={r.c_low:.6f} c_upp={r.c_upp:.6f} c_final={r.c_final:.6f}")
    _print_report(result.report)
    if args.plan_out:
        save_plan(result.shifts, args.plan_out)
        print(f"wrote {args.plan_out}")
    if args.report:
        result.report.save_json(args.report)
    if args.gap_csv:
        result.report.save_gap_csv(args.gap_csv)
    return EXIT_OK


def _cmd_compare(args) -> int:
    instance = load_instance(args.instance)
    cmp = compare_deterministic(instance)
    print(f"deterministic_cost={cmp.deterministic_cost:.6f}")
    print(f"deterministic_plan_under_scenarios={cmp.deterministic_plan_stochastic_cost:.6f}")
    print(f"stochastic_cost={cmp.stochastic_cost:.6f}")
    print(f"improvement_vs_deterministic_pct={cmp.improvement_pct:.4f}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump({
                "deterministic_cost": cmp.deterministic_cost,
                "deterministic_plan_under_scenarios":
                    cmp.deterministic_plan_stochastic_cost,
                "stochastic_cost": cmp.stochastic_cost,
                "improvement_pct": cmp.improvement_pct,
            }, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    instance = load_instance(args.instance)
    plan = load_plan(args.plan)
    evaluation = evaluate_solution(plan, instance)
    wage = sum(instance.wage.cost(s.duration) for s in plan)
    per_scenario = []
    for w, scenario in enumerate(instance.scenarios):
        entries = {}
        for i, shift in enumerate(plan):
            ids = sorted(simulate(shift, scenario, instance.rules))
            if ids:
                entries[f"shift{i}"] = ids
        per_scenario.append({
            "scenario": w,
            "backup_count": evaluation.per_scenario_backup_counts[w],
            "rescheduled": entries,
        })
    report = {
        "coverage_ok": evaluation.coverage_ok,
        "uncovered_jobs": list(evaluation.uncovered),
        "wage_cost": wage,
        "expected_backup_cost": evaluation.total_cost - wage,
        "total_cost": evaluation.total_cost,
        "per_scenario": per_scenario,
    }
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _thread_cap()
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_simulate(args)
    except (InvalidInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ShiftPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
