"""Command-line surface tying the library together.

Exit codes: 0 success, 2 validation error, 3 capacity/budget error,
4 guarantee violation (a proven property failed, i.e. an implementation bug).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .experiments import (
    lemma_sweep,
    phase_table,
    read_config,
    save_failure_instance,
    sharpness_probe,
    theorem1_validation,
    write_rows_csv,
)
from .linalg import SingularSystemError, read_matrix, read_vector
from .omp import GuaranteeViolation, StopRule, omp_result_json, omp_run, write_trace_csv
from .ripcheck import (
    CapacityError,
    check_theorem1_conditions,
    condition_verdict_json,
    exact_ric,
    ric_report_json,
)
from .sensing import read_signal

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_GUARANTEE = 4


def _cmd_ric(args):
    A = read_matrix(args.matrix)
    kwargs = {} if args.budget is None else {"budget": args.budget}
    report = exact_ric(A, args.order, **kwargs)
    print(ric_report_json(report))
    return EXIT_OK


def _cmd_omp(args):
    A = read_matrix(args.matrix)
    y = read_vector(args.measurement)
    if args.max_iter is not None:
        rule = StopRule.max_iterations(args.max_iter)
    else:
        rule = StopRule.residual_at_most(args.eps)
    result = omp_run(A, y, rule)
    if args.trace:
        write_trace_csv(args.trace, result)
    print(omp_result_json(result))
    return EXIT_OK


def _cmd_check(args):
    A = read_matrix(args.matrix)
    signal = read_signal(args.signal)
    verdict = check_theorem1_conditions(A, signal, args.eps)
    print(condition_verdict_json(verdict))
    return EXIT_OK


def _cmd_validate_theorem1(args):
    config = read_config(args.config)
    if args.parallelism is not None:
        config = replace(config, parallelism=args.parallelism)
    rows = theorem1_validation(config)
    write_rows_csv(args.out, rows)
    held = sum(r.conditions_held_count or 0 for r in rows)
    print(f"wrote {len(rows)} cells to {args.out}; "
          f"{held} condition-holding trials, 0 failures")
    return EXIT_OK


def _cmd_phase(args):
    config = read_config(args.config)
    if args.parallelism is not None:
        config = replace(config, parallelism=args.parallelism)
    rows = phase_table(config)
    write_rows_csv(args.out, rows)
    print(f"wrote {len(rows)} cells to {args.out}")
    return EXIT_OK


def _cmd_sharpness(args):
    found = sharpness_probe(args.k, args.t, args.budget, args.seed)
    if found is None:
        print(json.dumps({"found": False, "k": args.k, "t": args.t}, indent=2))
        return EXIT_OK
    save_failure_instance(args.out, found)
    print(
        json.dumps(
            {
                "found": True,
                "k": args.k,
                "t": args.t,
                "verified_delta": found.verified_delta,
                "sharp_bound": found.sharp_bound,
                "directory": args.out,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_lemmas(args):
    report = lemma_sweep(args.seed, args.instances)
    print(
        json.dumps(
            {
                "instances": report.instances,
                "lemma1_checks": report.lemma1_checks,
                "lemma1_skipped": report.lemma1_skipped,
                "min_margin_lemma1": report.min_margin_lemma1,
                "min_margin_lemma2": report.min_margin_lemma2,
                "min_margin_lemma3": report.min_margin_lemma3,
                "min_margin_lemma4": report.min_margin_lemma4,
                "violations": report.violations,
            },
            indent=2,
        )
    )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="omplab",
        description="Sparse-recovery laboratory: orthogonal matching pursuit "
        "with exact restricted-isometry analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ric", help="exact RIC of a matrix at a given order")
    p.add_argument("--matrix", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=_cmd_ric)

    p = sub.add_parser("omp", help="run the solver on a measurement")
    p.add_argument("--matrix", required=True)
    p.add_argument("--measurement", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--max-iter", type=int, default=None)
    group.add_argument("--eps", type=float, default=None)
    p.add_argument("--trace", default=None, help="write per-iteration CSV here")
    p.set_defaults(func=_cmd_omp)

    p = sub.add_parser("check", help="evaluate the recovery conditions")
    p.add_argument("--matrix", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser(
        "validate-theorem1",
        help="Monte Carlo validation of the recovery guarantee",
    )
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=None)
    p.set_defaults(func=_cmd_validate_theorem1)

    p = sub.add_parser("phase", help="unconditioned success-rate table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=None)
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser(
        "sharpness", help="search for a greedy-failure instance at RIC = t"
    )
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sharpness)

    p = sub.add_parser("lemmas", help="randomized sweep of the four lemmas")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--instances", type=int, required=True)
    p.set_defaults(func=_cmd_lemmas)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except GuaranteeViolation as exc:
        print(f"guarantee violation: {exc}", file=sys.stderr)
        return EXIT_GUARANTEE
    except (ValueError, IndexError, SingularSystemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
