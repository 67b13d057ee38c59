"""Command-line interface.

Commands: ``validate`` (graph checks), ``evaluate`` (full metric runs),
``exam`` (quiz and bias audit only), ``leaderboard`` (ranked table from
scores), ``meta`` (perturbation responsiveness and evaluator consistency).
Exit codes: 0 success, 1 structural or evaluation errors, 2 unreadable input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import AuditError
from .metrics import MetricConfig
from .runner import (
    JudgeSettings,
    RunConfig,
    cmd_evaluate,
    cmd_exam,
    cmd_leaderboard,
    cmd_meta,
    cmd_validate,
    leaderboard_markdown,
    sort_rows,
    _record_row,
)


def _add_judge_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("judge")
    group.add_argument("--judge", choices=["deterministic", "remote"], default="deterministic")
    group.add_argument("--tau", type=float, default=0.6,
                       help="token-recall threshold of the deterministic judge")
    group.add_argument("--endpoint", default="", help="remote chat-completion URL")
    group.add_argument("--model", default="", help="remote model name")
    group.add_argument("--temperature", type=float, default=0.0)
    group.add_argument("--timeout", type=float, default=30.0)
    group.add_argument("--max-parallel", type=int, default=4)
    group.add_argument("--credential-env", default="GRAPHAUDIT_API_KEY",
                       help="environment variable holding the bearer credential")


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("metrics")
    group.add_argument("--epsilon", type=float, default=1e-9)
    group.add_argument("--lambda", dest="lambda_penalty", type=float, default=5.0)
    group.add_argument("--weights", default="0.25,0.25,0.25,0.25",
                       help="overall weights: coverage,consistency,utility,objectivity")


def _judge_settings(args: argparse.Namespace) -> JudgeSettings:
    return JudgeSettings(
        kind=args.judge,
        tau=args.tau,
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        timeout=args.timeout,
        max_parallel=args.max_parallel,
        api_key_env=args.credential_env,
    )


def _metric_config(args: argparse.Namespace) -> MetricConfig:
    weights = tuple(float(part) for part in args.weights.split(","))
    if len(weights) != 4:
        raise ValueError("--weights needs four comma-separated numbers")
    return MetricConfig(
        epsilon=args.epsilon,
        lambda_penalty=args.lambda_penalty,
        overall_weights=weights,  # type: ignore[arg-type]
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphaudit",
        description="Audit long-form research reports against a curated research graph.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="check a graph file")
    validate.add_argument("graph", type=Path)

    evaluate = commands.add_parser("evaluate", help="score reports against a graph")
    evaluate.add_argument("--graph", type=Path, required=True)
    evaluate.add_argument("--report", type=Path, action="append", required=True,
                          help="report file or directory of .md files (repeatable)")
    evaluate.add_argument("--exam", type=Path, default=None)
    evaluate.add_argument("--out", type=Path, default=Path("runs"))
    evaluate.add_argument("--format", default="json,csv,markdown",
                          help="comma-separated subset of json,csv,markdown")
    evaluate.add_argument("--section-depth", type=int, default=None,
                          help="max heading depth that starts a section")
    evaluate.add_argument("--workers", type=int, default=1)
    _add_judge_flags(evaluate)
    _add_metric_flags(evaluate)

    exam = commands.add_parser("exam", help="run only the exam suite over a report")
    exam.add_argument("--exam", type=Path, required=True)
    exam.add_argument("--report", type=Path, required=True)
    exam.add_argument("--section-depth", type=int, default=None)
    _add_judge_flags(exam)
    _add_metric_flags(exam)

    leaderboard = commands.add_parser("leaderboard", help="rank systems by overall score")
    leaderboard.add_argument("inputs", type=Path, nargs="+",
                             help="score CSVs, scores.json files, or run directories")
    leaderboard.add_argument("--out", type=Path, default=None)
    _add_metric_flags(leaderboard)

    meta = commands.add_parser("meta", help="perturbation responsiveness and consistency")
    meta.add_argument("--graph", type=Path, required=True)
    meta.add_argument("--report", type=Path, action="append", required=True)
    meta.add_argument("--exam", type=Path, default=None)
    meta.add_argument("--out", type=Path, default=Path("runs"))
    meta.add_argument("--section-depth", type=int, default=None)
    meta.add_argument("--perturb", choices=["degrade", "improve"], default=None,
                      help="restrict to one perturbation kind (default: both)")
    meta.add_argument("--count", type=int, default=1, help="nodes per perturbation (1-3)")
    meta.add_argument("--seed", type=int, default=0)
    meta.add_argument("--taus", default="",
                      help="comma-separated tau variants used as evaluators for consistency")
    _add_judge_flags(meta)
    _add_metric_flags(meta)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AuditError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        code, findings = cmd_validate(args.graph)
        for line in findings:
            print(line)
        return code

    if args.command == "evaluate":
        config = RunConfig(
            graph_path=args.graph,
            report_paths=tuple(args.report),
            exam_path=args.exam,
            judge=_judge_settings(args),
            metrics=_metric_config(args),
            out_dir=args.out,
            formats=tuple(part.strip() for part in args.format.split(",") if part.strip()),
            section_depth=args.section_depth,
            workers=args.workers,
        )
        record = cmd_evaluate(config)
        rows = sort_rows([_record_row(result) for result in record.results], config.metrics)
        print(leaderboard_markdown(rows), end="")
        print(f"\nrun directory: {record.run_dir}")
        for result in record.results:
            if result.error:
                print(f"failed: {result.name}: {result.error}", file=sys.stderr)
        return 1 if any(result.error for result in record.results) or record.partial else 0

    if args.command == "exam":
        utility, objectivity, dump = cmd_exam(
            args.exam, args.report, _judge_settings(args), _metric_config(args),
            args.section_depth,
        )
        print(f"utility: {'-' if utility is None else f'{utility:.2f}'}")
        print(f"objectivity: {'-' if objectivity is None else f'{objectivity:.2f}'}")
        for line in dump["skipped"]:
            print(f"skipped: {line}", file=sys.stderr)
        return 0

    if args.command == "leaderboard":
        _, markdown, _ = cmd_leaderboard(args.inputs, args.out, _metric_config(args))
        print(markdown, end="")
        return 0

    if args.command == "meta":
        config = RunConfig(
            graph_path=args.graph,
            report_paths=tuple(args.report),
            exam_path=args.exam,
            judge=_judge_settings(args),
            metrics=_metric_config(args),
            out_dir=args.out,
            section_depth=args.section_depth,
            perturb_kinds=(args.perturb,) if args.perturb else ("degrade", "improve"),
            perturb_count=args.count,
            seed=args.seed,
            taus=tuple(float(part) for part in args.taus.split(",") if part.strip()),
        )
        record = cmd_meta(config)
        if record.responsiveness is not None:
            rr = record.responsiveness
            degrade_text = "-" if rr.degrade_rate is None else f"{rr.degrade_rate:.1f}%"
            improve_text = "-" if rr.improve_rate is None else f"{rr.improve_rate:.1f}%"
            print(f"responsiveness: degrade {degrade_text}, improve {improve_text}")
        if record.consistency is not None:
            for metric_name, value in sorted(record.consistency.sigma_norm.items()):
                print(f"sigma_norm[{metric_name}]: {value:.2f}%")
        for line in record.errors:
            print(f"error: {line}", file=sys.stderr)
        print(f"run directory: {record.run_dir}")
        return 1 if record.errors else 0

    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
