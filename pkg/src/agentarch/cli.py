"""Command-line driver.

Subcommands: gen-tasks, run-comparison, run-ablation, run-sweep,
run-stress, run-all, calibrate, validate-acc, report. Exit codes: 0 on
success, 1 when --strict is set and any verdict fails, 2 on configuration
errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .acc import acc_from_dict, load_acc, validate_acc
from .calibration import calibrate, load_targets_csv
from .config import ConfigError, HarnessConfig, default_config, load_config
from .experiments import ExperimentReport, RUNNERS, calibration_targets
from .metrics import summaries_markdown
from .model import save_coefficients
from .reporting import FORMATS, emit_report, save_report_json
from .tasks import TaskSpecError, generate_task_set, write_tasks_csv

EXIT_OK = 0
EXIT_VERDICT_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentarch",
        description="Monte Carlo evaluation harness for enterprise multi-agent architectures",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", type=Path, default=None, help="harness config TOML")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", type=Path, default=None, help="override the output directory")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads for simulation")
    parser.add_argument(
        "--strict", action="store_true",
        help="exit nonzero when any verdict or finding fails",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-tasks", help="generate the task population and export CSV")
    gen.add_argument("--output", type=Path, default=None, help="CSV path (default <out>/tasks.csv)")

    for name in ("comparison", "ablation", "sweep", "stress"):
        sub.add_parser(f"run-{name}", help=f"run the {name} experiment")
    sub.add_parser("run-all", help="run every configured experiment with one seed")

    cal = sub.add_parser(
        "calibrate",
        help="fit coefficients against the target table",
        description=(
            "Direct-search fit of the free coefficients. Full-surface fits over "
            "every target are slow; scripts/fit_coefficients.py runs the staged "
            "pipeline that produced the committed set."
        ),
    )
    cal.add_argument("--targets", type=Path, default=None, help="targets CSV (default: embedded table)")
    cal.add_argument("--budget", type=int, default=20000, help="objective evaluation budget")
    cal.add_argument("--output", type=Path, default=None, help="coefficient file to write")
    cal.add_argument(
        "--free", action="append", default=None, metavar="PATH",
        help="coefficient path to optimise (repeatable; default: all)",
    )

    acc = sub.add_parser("validate-acc", help="validate capability contracts")
    acc.add_argument(
        "document", type=Path, nargs="?", default=None,
        help="ACC TOML file (default: validate the [acc] entries of the config)",
    )

    rep = sub.add_parser("report", help="re-emit a saved experiment report")
    rep.add_argument("--input", type=Path, required=True, help="saved <experiment>_report.json")
    rep.add_argument("--format", choices=FORMATS, default="markdown")
    return parser


def _load_harness_config(args: argparse.Namespace) -> HarnessConfig:
    config = load_config(args.config) if args.config else default_config()
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if updates:
        config = dataclasses.replace(config, **updates)
    config.validate()
    return config


def _print_report(report: ExperimentReport) -> None:
    print(f"== {report.experiment} (seed={report.seed}, fingerprint={report.fingerprint})")
    print(summaries_markdown(list(report.rows), report.labels))
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(
            f"[{status}] {v.profile_id} {v.metric}: {v.actual:.2f} "
            f"(target {v.target:.2f} +/- {v.tolerance:.2f})"
        )
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        detail = f" ({c.detail})" if c.detail else ""
        print(f"[{status}] {c.name}: {c.actual:.3f} in [{c.lower:.3f}, {c.upper:.3f}]{detail}")
    n_pass = sum(v.passed for v in report.verdicts) + sum(c.passed for c in report.checks)
    n_all = len(report.verdicts) + len(report.checks)
    print(f"verdicts: {n_pass}/{n_all} passed")


def _run_experiment(name: str, config: HarnessConfig) -> ExperimentReport:
    report = RUNNERS[name](config)
    emit_report(report, "csv", config.out_dir)
    emit_report(report, "markdown", config.out_dir)
    if name == "sweep":
        emit_report(report, "plotdata", config.out_dir)
    save_report_json(report, config.out_dir)
    _print_report(report)
    return report


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "gen-tasks":
            config = _load_harness_config(args)
            task_set = generate_task_set(config.tasks)
            out = args.output or (config.out_dir / "tasks.csv")
            out.parent.mkdir(parents=True, exist_ok=True)
            write_tasks_csv(task_set, out)
            print(f"wrote {len(task_set)} tasks to {out}")
            return EXIT_OK

        if args.command.startswith("run-"):
            config = _load_harness_config(args)
            names = (
                list(config.experiments)
                if args.command == "run-all"
                else [args.command.removeprefix("run-")]
            )
            reports = [_run_experiment(name, config) for name in names]
            if args.strict and not all(r.all_passed for r in reports):
                return EXIT_VERDICT_FAILURE
            return EXIT_OK

        if args.command == "calibrate":
            config = _load_harness_config(args)
            targets = (
                load_targets_csv(args.targets)
                if args.targets
                else calibration_targets(config.targets_path or None)
            )
            task_set = generate_task_set(config.tasks)
            overrides = {
                **config.profile_overrides.get("profiles", {}),
                **config.profile_overrides.get("sweep", {}),
            }
            result = calibrate(
                initial=config.coefficients(),
                targets=targets,
                task_set=task_set,
                budget=args.budget,
                seed=config.master_seed,
                free_params=args.free,
                profile_overrides=overrides or None,
            )
            out = args.output or (config.out_dir / "coefficients.json")
            out.parent.mkdir(parents=True, exist_ok=True)
            save_coefficients(result.coefficients, out)
            within = sum(abs(r) <= 1.0 for r in result.residuals)
            print(
                f"calibrate: loss={result.total_loss:.3f} evaluations={result.evaluations} "
                f"converged={result.converged} targets_within_tolerance={within}/{len(result.residuals)}"
            )
            print(f"wrote coefficients to {out}")
            return EXIT_OK

        if args.command == "validate-acc":
            if args.document is not None:
                documents = {str(args.document): load_acc(args.document)}
            else:
                config = _load_harness_config(args)
                if not config.acc_documents:
                    raise ConfigError("no ACC document given and config has no [acc] entries")
                documents = {
                    name: acc_from_dict(raw)
                    for name, raw in sorted(config.acc_documents.items())
                }
            any_findings = False
            for name, doc in documents.items():
                report = validate_acc(doc)
                if report.valid:
                    print(f"{name}: valid (all 14 fields present and consistent)")
                    continue
                any_findings = True
                for finding in report.findings:
                    print(f"{name}: [{finding.kind}] {finding.field}: {finding.message}")
            return EXIT_VERDICT_FAILURE if (args.strict and any_findings) else EXIT_OK

        if args.command == "report":
            config = _load_harness_config(args)
            report = ExperimentReport.from_json(args.input.read_text())
            paths = emit_report(report, args.format, config.out_dir)
            for p in paths:
                print(f"wrote {p}")
            return EXIT_OK

    except (ConfigError, TaskSpecError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    parser.error(f"unknown command: {args.command}")
    return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
