"""Command-line interface.

Subcommands cover the full workflow: generate or simulate synthetic
curves, ingest raw training logs, fit parameters, sanity-check recovery,
and render comparison reports.  Exit codes: 0 success, 1 a threshold
check failed, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataio, reporting
from .errors import (
    DivergenceError,
    NormalizationError,
    ParseError,
    ValidationError,
)
from .estimator import (
    RECOVERY_THRESHOLDS,
    FitConfig,
    fit_with_restarts,
    recovery_experiment,
)
from .model import TaskSet, simulate_all
from .scenarios import ScenarioSpec, generate as generate_scenario


def _cmd_simulate(args) -> int:
    p_tasks, params = dataio.parse_params(args.params)
    c_tasks, curriculum = dataio.parse_curriculum(args.curriculum)
    if p_tasks.names != c_tasks.names:
        raise ValidationError(
            "params and curriculum disagree on tasks: "
            f"{list(p_tasks.names)} vs {list(c_tasks.names)}"
        )
    curves = simulate_all(params, curriculum)
    dataio.write_curves(args.out, p_tasks, curves)
    return 0


def _cmd_generate(args) -> int:
    spec = ScenarioSpec(
        n_tasks=args.tasks,
        n_algos=args.algos,
        curriculum_len=args.length,
        seed=args.seed,
        noise_std=args.noise,
    )
    params, curriculum, data = generate_scenario(spec)
    taskset = TaskSet(names=tuple(f"task{j + 1}" for j in range(spec.n_tasks)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_params(out / "params.json", taskset, params)
    dataio.write_curriculum(out / "curriculum.json", taskset, curriculum)
    dataio.write_curves(out / "curves.csv", taskset, data)
    return 0


def _fit_config(args) -> FitConfig:
    scheme = {"uniform": "uniform-random"}.get(args.init, args.init)
    return FitConfig(
        steps=args.steps,
        learning_rate=args.lr,
        seed=args.seed,
        init_scheme=scheme,
    )


def _cmd_fit(args) -> int:
    taskset, curriculum, observed = dataio.load_dataset(args.data, args.curriculum)
    config = _fit_config(args)
    callback = None
    if args.progress:
        def callback(step, value, feasible):
            print(f"{step},{value!r}")
    result = fit_with_restarts(
        curriculum, observed, config, restarts=args.restarts, callback=callback
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_params(out / "estimates.json", taskset, result.params)
    dataio.write_curves(out / "predicted.csv", taskset, result.predicted)
    tables = [
        reporting.property_table([result.params]),
        reporting.transfer_table(result.params, taskset),
        reporting.difficulty_table(result.params, taskset),
    ]
    (out / "report.md").write_text(
        "\n".join(t.markdown() for t in tables), encoding="utf-8"
    )
    metrics = {
        "mse_total": result.loss_total,
        "mse_per_algorithm": result.loss_per_algorithm,
    }
    (out / "metrics.json").write_text(
        json.dumps(metrics, indent=2) + "\n", encoding="utf-8"
    )
    print(f"total MSE: {result.loss_total!r}")
    return 0


def _cmd_ingest(args) -> int:
    taskset, curriculum, logs = dataio.parse_raw_log(args.raw, args.boundaries)
    matrices = []
    for log in logs:
        mat = dataio.downsample_to_boundaries(log, taskset, curriculum)
        if args.normalize == "minmax":
            mat = dataio.normalize_minmax(mat, per_task=True, task_names=taskset.names)
        matrices.append(mat)
    dataio.write_curves(args.out, taskset, matrices)
    if args.curriculum_out:
        dataio.write_curriculum(args.curriculum_out, taskset, curriculum)
    return 0


def _cmd_recover_check(args) -> int:
    config = FitConfig(steps=args.steps, learning_rate=args.lr)
    result = recovery_experiment(
        n_tasks=args.tasks,
        n_algos=args.algos,
        curriculum_len=args.length,
        trials=args.trials,
        config=config,
        seed=args.seed,
        jobs=args.jobs,
        init_at_truth=args.init_at_truth,
    )
    if result.n_succeeded == 0:
        print("error: every recovery trial diverged", file=sys.stderr)
        return 3
    print("| parameter | mse | threshold | ok |")
    print("| --- | --- | --- | --- |")
    all_ok = True
    for key, bound in RECOVERY_THRESHOLDS.items():
        mse = result.mse[key]
        ok = mse <= bound
        all_ok = all_ok and ok
        print(f"| {key} | {mse:.4f} | {bound} | {'yes' if ok else 'no'} |")
    if result.failures:
        print(f"\nskipped {len(result.failures)} diverged trial(s) "
              f"of {result.trials}")
    print(f"\n{'PASS' if all_ok else 'FAIL'} "
          f"({result.n_succeeded}/{result.trials} trials)")
    return 0 if all_ok else 1


def _cmd_report(args) -> int:
    if len(args.estimates) != len(args.labels):
        raise ValidationError(
            f"{len(args.estimates)} estimate files but {len(args.labels)} labels"
        )
    estimates = {}
    for label, path in zip(args.labels, args.estimates):
        if label in estimates:
            raise ValidationError(f"duplicate label {label!r}")
        _, params = dataio.parse_params(path)
        estimates[label] = params
    table = reporting.comparison_table(estimates, args.param)
    out = Path(args.out)
    out.write_text(table.markdown(), encoding="utf-8")
    out.with_suffix(".json").write_text(table.to_json(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentperf",
        description="Latent-parameter modeling of lifelong learning curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="roll the forward model out to a curves CSV")
    p.add_argument("--params", required=True, help="params JSON file")
    p.add_argument("--curriculum", required=True, help="curriculum JSON file")
    p.add_argument("--out", required=True, help="output curves CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("generate", help="sample a synthetic scenario bundle")
    p.add_argument("--tasks", type=int, default=5)
    p.add_argument("--algos", type=int, default=3)
    p.add_argument("--length", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("fit", help="estimate parameters from observed curves")
    p.add_argument("--data", required=True, help="curves CSV file")
    p.add_argument("--curriculum", required=True, help="curriculum JSON file")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument(
        "--init",
        choices=("uniform", "uniform-random", "identity-biased"),
        default="uniform-random",
    )
    p.add_argument("--progress", action="store_true",
                   help="stream 'step,loss' lines while optimizing")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("ingest", help="downsample a raw training log for fitting")
    p.add_argument("--raw", required=True, help="raw metrics CSV")
    p.add_argument("--boundaries", required=True, help="phase boundaries JSON")
    p.add_argument("--normalize", choices=("minmax", "none"), default="minmax")
    p.add_argument("--out", required=True, help="output curves CSV")
    p.add_argument("--curriculum-out", default=None,
                   help="also write the curriculum implied by the boundaries")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("recover-check",
                       help="synthetic ground-truth recovery sanity check")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tasks", type=int, default=5)
    p.add_argument("--algos", type=int, default=3)
    p.add_argument("--length", type=int, default=9)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--init-at-truth", action="store_true",
                   help="start each fit at the sampled truth (degenerate check)")
    p.set_defaults(func=_cmd_recover_check)

    p = sub.add_parser("report", help="compare estimates across datasets")
    p.add_argument("--estimates", nargs="+", required=True,
                   help="params JSON files, one per dataset")
    p.add_argument("--labels", nargs="+", required=True,
                   help="dataset labels, same order as --estimates")
    p.add_argument("--param", choices=("gamma", "h", "lambda"), required=True)
    p.add_argument("--out", required=True, help="output Markdown file")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, NormalizationError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
