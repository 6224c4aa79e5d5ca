"""Command-line entry point.

    prdp run --query count --method prdp-count --budget inverse:alpha=1e4 \
        --u 1e12 --eps-hat 100 --beta 0.1 --trials 50 --seed 7 \
        --gen normal:mu=5e4,sigma=5e4,n=2e5 --out report.json

Exit codes: 0 success, 2 configuration error, 3 method/query incompatibility.
The dataset comes either from a generator spec (--gen) or a CSV file
(--csv + --value-col [+ --key-col]). --out writes the JSON report;
--out-csv adds the per-trial CSV flattening and --figures renders PNG
figures next to it. `prdp plot` re-renders figures from a saved report.
"""

from __future__ import annotations

import argparse
import json
import sys

from .datagen import GeneratorSpec
from .errors import ConfigError, IncompatibleQueryError, PrdpError
from .harness import (METHODS, CsvSource, ExperimentConfig, run_experiment)
from .mechanisms import MECHANISM_NAMES, QUERIES

EXIT_CONFIG = 2
EXIT_INCOMPATIBLE = 3


def _parse_kv_spec(text: str, what: str) -> tuple[str, dict[str, float]]:
    """Parse 'name:key=val,key=val' specs such as inverse:alpha=1e4."""
    name, _, rest = text.partition(":")
    if not name:
        raise ConfigError(f"empty {what} spec")
    params: dict[str, float] = {}
    if rest:
        for piece in rest.split(","):
            key, sep, val = piece.partition("=")
            if not sep:
                raise ConfigError(f"bad {what} parameter {piece!r} (expected key=value)")
            try:
                params[key.strip()] = float(val)
            except ValueError as exc:
                raise ConfigError(f"bad {what} value {val!r}") from exc
    return name, params


def _generator_spec(text: str, bound: int, seed: int) -> GeneratorSpec:
    kind, params = _parse_kv_spec(text, "generator")
    n = int(params.pop("n", 0))
    if kind == "normal":
        return GeneratorSpec(kind="normal", n=n, bound=bound, seed=seed,
                             mu=params.pop("mu", 0.0), sigma=params.pop("sigma", 0.0))
    if kind == "zipf":
        return GeneratorSpec(kind="zipf", n=n, bound=bound, seed=seed,
                             a=params.pop("a", 0.0), b=params.pop("b", 0.0))
    raise ConfigError(f"unknown generator kind {kind!r} (normal or zipf)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prdp",
        description="Per-record differential privacy experiment harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment and write a report")
    run.add_argument("--query", required=True, choices=QUERIES)
    run.add_argument("--method", required=True, choices=METHODS)
    run.add_argument("--budget", default="inverse:alpha=1e4",
                     help="budget spec, e.g. inverse:alpha=1e4 | log:c=500 | sqrt:c=8")
    run.add_argument("--u", type=float, default=1e12,
                     help="global value bound U (default 1e12)")
    run.add_argument("--eps-hat", type=float, default=100.0,
                     help="global maximum budget (default 100)")
    run.add_argument("--beta", type=float, default=0.1)
    run.add_argument("--trials", type=int, default=50)
    run.add_argument("--seed", type=int, default=0)
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", help="generator spec, e.g. normal:mu=5e4,sigma=5e4,n=2e5")
    src.add_argument("--csv", help="CSV dataset path (header row required)")
    run.add_argument("--value-col", help="value column name (with --csv)")
    run.add_argument("--key-col", help="optional categorical key column (with --csv)")
    run.add_argument("--mechanism", choices=MECHANISM_NAMES,
                     help="standard mechanism override for framework/naive methods")
    run.add_argument("--out", help="JSON report output path")
    run.add_argument("--out-csv", help="per-trial CSV output path")
    run.add_argument("--figures", metavar="DIR",
                     help="render PNG figures into this directory")
    run.add_argument("--workers", type=int, default=None,
                     help="parallel trial workers (default: env PRDP_WORKERS or 1)")
    run.add_argument("--unsafe-zero-noise", action="store_true",
                     help="zero-noise test double; NOT private, testing only")

    plot = sub.add_parser("plot", help="render figures from a saved JSON report")
    plot.add_argument("report", help="report JSON path")
    plot.add_argument("--out-dir", default="figures")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    bound = int(args.u)
    if args.gen:
        source = _generator_spec(args.gen, bound, args.seed)
    else:
        if not args.value_col:
            raise ConfigError("--csv requires --value-col")
        source = CsvSource(path=args.csv, value_column=args.value_col,
                           key_column=args.key_col)
    kind, params = _parse_kv_spec(args.budget, "budget")
    return ExperimentConfig(
        query=args.query, method=args.method, budget_kind=kind,
        budget_params=params, bound=bound, eps_hat=args.eps_hat,
        beta=args.beta, trials=args.trials, seed=args.seed, source=source,
        mechanism=args.mechanism, zero_noise=args.unsafe_zero_noise,
        workers=args.workers)


def _cmd_run(args) -> int:
    from . import report as report_mod

    config = _config_from_args(args)
    report = run_experiment(config)

    summary = report.summary
    print(f"method={config.method} query={config.query} n={report.n} "
          f"domains={report.domains} trials={config.trials}")
    if "rows_dropped" in report.config["source"]:
        src = report.config["source"]
        print(f"ingested {src['rows_total']} rows, dropped {src['rows_dropped']}")
    print(f"truth={report.truth:g} eps_min(D)={report.eps_min:g} (oracle, non-private)")
    for key in ("trimmed_mean_relative_error", "trimmed_mean_relative_rank_error",
                "trimmed_mean_abs_error", "trimmed_mean_runtime_s"):
        if key in summary:
            print(f"{key}={summary[key]:.6g}")
    if summary.get("failed_trials"):
        print(f"failed_trials={summary['failed_trials']} ({summary.get('note')})")

    if args.out:
        path = report_mod.write_json(report, args.out)
        print(f"report written to {path}")
    if args.out_csv:
        path = report_mod.write_csv(report, args.out_csv)
        print(f"trial CSV written to {path}")
    if args.figures:
        for path in report_mod.render_figures(report, args.figures):
            print(f"figure written to {path}")
    return 0


def _cmd_plot(args) -> int:
    from . import report as report_mod
    from .harness import ExperimentReport, TrialResult

    try:
        payload = json.loads(open(args.report, encoding="utf-8").read())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.report}: {exc}") from exc
    trials = [TrialResult(**t) for t in payload["trials"]]
    report = ExperimentReport(
        schema_version=payload["schema_version"], config=payload["config"],
        n=payload["n"], domains=payload["domains"], truth=payload["truth"],
        eps_min=payload["eps_min"] if payload["eps_min"] is not None else float("nan"),
        trials=trials, summary=payload["summary"])
    for path in report_mod.render_figures(report, args.out_dir):
        print(f"figure written to {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_plot(args)
    except IncompatibleQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (ConfigError, PrdpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
