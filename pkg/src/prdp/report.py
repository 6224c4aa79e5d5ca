"""Report serialisation: versioned JSON, CSV flattening, and figure rendering.

The JSON report is the canonical artifact; the CSV holds one row per trial
for downstream tooling, and the figures give a quick visual read of the
per-trial error spread, the estimate distribution against the true answer,
and the selected budget thresholds against the oracle minimum.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import ExperimentReport  # noqa: E402

_CSV_COLUMNS = ("trial", "seed", "estimate", "abs_error", "relative_error",
                "rank_error", "relative_rank_error", "eps_tau", "runtime_s",
                "failed", "reason")


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_to_dict(report: ExperimentReport) -> dict:
    out = dataclasses.asdict(report)
    out["eps_min"] = _jsonable(report.eps_min)
    for trial in out["trials"]:
        for k, v in trial.items():
            if isinstance(v, float):
                trial[k] = _jsonable(v)
    return out


def write_json(report: ExperimentReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n",
                    encoding="utf-8")
    return path


def write_csv(report: ExperimentReport, path) -> Path:
    """Flatten per-trial results to comma-separated rows (one per trial)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_COLUMNS)
        for t in report.trials:
            writer.writerow([t.index, t.seed, t.estimate, t.abs_error,
                             t.relative_error, t.rank_error,
                             t.relative_rank_error, t.eps_tau,
                             t.runtime_s, int(t.failed), t.reason or ""])
    return path


def render_figures(report: ExperimentReport, directory) -> list[Path]:
    """Render PNG figures for a report; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ok = [t for t in report.trials if not t.failed]
    written: list[Path] = []
    query = report.config["query"]

    if query == "max":
        errors = [t.relative_rank_error for t in ok]
        label = "relative rank error"
        key = "trimmed_mean_relative_rank_error"
    else:
        errors = [t.relative_error for t in ok if t.relative_error is not None]
        label = "relative error"
        key = "trimmed_mean_relative_error"

    if errors:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(range(len(errors)), errors, "o", ms=4, alpha=0.7)
        if key in report.summary:
            ax.axhline(report.summary[key], color="C3", lw=1.2,
                       label=f"20/20 trimmed mean = {report.summary[key]:.4g}")
            ax.legend()
        if max(errors) > 0 and max(errors) / max(min(e for e in errors if e > 0),
                                                 1e-300) > 100:
            ax.set_yscale("log")
        ax.set_xlabel("trial")
        ax.set_ylabel(label)
        ax.set_title(f"{report.config['method']} / {query}: per-trial {label}")
        fig.tight_layout()
        out = directory / "errors.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    estimates = [t.estimate for t in ok if t.estimate is not None]
    if estimates:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.hist(estimates, bins=min(30, max(5, len(estimates) // 2)),
                color="C0", alpha=0.75)
        ax.axvline(report.truth, color="C3", lw=1.5, label=f"truth = {report.truth:g}")
        ax.set_xlabel("estimate")
        ax.set_ylabel("trials")
        ax.set_title(f"{report.config['method']} / {query}: estimates")
        ax.legend()
        fig.tight_layout()
        out = directory / "estimates.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    taus = [t.eps_tau for t in ok if t.eps_tau is not None]
    if taus:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(range(len(taus)), taus, "o", ms=4, alpha=0.7, label="eps_tau")
        if math.isfinite(report.eps_min):
            ax.axhline(report.eps_min, color="C3", lw=1.2,
                       label=f"eps_min(D) oracle = {report.eps_min:.3g}")
        ax.set_yscale("log")
        ax.set_xlabel("trial")
        ax.set_ylabel("budget threshold")
        ax.set_title("selected budget threshold per trial")
        ax.legend()
        fig.tight_layout()
        out = directory / "eps_tau.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    return written
