"""Experiment orchestration: repeated seeded trials, trimmed metrics, reports.

Mirrors the evaluation protocol: a fixed dataset, `trials` independent runs
with sub-seeded noise, relative error against the exact query answer (rank
error against the full dataset for max queries), and a 20/20 trimmed mean
over trials. Trials may run concurrently (each owns its noise source); the
worker count comes from the config or the PRDP_WORKERS environment variable.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import BudgetFunction, Dataset, make_budget
from .counting import prdp_count
from .datagen import GeneratorSpec, generate, load_csv
from .errors import ConfigError, IncompatibleQueryError, MechanismRequirementError
from .framework import prdp_framework
from .local import LdpClippedSum, LdpCount, prldp_count, prldp_framework
from .mechanisms import (QUERIES, default_mechanism, make_mechanism,
                         naive_baseline)
from .noise import NoiseSource, derive_seed
from .oracles import eps_min_oracle
from .sumext import prdp_sum_extension

METHODS = ("prdp-count", "prdp-ext", "prdp-framework",
           "prldp-count", "prldp-framework", "naive")

_COMPATIBLE = {
    "prdp-count": {"count"},
    "prdp-ext": {"sum"},
    "prdp-framework": {"count", "sum", "max", "distinct"},
    "prldp-count": {"count"},
    "prldp-framework": {"count", "sum"},
    "naive": {"count", "sum", "max", "distinct"},
}

TRIM_FRACTION = 0.2


@dataclass(frozen=True)
class CsvSource:
    path: str
    value_column: str
    key_column: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    query: str
    method: str
    budget_kind: str
    budget_params: dict
    bound: int
    eps_hat: float
    beta: float = 0.1
    trials: int = 50
    seed: int = 0
    source: GeneratorSpec | CsvSource | None = None
    mechanism: str | None = None
    zero_noise: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.query not in QUERIES:
            raise ConfigError(f"unknown query {self.query!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("beta must lie in (0, 1)")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.source is None:
            raise ConfigError("a dataset source (generator spec or CSV) is required")

    def check_compatibility(self):
        if self.query not in _COMPATIBLE[self.method]:
            raise IncompatibleQueryError(
                f"{self.method} does not support query {self.query!r} (N.A.)")


@dataclass
class TrialResult:
    index: int
    seed: int | None
    runtime_s: float
    estimate: float | None = None
    eps_tau: float | None = None
    abs_error: float | None = None
    relative_error: float | None = None
    rank_error: int | None = None
    relative_rank_error: float | None = None
    failed: bool = False
    reason: str | None = None


@dataclass
class ExperimentReport:
    schema_version: int
    config: dict
    n: int
    domains: int
    truth: float
    eps_min: float          # oracle value, non-private, evaluation label only
    trials: list[TrialResult]
    summary: dict = field(default_factory=dict)


def trimmed_mean(values, fraction: float = TRIM_FRACTION) -> float:
    """Mean after removing floor(fraction * len) items from each end."""
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("trimmed_mean of empty sequence")
    k = int(math.floor(fraction * arr.size))
    kept = arr[k: arr.size - k]
    if kept.size == 0:
        raise ValueError("trim fraction removes every value")
    return float(kept.mean())


def _truth(dataset: Dataset, query: str) -> float:
    if query == "count":
        return float(dataset.n)
    if query == "sum":
        return float(dataset.values.sum()) if dataset.n else 0.0
    if query == "max":
        return float(dataset.values.max()) if dataset.n else 0.0
    return float(np.unique(dataset.keys).size) if dataset.n else 0.0


def rank_error(dataset: Dataset, output: float) -> int:
    """Records of the full dataset strictly above the returned max value."""
    return int((dataset.values > output).sum())


def load_dataset(config: ExperimentConfig) -> tuple[Dataset, dict]:
    """Materialise the configured source; returns (dataset, source metadata)."""
    src = config.source
    if isinstance(src, GeneratorSpec):
        return generate(src), {}
    loaded = load_csv(src.path, src.value_column, config.bound, src.key_column)
    return loaded.dataset, {"rows_total": loaded.rows_total,
                            "rows_dropped": loaded.rows_dropped}


def build_budget(config: ExperimentConfig) -> BudgetFunction:
    return make_budget(config.budget_kind, config.budget_params,
                       config.bound, config.eps_hat)


def _run_once(config: ExperimentConfig, dataset: Dataset, budget: BudgetFunction,
              noise: NoiseSource) -> tuple[float, float | None]:
    """One mechanism invocation; returns (estimate, eps_tau-or-None)."""
    method, query, beta = config.method, config.query, config.beta
    if method == "prdp-count":
        run = prdp_count(dataset, budget, beta, noise)
        return run.estimate, run.eps_tau
    if method == "prdp-ext":
        run = prdp_sum_extension(dataset, budget, beta, noise)
        return run.estimate, run.eps_tau
    if method == "prdp-framework":
        name = config.mechanism
        mech = make_mechanism(name, query) if name else default_mechanism(query)
        run = prdp_framework(dataset, budget, beta, mech, noise)
        return run.estimate, run.eps_tau
    if method == "prldp-count":
        run = prldp_count(dataset, budget, beta, noise)
        return run.estimate, run.eps_tau
    if method == "prldp-framework":
        mech = LdpCount() if query == "count" else LdpClippedSum(budget)
        run = prldp_framework(dataset, budget, beta, mech, noise)
        return run.estimate, run.eps_tau
    # naive: the query's standard mechanism at the global minimum budget
    name = config.mechanism
    mech = make_mechanism(name, query) if name else None
    return naive_baseline(dataset, budget, query, beta, noise, mechanism=mech), None


def _run_trial(config: ExperimentConfig, dataset: Dataset, budget: BudgetFunction,
               truth: float, index: int) -> TrialResult:
    if config.zero_noise:
        noise, seed = NoiseSource.zero(), None
    else:
        seed = derive_seed(config.seed, index)
        noise = NoiseSource.seeded(seed)
    start = time.perf_counter()
    try:
        estimate, eps_tau = _run_once(config, dataset, budget, noise)
    except MechanismRequirementError as exc:
        return TrialResult(index=index, seed=seed,
                           runtime_s=time.perf_counter() - start,
                           failed=True, reason=str(exc))
    runtime = time.perf_counter() - start
    result = TrialResult(index=index, seed=seed, runtime_s=runtime,
                         estimate=float(estimate), eps_tau=eps_tau)
    if config.query == "max":
        result.rank_error = rank_error(dataset, estimate)
        result.relative_rank_error = result.rank_error / dataset.n if dataset.n else 0.0
        result.abs_error = abs(estimate - truth)
    else:
        result.abs_error = abs(estimate - truth)
        result.relative_error = result.abs_error / abs(truth) if truth != 0 else None
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all trials and assemble the report (deterministic per config+seed)."""
    config.check_compatibility()
    dataset, source_info = load_dataset(config)
    budget = build_budget(config)
    truth = _truth(dataset, config.query)

    workers = config.workers
    if workers is None:
        workers = int(os.environ.get("PRDP_WORKERS", "1"))
    workers = max(1, workers)

    indices = range(config.trials)
    if workers == 1:
        trials = [_run_trial(config, dataset, budget, truth, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(
                lambda i: _run_trial(config, dataset, budget, truth, i), indices))

    config_dict = _config_dict(config)
    config_dict["source"].update(source_info)
    report = ExperimentReport(
        schema_version=1,
        config=config_dict,
        n=dataset.n,
        domains=budget.partition.size,
        truth=truth,
        eps_min=eps_min_oracle(dataset, budget) if dataset.n else float("nan"),
        trials=trials,
    )
    report.summary = _summarise(config, trials)
    return report


def _summarise(config: ExperimentConfig, trials: list[TrialResult]) -> dict:
    ok = [t for t in trials if not t.failed]
    summary: dict[str, Any] = {
        "trials": len(trials),
        "failed_trials": len(trials) - len(ok),
        "trim_fraction": TRIM_FRACTION,
        "trim_each_end": int(math.floor(TRIM_FRACTION * len(trials))),
    }
    if not ok:
        summary["note"] = "all trials failed: " + (trials[0].reason or "unknown")
        return summary
    summary["trimmed_mean_runtime_s"] = trimmed_mean([t.runtime_s for t in ok])
    if config.query == "max":
        summary["trimmed_mean_relative_rank_error"] = trimmed_mean(
            [t.relative_rank_error for t in ok])
    else:
        res = [t.relative_error for t in ok]
        if all(r is not None for r in res):
            summary["trimmed_mean_relative_error"] = trimmed_mean(res)
    summary["trimmed_mean_abs_error"] = trimmed_mean([t.abs_error for t in ok])
    taus = [t.eps_tau for t in ok if t.eps_tau is not None]
    if taus:
        summary["eps_tau"] = {"min": min(taus), "median": float(np.median(taus)),
                              "max": max(taus)}
    if len(ok) < len(trials):
        summary["note"] = trials[[t.failed for t in trials].index(True)].reason
    return summary


def _config_dict(config: ExperimentConfig) -> dict:
    src = config.source
    if isinstance(src, GeneratorSpec):
        source = {"type": "generator", "kind": src.kind, "n": src.n,
                  "seed": src.seed, "mu": src.mu, "sigma": src.sigma,
                  "a": src.a, "b": src.b}
    else:
        source = {"type": "csv", "path": str(src.path),
                  "value_column": src.value_column, "key_column": src.key_column}
    return {
        "query": config.query, "method": config.method,
        "budget": {"kind": config.budget_kind,
                   "params": {k: v for k, v in config.budget_params.items()
                              if not callable(v)}},
        "bound": config.bound, "eps_hat": config.eps_hat, "beta": config.beta,
        "trials": config.trials, "seed": config.seed,
        "mechanism": config.mechanism, "zero_noise": config.zero_noise,
        "source": source,
    }
