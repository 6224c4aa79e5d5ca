"""Per-record DP counting via budget-domain partitioning.

One noisy count per budget domain, calibrated to that domain's floor budget;
the first domain whose noisy count clears its threshold fixes the budget
threshold eps_tau, and the estimate sums the noisy counts from that domain
up. Runs in O(n): a single pass assigns each record to exactly one domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BudgetFunction, Dataset, DomainPartition
from .noise import NoiseSource


@dataclass(frozen=True)
class CountRun:
    """Full trace of one counting run (the replayable aggregation state)."""

    noisy_counts: np.ndarray
    thresholds: np.ndarray
    selected: int        # first passing domain (1-based); L when none passes
    eps_tau: float       # floor budget of the selected domain
    estimate: float


def threshold(partition: DomainPartition, i: int, beta: float) -> float:
    """Pass threshold of domain i: ln(L / beta) / floor_i."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return math.log(partition.size / beta) / partition.floor(i)


def thresholds(partition: DomainPartition, beta: float) -> np.ndarray:
    """All L thresholds; halve exactly from one domain to the next."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return math.log(partition.size / beta) / partition.floors


def exact_domain_counts(dataset: Dataset, budget: BudgetFunction) -> np.ndarray:
    """Exact per-domain record counts (non-private helper; one pass)."""
    part = budget.partition
    if dataset.n == 0:
        return np.zeros(part.size)
    idx = part.index_many(budget.budgets(dataset))
    return np.bincount(idx - 1, minlength=part.size).astype(float)


def noisy_domain_counts(dataset: Dataset, budget: BudgetFunction,
                        noise: NoiseSource) -> np.ndarray:
    """Per-domain counts plus Laplace noise at scale 1/floor_i.

    Each record contributes to exactly one domain, and the scale used for
    its domain never exceeds 1/E(r) (the calibration invariant behind
    parallel composition across disjoint domains).
    """
    part = budget.partition
    return exact_domain_counts(dataset, budget) + noise.laplace(1.0 / part.floors)


def select_and_aggregate(noisy_counts, thresholds_, partition: DomainPartition) -> CountRun:
    """Pure aggregation step: pick the first passing domain and sum from it.

    Deterministic given its inputs; this is the replay entry point. The
    estimate uses correctly-rounded summation (math.fsum) so replays are
    bit-exact regardless of domain count.
    """
    noisy = np.asarray(noisy_counts, dtype=float)
    thr = np.asarray(thresholds_, dtype=float)
    if noisy.shape != thr.shape or noisy.ndim != 1:
        raise ValueError("noisy counts and thresholds must be equal-length vectors")
    if noisy.shape[0] != partition.size:
        raise ValueError("vector length does not match partition size")
    passing = np.nonzero(noisy >= thr)[0]
    selected = int(passing[0]) + 1 if passing.size else partition.size
    estimate = math.fsum(noisy[selected - 1:])
    return CountRun(noisy_counts=noisy, thresholds=thr, selected=selected,
                    eps_tau=partition.floor(selected), estimate=estimate)


def prdp_count(dataset: Dataset, budget: BudgetFunction, beta: float,
               noise: NoiseSource) -> CountRun:
    """Per-record DP count of |D|.

    With probability >= 1 - beta the returned eps_tau is at least half the
    smallest budget present in the data, and the estimate misses the true
    count by O(ln(L/beta) / eps_min(D)).

    Args:
        dataset: input records.
        budget: per-record budget function.
        beta: failure rate in (0, 1).
        noise: single-owner noise source for this run.
    """
    part = budget.partition
    noisy = noisy_domain_counts(dataset, budget, noise)
    return select_and_aggregate(noisy, thresholds(part, beta), part)
