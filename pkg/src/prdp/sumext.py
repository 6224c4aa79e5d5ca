"""Direct extension of the partitioned counting mechanism to sum estimation.

Per-domain noisy sums replace noisy counts; the noise scale of domain i is
the largest value-to-budget ratio the domain can contain, which for a
monotone non-increasing budget function reduces to
``monotone_inverse(floor_i) / floor_i``. Non-monotone custom budgets must
supply explicit per-domain value bounds: the closed form does not apply and
silently falling back to U would hide the utility degradation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BudgetFunction, Dataset
from .noise import NoiseSource


@dataclass(frozen=True)
class SumRun:
    """Trace of one sum-extension run."""

    noisy_sums: np.ndarray
    scales: np.ndarray
    thresholds: np.ndarray
    selected: int
    eps_tau: float
    estimate: float


def domain_sum_scale(budget: BudgetFunction, i: int, value_bound: float | None = None) -> float:
    """Noise scale of domain i for sum queries.

    For builtin (monotone non-increasing) budgets this is
    ``monotone_inverse(floor_i) / floor_i``; it dominates v/E(r) for every
    record r the domain can contain. Custom budgets must pass the caller's
    per-domain maximum value as ``value_bound``.
    """
    floor = budget.partition.floor(i)
    if budget.has_monotone_inverse:
        return budget.monotone_inverse(floor) / floor
    if value_bound is None:
        raise ValueError("custom budget needs an explicit per-domain value bound")
    return float(value_bound) / floor


def sum_scales(budget: BudgetFunction, value_bounds=None) -> np.ndarray:
    """Per-domain sum noise scales for all L domains."""
    part = budget.partition
    if value_bounds is not None:
        bounds = np.asarray(value_bounds, dtype=float)
        if bounds.shape != (part.size,):
            raise ValueError(f"value_bounds must have length {part.size}")
        return bounds / part.floors
    return np.array([domain_sum_scale(budget, i) for i in range(1, part.size + 1)])


def exact_domain_sums(dataset: Dataset, budget: BudgetFunction) -> np.ndarray:
    """Exact per-domain sums of the primary value (non-private helper)."""
    part = budget.partition
    if dataset.n == 0:
        return np.zeros(part.size)
    idx = part.index_many(budget.budgets(dataset))
    return np.bincount(idx - 1, weights=dataset.values.astype(float),
                       minlength=part.size)


def prdp_sum_extension(dataset: Dataset, budget: BudgetFunction, beta: float,
                       noise: NoiseSource, value_bounds=None) -> SumRun:
    """Per-record DP sum of the primary value attribute.

    Same select-then-aggregate structure as the counting mechanism, with
    per-domain scales ``s_i`` and thresholds ``s_i * ln(L/beta)``.

    Args:
        dataset: input records.
        budget: per-record budget function.
        beta: failure rate in (0, 1).
        noise: single-owner noise source.
        value_bounds: per-domain maximum values (required for custom budgets).
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    part = budget.partition
    scales = sum_scales(budget, value_bounds)
    noisy = exact_domain_sums(dataset, budget) + noise.laplace(scales)
    thr = scales * math.log(part.size / beta)
    passing = np.nonzero(noisy >= thr)[0]
    selected = int(passing[0]) + 1 if passing.size else part.size
    estimate = math.fsum(noisy[selected - 1:])
    return SumRun(noisy_sums=noisy, scales=scales, thresholds=thr,
                  selected=selected, eps_tau=part.floor(selected), estimate=estimate)
