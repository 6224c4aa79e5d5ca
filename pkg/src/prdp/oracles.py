"""Non-private evaluation oracles used by the harness and the test suite.

Everything here reads raw data directly and must never feed back into a
mechanism's output path; oracles exist to label reports (true minimum
budget), to cross-check closed forms against brute force, and to evaluate
the sum-extension error bound term by term.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .core import BudgetFunction, Dataset
from .counting import exact_domain_counts
from .sumext import sum_scales


def eps_min_oracle(dataset: Dataset, budget: BudgetFunction) -> float:
    """Exact smallest budget among records present (NON-PRIVATE, evaluation only)."""
    if dataset.n == 0:
        raise ValueError("eps_min is undefined on an empty dataset")
    return float(budget.budgets(dataset).min())


def _query_value(kind: str, values: np.ndarray) -> float:
    if kind == "count":
        return float(values.size)
    if kind == "sum":
        return float(values.sum()) if values.size else 0.0
    if kind == "max":
        return float(values.max()) if values.size else 0.0
    raise ValueError(f"unsupported query {kind!r}")


def downward_diff_oracle(dataset: Dataset, query: str, rho: int) -> float:
    """Max |Q(D') - Q(D)| over deletions of up to rho records (closed forms).

    count: min(rho, n). sum: the rho largest values. max: drop after
    deleting the top rho records (the max of an empty set is taken as 0).
    """
    if rho < 1:
        raise ValueError("rho must be >= 1")
    values = dataset.values
    n = values.size
    k = min(rho, n)
    if query == "count":
        return float(k)
    if query == "sum":
        top = np.sort(values)[n - k:] if k else np.array([])
        return float(top.sum())
    if query == "max":
        if n == 0:
            return 0.0
        rest = np.sort(values)[: n - k]
        new_max = float(rest.max()) if rest.size else 0.0
        return float(values.max()) - new_max
    raise ValueError(f"unsupported query {query!r}")


def downward_diff_exhaustive(dataset: Dataset, query: str, rho: int) -> float:
    """Same quantity by enumerating every deletion subset (n <= 20 only)."""
    if dataset.n > 20:
        raise ValueError("exhaustive enumeration is limited to n <= 20")
    values = dataset.values
    base = _query_value(query, values)
    worst = 0.0
    idx = range(dataset.n)
    for k in range(1, min(rho, dataset.n) + 1):
        for gone in combinations(idx, k):
            keep = np.delete(values, gone)
            worst = max(worst, abs(_query_value(query, keep) - base))
    return worst


def appendix_a_bound(dataset: Dataset, budget: BudgetFunction, beta: float,
                     ell: int) -> float:
    """Two-part error bound for the sum extension, evaluated term by term.

    First part: 2 * s_i * ln(L/beta) for every non-empty domain below ell
    (empty domains cost nothing to drop). Second part: s_i * ln(L/beta)
    for every retained domain i >= ell, empty or not (noise is added there
    regardless).
    """
    part = budget.partition
    if not 1 <= ell <= part.size:
        raise ValueError(f"ell must lie in 1..{part.size}")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    scales = sum_scales(budget)
    counts = exact_domain_counts(dataset, budget)
    lnf = math.log(part.size / beta)
    excluded = sum(2.0 * scales[i] * lnf
                   for i in range(ell - 1) if counts[i] > 0)
    retained = sum(scales[i] * lnf for i in range(ell - 1, part.size))
    return excluded + retained
