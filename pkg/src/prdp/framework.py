"""General framework lifting any standard DP mechanism to per-record budgets.

Two phases, each holding half of every record's budget. Phase 1 runs the
partitioned count under the halved budget function (failure rate beta/2) to
pick a budget threshold eps_tau and the first heavy domain. Phase 2 drops
every record whose domain index falls below that domain and runs the chosen
standard mechanism on the remainder with budget eps_tau/2 (failure rate
beta/2). Record-wise accounting: E(r)/2 spent in phase 1, plus eps_tau/2 <=
E(r)/2 in phase 2 for retained records, totalling at most E(r).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import BudgetFunction, Dataset
from .counting import CountRun, prdp_count
from .mechanisms import DpMechanism
from .noise import NoiseSource


@dataclass(frozen=True)
class FrameworkRun:
    """Trace of one framework run."""

    count_run: CountRun    # phase-1 trace (under the halved budget function)
    eps_tau: float         # phase-1 output, on the halved scale
    selected: int          # first heavy domain index
    retained: Dataset      # records with domain index >= selected
    estimate: float


def prdp_framework(dataset: Dataset, budget: BudgetFunction, beta: float,
                   mechanism: DpMechanism, noise: NoiseSource) -> FrameworkRun:
    """Answer ``mechanism``'s query under per-record budgets.

    Args:
        dataset: input records.
        budget: per-record budget function (full, unhalved).
        beta: overall failure rate in (0, 1); each phase gets beta/2.
        mechanism: standard DP mechanism for the query.
        noise: single-owner noise source, consumed by both phases in order.

    Raises:
        MechanismRequirementError: surfaced from the mechanism (e.g. the
            retained dataset is smaller than its minimum n); never silently
            degraded.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    halved = budget.halved()
    run1 = prdp_count(dataset, halved, beta / 2.0, noise)

    # Same partition indices under E and E/2 (both floors halve), so
    # retention can be decided on the original budgets.
    part = budget.partition
    if dataset.n:
        idx = part.index_many(budget.budgets(dataset))
        retained = dataset.select(idx >= run1.selected)
    else:
        retained = dataset

    estimate = mechanism.run(retained, run1.eps_tau / 2.0, beta / 2.0, noise)
    return FrameworkRun(count_run=run1, eps_tau=run1.eps_tau,
                        selected=run1.selected, retained=retained,
                        estimate=float(estimate))
