import numpy as np
import pytest

from prdp import Dataset, make_budget

# The worked-example configuration: inverse budget, alpha 1e4, U = 1.28e9,
# eps_hat = 4.096, so eps_min = 7.8125e-6 and the partition has 19 domains.
FIG2_ALPHA = 1e4
FIG2_U = 1_280_000_000
FIG2_EPS_HAT = 4.096
FIG2_EPS_MIN = 7.8125e-6

# The evaluation defaults: U = 1e12, eps_hat = 100, inverse alpha 1e4.
EVAL_U = 10**12
EVAL_EPS_HAT = 100.0


@pytest.fixture(scope="session")
def fig2_budget():
    return make_budget("inverse", {"alpha": FIG2_ALPHA}, FIG2_U, FIG2_EPS_HAT)


@pytest.fixture(scope="session")
def eval_budget():
    return make_budget("inverse", {"alpha": 1e4}, EVAL_U, EVAL_EPS_HAT)


def values_in_domain(budget, i, count):
    """`count` integer values whose budget falls in domain i (mid-domain)."""
    part = budget.partition
    target = 1.5 * part.floor(i)
    if i == part.size:
        target = min(target, budget.eps_max)
    v = int(budget.param / target)
    assert part.index(float(budget.value_budgets(v))) == i
    return np.full(count, v, dtype=np.int64)


def dataset_like_fig2(budget, counts_12_to_19=(1730, 4050, 2390, 1040, 490, 200, 70, 30)):
    """10k records spread over domains 12..19 of the worked-example partition."""
    parts = [values_in_domain(budget, 12 + j, c)
             for j, c in enumerate(counts_12_to_19)]
    return Dataset.from_values(np.concatenate(parts), budget.bound)
