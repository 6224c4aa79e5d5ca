import numpy as np
import pytest

from prdp import Dataset, Record, evaluate_budget
from prdp.oracles import (downward_diff_exhaustive, downward_diff_oracle,
                          eps_min_oracle)


def ds_of(values, bound):
    return Dataset.from_values(np.asarray(values, dtype=np.int64), bound)


def test_eps_min_oracle(fig2_budget):
    assert eps_min_oracle(ds_of([100, 50], fig2_budget.bound), fig2_budget) == 4.096
    assert eps_min_oracle(ds_of([fig2_budget.bound], fig2_budget.bound),
                          fig2_budget) == fig2_budget.eps_min
    mixed = ds_of([100, 2_500_000, 10_000_000], fig2_budget.bound)
    scan = min(evaluate_budget(fig2_budget, Record((int(v),)))
               for v in mixed.values)
    assert eps_min_oracle(mixed, fig2_budget) == scan
    with pytest.raises(ValueError):
        eps_min_oracle(ds_of([], 100), fig2_budget)


def test_downward_diff_closed_forms():
    assert downward_diff_oracle(ds_of([1] * 100, 10), "count", 5) == 5.0
    assert downward_diff_oracle(ds_of([10, 7, 3], 100), "sum", 2) == 17.0
    assert downward_diff_oracle(ds_of([10, 7, 3], 100), "max", 1) == 3.0
    assert downward_diff_oracle(ds_of([5], 100), "max", 2) == 5.0  # empty rest
    with pytest.raises(ValueError):
        downward_diff_oracle(ds_of([1], 10), "count", 0)
    with pytest.raises(ValueError):
        downward_diff_oracle(ds_of([1], 10), "median", 1)


def test_downward_diff_matches_exhaustive():
    rng = np.random.Generator(np.random.Philox(key=2))
    for case in range(30):
        n = int(rng.integers(1, 13))
        ds = ds_of(rng.integers(0, 100, size=n), 100)
        for rho in (1, 2, 3):
            for query in ("count", "sum", "max"):
                closed = downward_diff_oracle(ds, query, rho)
                brute = downward_diff_exhaustive(ds, query, rho)
                assert closed == brute, (query, rho, list(ds.values))
