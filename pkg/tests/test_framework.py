import numpy as np
import pytest

from prdp import (Dataset, DpSum, ExactStub, MechanismRequirementError,
                  NoiseSource, make_budget, prdp_framework)
from prdp.counting import thresholds

from conftest import dataset_like_fig2


def test_zero_noise_exact_stub_all_eps_hat(fig2_budget):
    # every record at the maximum budget: nothing is dropped and the exact
    # stub returns the true answer
    ds = Dataset.from_values(np.full(777, 100, dtype=np.int64), fig2_budget.bound)
    run = prdp_framework(ds, fig2_budget, 0.1, ExactStub("count"), NoiseSource.zero())
    assert run.retained.n == ds.n
    assert run.estimate == 777.0
    srun = prdp_framework(ds, fig2_budget, 0.1, ExactStub("sum"), NoiseSource.zero())
    assert srun.estimate == 77_700.0


def test_stub_substitution_isolates_phase_one(fig2_budget):
    # with the exact stub the output equals the true query on the retained set
    ds = dataset_like_fig2(fig2_budget)
    run = prdp_framework(ds, fig2_budget, 0.1, ExactStub("count"),
                         NoiseSource.seeded(17))
    assert run.estimate == float(run.retained.n)


def test_retention_monotonicity(fig2_budget):
    ds = dataset_like_fig2(fig2_budget)
    run = prdp_framework(ds, fig2_budget, 0.1, ExactStub("count"),
                         NoiseSource.seeded(23))
    assert run.retained.n <= ds.n
    part = fig2_budget.partition
    kept_idx = part.index_many(fig2_budget.budgets(run.retained))
    assert np.all(kept_idx >= run.selected)
    # excluded records all sit in domains before the selected one
    excluded = ds.n - run.retained.n
    all_idx = part.index_many(fig2_budget.budgets(ds))
    assert excluded == int((all_idx < run.selected).sum())


def test_budget_accounting_per_record():
    # phase-1 spend E(r)/2 plus phase-2 spend eps_tau/2 never exceeds E(r);
    # randomized datasets, checked record by record
    rng = np.random.Generator(np.random.Philox(key=41))
    b = make_budget("inverse", {"alpha": 512.0}, 2**16, 32.0)
    for case in range(25):
        ds = Dataset.from_values(rng.integers(1, 2**16 + 1, size=40), b.bound)
        run = prdp_framework(ds, b, 0.1, ExactStub("count"),
                             NoiseSource.seeded(1000 + case))
        eps = b.budgets(ds)
        idx = b.partition.index_many(eps)
        retained = idx >= run.selected
        spend = eps / 2.0 + np.where(retained, run.eps_tau / 2.0, 0.0)
        assert np.all(spend <= eps)
        # retained records have full budget at least eps_tau
        assert np.all(eps[retained] >= run.eps_tau)


def test_excluded_mass_zero_noise(fig2_budget):
    # zero noise: the dropped mass is bounded by the sum of the thresholds
    # of the skipped domains, computed under the halved budget function
    rng = np.random.Generator(np.random.Philox(key=43))
    halved = fig2_budget.halved()
    thr = thresholds(halved.partition, 0.05)
    for case in range(20):
        vals = rng.integers(1, fig2_budget.bound + 1, size=200)
        ds = Dataset.from_values(vals, fig2_budget.bound)
        run = prdp_framework(ds, fig2_budget, 0.1, ExactStub("count"),
                             NoiseSource.zero())
        dropped = ds.n - run.retained.n
        assert dropped <= thr[: run.selected - 1].sum()


def test_requirement_violation_surfaces(fig2_budget):
    from prdp import DpMax
    ds = Dataset.from_values(np.full(3, 100, dtype=np.int64), fig2_budget.bound)
    # phase 2 runs at eps_tau/2; with 3 records and tiny budget the max
    # mechanism's minimum-n gate must raise, not degrade silently
    b_small = make_budget("inverse", {"alpha": 1e4}, 10**12, 100.0)
    tiny = Dataset.from_values(np.full(3, 10**12, dtype=np.int64), 10**12)
    with pytest.raises(MechanismRequirementError):
        prdp_framework(tiny, b_small, 0.1, DpMax(), NoiseSource.zero())


def test_framework_sum_reasonable(fig2_budget):
    # skewed data: the clipped-sum stage may truncate the heaviest domain,
    # so only a coarse sanity band applies here (tight bands are asserted on
    # the evaluation datasets in the acceptance suite)
    ds = dataset_like_fig2(fig2_budget)
    truth = float(ds.values.sum())
    run = prdp_framework(ds, fig2_budget, 0.1, DpSum(), NoiseSource.seeded(71))
    assert abs(run.estimate - truth) / truth < 0.5
