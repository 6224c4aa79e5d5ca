import math

import numpy as np
import pytest

from prdp import (Dataset, NoiseSource, exact_domain_counts, make_budget,
                  noisy_domain_counts, prdp_count, select_and_aggregate,
                  threshold, thresholds)
from prdp.oracles import eps_min_oracle

from conftest import FIG2_EPS_MIN, dataset_like_fig2

FIG2_NOISY_TAIL = [1729.38, 4042.73, 2384.80, 1042.90, 484.86, 199.22, 92.26, -0.14]
FIG2_T12 = 437.69


def fig2_replay_inputs(part):
    noisy = np.zeros(19)
    noisy[11:] = FIG2_NOISY_TAIL
    # thresholds are taken as given inputs (they halve domain to domain)
    thr = FIG2_T12 * np.exp2(11.0 - np.arange(19))
    return noisy, thr


def test_threshold_oracle_values(fig2_budget):
    part = fig2_budget.partition
    # independent evaluation: ln(L/beta) / floor_1 with L=19, beta=0.1
    expect = math.log(19 / 0.1) * (1.0 / FIG2_EPS_MIN)
    assert threshold(part, 1, 0.1) == pytest.approx(expect, rel=1e-12)
    assert threshold(part, 1, 0.1) == pytest.approx(671_619.08, abs=0.01)
    with pytest.raises(ValueError):
        threshold(part, 1, 1.5)


def test_threshold_halving_exact(fig2_budget):
    t = thresholds(fig2_budget.partition, 0.1)
    assert np.all(t[1:] == t[:-1] / 2.0)


def test_threshold_single_domain():
    b = make_budget("inverse", {"alpha": 100.0}, 100, 2.0)  # eps_min=1, L=1
    assert b.partition.size == 1
    assert threshold(b.partition, 1, 0.2) == pytest.approx(math.log(1 / 0.2))


def test_noisy_domain_counts_trivial_cases(fig2_budget):
    z = NoiseSource.zero()
    empty = Dataset.from_values(np.array([], dtype=np.int64), fig2_budget.bound)
    assert np.array_equal(noisy_domain_counts(empty, fig2_budget, z), np.zeros(19))
    # all records with budget eps_hat live in the last domain
    ds = Dataset.from_values(np.full(50, 100, dtype=np.int64), fig2_budget.bound)
    counts = noisy_domain_counts(ds, fig2_budget, z)
    assert counts[-1] == 50 and counts[:-1].sum() == 0


def test_domain_counts_partition_property(fig2_budget):
    ds = dataset_like_fig2(fig2_budget)
    counts = exact_domain_counts(ds, fig2_budget)
    assert counts.sum() == ds.n  # every record in exactly one domain


def test_figure2_replay_exact(fig2_budget):
    part = fig2_budget.partition
    noisy, thr = fig2_replay_inputs(part)
    run = select_and_aggregate(noisy, thr, part)
    assert run.selected == 12
    assert run.eps_tau == 0.016
    assert run.estimate == 9976.01  # exact in f64


def test_select_and_aggregate_fallback_and_first(fig2_budget):
    part = fig2_budget.partition
    thr = thresholds(part, 0.1)
    below = thr * 0.5
    run = select_and_aggregate(below, thr, part)
    assert run.selected == part.size
    assert run.estimate == below[-1]
    above = thr + 1.0
    run = select_and_aggregate(above, thr, part)
    assert run.selected == 1
    assert run.estimate == pytest.approx(math.fsum(above))
    with pytest.raises(ValueError):
        select_and_aggregate(np.zeros(5), thr, part)


def test_prdp_count_zero_noise_exact(fig2_budget):
    ds = Dataset.from_values(np.full(1000, 100, dtype=np.int64), fig2_budget.bound)
    run = prdp_count(ds, fig2_budget, 0.1, NoiseSource.zero())
    assert run.selected == fig2_budget.partition.size
    assert run.estimate == 1000.0
    with pytest.raises(ValueError):
        prdp_count(ds, fig2_budget, 1.0, NoiseSource.zero())


def test_excluded_mass_zero_noise(fig2_budget):
    # no late stop: in zero-noise mode every domain before the selected one
    # has exact count strictly below its threshold
    ds = dataset_like_fig2(fig2_budget)
    run = prdp_count(ds, fig2_budget, 0.1, NoiseSource.zero())
    counts = exact_domain_counts(ds, fig2_budget)
    thr = thresholds(fig2_budget.partition, 0.1)
    assert np.all(counts[: run.selected - 1] < thr[: run.selected - 1])


def test_calibration_scale_dominance(fig2_budget):
    # the Laplace scale used for a record's domain, 1/floor_i, is always
    # >= 1/E(r): the testable core of parallel composition
    rng = np.random.Generator(np.random.Philox(key=31))
    part = fig2_budget.partition
    v = rng.integers(0, fig2_budget.bound + 1, size=100_000)
    eps = fig2_budget.value_budgets(v)
    floors = part.floors[part.index_many(eps) - 1]
    assert np.all(1.0 / floors >= 1.0 / eps)


def test_all_eps_hat_monte_carlo(fig2_budget):
    # 1e6 records at the maximum budget: estimate within 2*T_L of the truth
    # in >= 90% of 1000 seeded trials, and the 90th-percentile error obeys
    # the concentration bound with 25% headroom
    part = fig2_budget.partition
    n = 1_000_000
    counts = np.zeros(part.size)
    counts[-1] = n
    thr = thresholds(part, 0.1)
    t_last = thr[-1]
    errors = []
    hits = 0
    for trial in range(1000):
        ns = NoiseSource.seeded(7_000 + trial)
        noisy = counts + ns.laplace(1.0 / part.floors)
        run = select_and_aggregate(noisy, thr, part)
        err = abs(run.estimate - n)
        errors.append(err)
        if err <= 2.0 * t_last:
            hits += 1
    assert hits >= 900
    assert np.quantile(errors, 0.9) <= 1.25 * 2.0 * t_last


def test_theorem1_eps_tau_monte_carlo(fig2_budget):
    ds = dataset_like_fig2(fig2_budget)
    eps_min = eps_min_oracle(ds, fig2_budget)
    ok = 0
    for trial in range(300):
        run = prdp_count(ds, fig2_budget, 0.1, NoiseSource.seeded(9_000 + trial))
        if run.eps_tau >= 0.5 * eps_min:
            ok += 1
    assert ok >= 0.88 * 300


def test_figure2_like_dataset_structure(fig2_budget):
    ds = dataset_like_fig2(fig2_budget)
    assert ds.n == 10_000
    counts = exact_domain_counts(ds, fig2_budget)
    assert counts[:11].sum() == 0 and counts[11] == 1730


def test_estimates_not_clamped(fig2_budget):
    # raw noisy values are summed; negative contributions are legal
    part = fig2_budget.partition
    noisy = np.full(19, -5.0)
    noisy[0] = 1e9
    run = select_and_aggregate(noisy, thresholds(part, 0.1), part)
    assert run.selected == 1
    assert run.estimate < 1e9
