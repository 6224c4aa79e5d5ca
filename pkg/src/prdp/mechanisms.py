"""Standard (uniform-budget) DP mechanisms used as plug-ins and baselines.

Each mechanism answers one query kind on a dataset with a single budget eps.
Calibration (noise scale vs. sensitivity) is asserted by the test suite's
invariants; privacy is not measured at runtime. The sum and max mechanisms
follow the usual grid-scan / exponential-selection recipes over the
power-of-two value grid.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .core import Dataset
from .errors import ConfigError, MechanismRequirementError
from .noise import NoiseSource

QUERIES = ("count", "sum", "max", "distinct")


def power_grid(bound: int) -> np.ndarray:
    """Power-of-two value grid 1, 2, 4, ... up to the global bound."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    top = int(math.floor(math.log2(bound) + 1e-12))
    return np.exp2(np.arange(top + 1))


class DpMechanism(ABC):
    """Behavioral interface: run(dataset, eps, beta, noise) -> estimate."""

    name: str
    query: str

    def min_records(self, eps: float) -> int:
        """Smallest n the mechanism is defined for at budget eps."""
        return 0

    def check_requirements(self, dataset: Dataset, eps: float):
        need = self.min_records(eps)
        if dataset.n < need:
            raise MechanismRequirementError(
                f"{self.name} needs more than {need - 1} records at eps={eps:g}, "
                f"got n={dataset.n}")

    @abstractmethod
    def run(self, dataset: Dataset, eps: float, beta: float,
            noise: NoiseSource) -> float:
        ...


class LaplaceCount(DpMechanism):
    """Count with Laplace noise at scale 1/eps (sensitivity 1)."""

    name = "laplace-count"
    query = "count"

    def run(self, dataset, eps, beta, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        return dataset.n + noise.laplace(1.0 / eps)


class DpSum(DpMechanism):
    """Two-stage clipped sum.

    Stage A (eps/2) scans the power-of-two grid from the top and keeps the
    largest tau whose noisy above-tau count clears ln(2*log2(U)/beta) times
    the noise scale, falling back to the smallest grid value. Stage B
    (eps/2) releases sum(min(v, 2*tau)) with Laplace noise at scale
    2*tau/(eps/2); the factor-2 clip headroom keeps values just above the
    selected grid point from being truncated.
    """

    name = "dp-sum"
    query = "sum"

    def run(self, dataset, eps, beta, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        grid = power_grid(dataset.bound)
        values = dataset.values
        scale_a = 2.0 / (eps / 2.0)
        cut = math.log(2.0 * math.log2(max(dataset.bound, 2)) / beta) * scale_a
        tau = float(grid[0])
        for t in grid[::-1]:
            c = float((values > t).sum()) + noise.laplace(scale_a)
            if c >= cut:
                tau = float(t)
                break
        clip = 2.0 * tau
        clipped = np.minimum(values, clip).sum()
        return float(clipped) + noise.laplace(clip / (eps / 2.0))


class DpMax(DpMechanism):
    """Exponential-mechanism max over the power-of-two grid.

    Utility of grid point t is minus the number of records above t, with an
    extra n+1 penalty when the cell (t/2, t] is empty so that vacant cells
    never win under zero noise. Utility sensitivity is 1. Requires
    n > 1/eps records.
    """

    name = "dp-max"
    query = "max"

    def min_records(self, eps: float) -> int:
        return int(math.floor(1.0 / eps)) + 1

    def utilities(self, dataset: Dataset) -> np.ndarray:
        grid = power_grid(dataset.bound)
        values = np.sort(dataset.values)
        n = dataset.n
        above = n - np.searchsorted(values, grid, side="right")
        at_or_below_half = np.searchsorted(values, grid / 2.0, side="right")
        in_cell = (n - at_or_below_half) - above
        return -above.astype(float) - (in_cell == 0) * float(n + 1)

    def run(self, dataset, eps, beta, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        if dataset.n == 0:
            raise MechanismRequirementError("dp-max is undefined on an empty dataset")
        self.check_requirements(dataset, eps)
        grid = power_grid(dataset.bound)
        pick = noise.pick_max(self.utilities(dataset), eps, sensitivity=1.0)
        return float(grid[pick])


class DpDistinct(DpMechanism):
    """Distinct key count with Laplace noise at scale 1/eps.

    Adding or deleting one record changes the number of distinct keys by at
    most one, so sensitivity is 1.
    """

    name = "dp-distinct"
    query = "distinct"

    def run(self, dataset, eps, beta, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        distinct = int(np.unique(dataset.keys).size) if dataset.n else 0
        return distinct + noise.laplace(1.0 / eps)


class ExactStub(DpMechanism):
    """Non-private test stub returning the exact query answer."""

    name = "exact-stub"

    def __init__(self, query: str):
        if query not in QUERIES:
            raise ConfigError(f"unknown query {query!r}")
        self.query = query

    def run(self, dataset, eps, beta, noise):
        if self.query == "count":
            return float(dataset.n)
        if self.query == "sum":
            return float(dataset.values.sum()) if dataset.n else 0.0
        if self.query == "max":
            return float(dataset.values.max()) if dataset.n else 0.0
        return float(np.unique(dataset.keys).size) if dataset.n else 0.0


_DEFAULT_FOR_QUERY = {
    "count": LaplaceCount,
    "sum": DpSum,
    "max": DpMax,
    "distinct": DpDistinct,
}

MECHANISM_NAMES = ("laplace-count", "dp-sum", "dp-max", "dp-distinct", "exact-stub")


def make_mechanism(name: str, query: str) -> DpMechanism:
    """Registry lookup by name string, validated against the query kind."""
    if query not in QUERIES:
        raise ConfigError(f"unknown query {query!r}")
    if name == "exact-stub":
        return ExactStub(query)
    classes = {c.name: c for c in (LaplaceCount, DpSum, DpMax, DpDistinct)}
    if name not in classes:
        raise ConfigError(f"unknown mechanism {name!r} (choose from {MECHANISM_NAMES})")
    mech = classes[name]()
    if mech.query != query:
        raise ConfigError(f"mechanism {name!r} answers {mech.query!r}, not {query!r}")
    return mech


def default_mechanism(query: str) -> DpMechanism:
    if query not in _DEFAULT_FOR_QUERY:
        raise ConfigError(f"unknown query {query!r}")
    return _DEFAULT_FOR_QUERY[query]()


def naive_baseline(dataset: Dataset, budget, query: str, beta: float,
                   noise: NoiseSource, mechanism: DpMechanism | None = None) -> float:
    """Run the query's standard mechanism with the global minimum budget.

    Reduces the per-record problem to eps_min-DP; kept only for comparison
    tables (expected to be unusable when eps_min is conservatively small).
    """
    mech = mechanism if mechanism is not None else default_mechanism(query)
    return mech.run(dataset, budget.eps_min, beta, noise)
