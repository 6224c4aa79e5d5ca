"""Core domain types: records, datasets, budget functions, domain partitions.

Records are integer tuples in [0, U]^d; attribute 0 is the primary numeric
value, attribute 1 an optional categorical key. A budget function maps each
record to a privacy budget in [eps_min, eps_max], and induces a partition of
the budget range into dyadic intervals: domain 1 is [eps_min, 2*eps_min]
(closed), domain i >= 2 is (2^(i-1)*eps_min, min(2^i*eps_min, eps_max)].
All types here are immutable after construction and safe to share across
concurrent tasks.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigError

BUDGET_KINDS = ("inverse", "log", "sqrt", "custom")

# Relative tolerance for snapping a budget ratio onto a dyadic boundary; power
# -of-two multiples divide exactly in IEEE arithmetic, so this only absorbs
# log2 round-off for ratios computed from decimal inputs.
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class Record:
    """One data record: ordered non-negative integer attributes."""

    attributes: tuple[int, ...]

    def __post_init__(self):
        if len(self.attributes) == 0:
            raise ValueError("record needs at least one attribute")
        for a in self.attributes:
            if not isinstance(a, (int, np.integer)) or isinstance(a, bool):
                raise ValueError(f"attributes must be integers, got {a!r}")
            if a < 0:
                raise ValueError(f"attributes must be non-negative, got {a}")

    @property
    def value(self) -> int:
        """Primary numeric value (attribute 0)."""
        return self.attributes[0]

    @property
    def key(self) -> int:
        """Categorical key: attribute 1 when present, else the value."""
        return self.attributes[1] if len(self.attributes) >= 2 else self.attributes[0]


class _ClampCounter:
    """Thread-safe counter for out-of-range custom budget evaluations."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def add(self, k: int = 1):
        with self._lock:
            self._count += k

    @property
    def count(self) -> int:
        return self._count


@dataclass(frozen=True)
class Dataset:
    """A multiset of records as an immutable (n, d) int64 array, values in [0, bound]."""

    attributes: np.ndarray
    bound: int

    def __post_init__(self):
        arr = np.asarray(self.attributes)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError("attributes must be an (n, d) array")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("attributes must be integers (fractional inputs are rejected)")
        arr = arr.astype(np.int64, copy=True)
        if self.bound < 1:
            raise ValueError("bound must be >= 1")
        if arr.size and (arr.min() < 0 or arr.max() > self.bound):
            raise ValueError(f"attributes must lie in [0, {self.bound}]")
        arr.setflags(write=False)
        object.__setattr__(self, "attributes", arr)

    @classmethod
    def from_values(cls, values, bound: int, keys=None) -> "Dataset":
        values = np.asarray(values)
        if keys is None:
            return cls(values.reshape(-1, 1), bound)
        keys = np.asarray(keys)
        if keys.shape != values.shape:
            raise ValueError("keys and values must have the same length")
        return cls(np.column_stack([values, keys]), bound)

    @property
    def n(self) -> int:
        return self.attributes.shape[0]

    @property
    def d(self) -> int:
        return self.attributes.shape[1]

    @property
    def values(self) -> np.ndarray:
        """Primary values (column 0)."""
        return self.attributes[:, 0]

    @property
    def keys(self) -> np.ndarray:
        """Categorical keys: column 1 when d >= 2, else the primary values."""
        return self.attributes[:, 1] if self.attributes.shape[1] >= 2 else self.attributes[:, 0]

    def record(self, i: int) -> Record:
        return Record(tuple(int(a) for a in self.attributes[i]))

    def select(self, mask: np.ndarray) -> "Dataset":
        """Subset by boolean mask; shares the bound."""
        return Dataset(self.attributes[np.asarray(mask, dtype=bool)], self.bound)


@dataclass(frozen=True)
class DomainPartition:
    """The dyadic budget partition: L intervals with floors 2^(i-1) * eps_min."""

    eps_min: float
    eps_max: float
    size: int
    floors: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        floors = self.eps_min * np.exp2(np.arange(self.size, dtype=float))
        floors.setflags(write=False)
        object.__setattr__(self, "floors", floors)

    def floor(self, i: int) -> float:
        """Floor budget of domain i (1-based): 2^(i-1) * eps_min."""
        if not 1 <= i <= self.size:
            raise ValueError(f"domain index {i} outside 1..{self.size}")
        return float(self.floors[i - 1])

    def interval(self, i: int) -> tuple[float, float]:
        """(lower, upper) of domain i; lower is open except for i == 1."""
        lo = self.floor(i)
        hi = min(2.0 * lo, self.eps_max)
        return lo, hi

    def _validate(self, eps: float):
        if not (self.eps_min <= eps <= self.eps_max):
            raise ValueError(
                f"budget {eps} outside [{self.eps_min}, {self.eps_max}]")

    def index(self, eps: float) -> int:
        """Domain index of a budget value (1-based).

        Intervals are left-open right-closed (first interval closed), so a
        budget exactly equal to 2^i * eps_min belongs to domain i. Exact
        dyadic multiples of eps_min are recognised by exact comparison
        (power-of-two ratios divide exactly in IEEE arithmetic); other
        values go through log2 with boundary snapping.
        """
        self._validate(eps)
        ratio = eps / self.eps_min
        x = math.log2(ratio)
        m = round(x)
        if ratio == 2.0 ** m or abs(x - m) <= _BOUNDARY_RTOL * max(1.0, abs(x)):
            i = max(m, 1)
        else:
            i = math.ceil(x)
        return min(max(i, 1), self.size)

    def index_many(self, eps: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`index`; same boundary rules."""
        eps = np.asarray(eps, dtype=float)
        if eps.size and (eps.min() < self.eps_min or eps.max() > self.eps_max):
            raise ValueError("budget outside partition range")
        ratio = eps / self.eps_min
        x = np.log2(ratio)
        m = np.rint(x)
        on_boundary = (ratio == np.exp2(m)) | (
            np.abs(x - m) <= _BOUNDARY_RTOL * np.maximum(1.0, np.abs(x)))
        idx = np.where(on_boundary, np.maximum(m, 1.0), np.ceil(x))
        return np.clip(idx.astype(np.int64), 1, self.size)


def domain_count(eps_min: float, eps_max: float) -> int:
    """Number of dyadic domains, ceil(log2(eps_max / eps_min)), boundary-robust.

    A ratio within relative 1e-12 of an exact power of two counts as that
    power, so e.g. a ratio of 2^19 computed through decimal floats still
    yields 19 rather than 20.
    """
    if not (eps_min > 0 and math.isfinite(eps_min)):
        raise ValueError("eps_min must be positive and finite")
    if eps_max <= eps_min:
        raise ConfigError(
            f"degenerate partition: eps_max={eps_max} <= eps_min={eps_min}")
    x = math.log2(eps_max / eps_min)
    m = round(x)
    size = m if abs(x - m) <= _BOUNDARY_RTOL * max(1.0, abs(x)) else math.ceil(x)
    return max(size, 1)


@dataclass(frozen=True)
class BudgetFunction:
    """Record -> privacy budget in [eps_min, eps_max], plus partition geometry.

    Builtin kinds (all non-increasing in the primary value v, capped at
    eps_max for small v, with eps_min = value of the formula at v = bound):

      * inverse(alpha):  alpha / v
      * log(c):          c / ln(v)^4   (natural log)
      * sqrt(c):         c / sqrt(v)

    A custom kind supplies its own evaluator; outputs outside
    [eps_min, eps_max] are clamped and counted on :attr:`clamp_warnings`.
    """

    kind: str
    param: float
    bound: int
    eps_min: float
    eps_max: float
    evaluator: Callable[[Record], float] | None = None
    clamp_warnings: _ClampCounter = field(default_factory=_ClampCounter, compare=False)

    @cached_property
    def partition(self) -> DomainPartition:
        return DomainPartition(self.eps_min, self.eps_max,
                               domain_count(self.eps_min, self.eps_max))

    # -- evaluation ---------------------------------------------------------

    def value_budgets(self, values) -> np.ndarray:
        """Vectorised budget of primary values (builtin kinds only)."""
        if self.kind == "custom":
            raise ValueError("custom budgets have no vectorised value form")
        v = np.asarray(values, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "inverse":
                raw = np.where(v > 0, self.param / v, np.inf)
            elif self.kind == "sqrt":
                raw = np.where(v > 0, self.param / np.sqrt(v), np.inf)
            else:  # log
                lv = np.log(np.maximum(v, 1.0))
                raw = np.where(v > 1, self.param / lv ** 4, np.inf)
        return np.minimum(raw, self.eps_max)

    def budget_of(self, record: Record) -> float:
        """Budget of one record (clamping custom outputs into range)."""
        for a in record.attributes:
            if a > self.bound:
                raise ValueError(f"attribute {a} outside [0, {self.bound}]")
        if self.kind != "custom":
            return float(self.value_budgets(record.value))
        eps = float(self.evaluator(record))
        if not (self.eps_min <= eps <= self.eps_max):
            self.clamp_warnings.add()
            eps = min(max(eps, self.eps_min), self.eps_max)
        return eps

    def budgets(self, dataset: Dataset) -> np.ndarray:
        """Budgets of all records in a dataset."""
        if dataset.bound != self.bound:
            raise ValueError("dataset bound does not match budget function bound")
        if self.kind != "custom":
            return self.value_budgets(dataset.values)
        return np.array([self.budget_of(dataset.record(i)) for i in range(dataset.n)])

    # -- structure ----------------------------------------------------------

    def halved(self) -> "BudgetFunction":
        """The budget function r -> E(r)/2 (same partition indices, halved floors)."""
        if self.kind == "custom":
            base = self.evaluator
            return BudgetFunction("custom", self.param / 2.0, self.bound,
                                  self.eps_min / 2.0, self.eps_max / 2.0,
                                  evaluator=lambda r: base(r) / 2.0)
        return BudgetFunction(self.kind, self.param / 2.0, self.bound,
                              self.eps_min / 2.0, self.eps_max / 2.0)

    @property
    def has_monotone_inverse(self) -> bool:
        return self.kind != "custom"

    def monotone_inverse(self, eps: float) -> int:
        """Largest primary value whose budget is still >= eps.

        Bisection over the non-increasing evaluator, so the result agrees
        exactly (in float comparison semantics) with an exhaustive value
        scan: budget(v*) >= eps and budget(v* + 1) < eps.
        """
        if not self.has_monotone_inverse:
            raise ValueError("custom budgets have no monotone inverse")
        if not (0 < eps <= self.eps_max):
            raise ValueError(f"eps must lie in (0, {self.eps_max}]")
        if float(self.value_budgets(self.bound)) >= eps:
            return self.bound
        lo, hi = 0, self.bound  # budget(lo) >= eps > budget(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if float(self.value_budgets(mid)) >= eps:
                lo = mid
            else:
                hi = mid
        return lo


def make_budget(kind: str, params: dict, bound, eps_hat: float) -> BudgetFunction:
    """Build a budget function; eps_min is the formula evaluated at v = bound.

    Args:
        kind: one of ``inverse``, ``log``, ``sqrt``, ``custom``.
        params: ``{"alpha": a}`` / ``{"c": c}`` for builtins; custom takes
            ``{"evaluator": f, "eps_min": optional}``.
        bound: global maximum primary value U (positive integer).
        eps_hat: global maximum budget; must exceed the resulting eps_min.

    Raises:
        ConfigError: invalid parameters or a degenerate partition.
    """
    bound = int(bound)
    if bound < 1:
        raise ConfigError("bound U must be >= 1")
    if not (eps_hat > 0 and math.isfinite(eps_hat)):
        raise ConfigError("eps_hat must be positive and finite")

    if kind == "custom":
        evaluator = params.get("evaluator")
        if not callable(evaluator):
            raise ConfigError("custom budget requires an 'evaluator' callable")
        eps_min = params.get("eps_min")
        if eps_min is None:
            eps_min = float(evaluator(Record((bound,))))
        eps_min = float(eps_min)
        if not (0 < eps_min < eps_hat):
            raise ConfigError(
                f"degenerate partition: eps_min={eps_min} must lie in (0, eps_hat)")
        return BudgetFunction("custom", float("nan"), bound, eps_min, eps_hat,
                              evaluator=evaluator)

    if kind not in BUDGET_KINDS:
        raise ConfigError(f"unknown budget kind {kind!r}")
    name = "alpha" if kind == "inverse" else "c"
    if name not in params:
        raise ConfigError(f"{kind} budget requires parameter {name!r}")
    param = float(params[name])
    if not (param > 0 and math.isfinite(param)):
        raise ConfigError(f"{name} must be positive and finite")

    if kind == "inverse":
        eps_min = param / bound
    elif kind == "sqrt":
        eps_min = param / math.sqrt(bound)
    else:  # log
        if bound < 2:
            raise ConfigError("log budget requires U >= 2")
        eps_min = param / math.log(bound) ** 4
    if eps_hat <= eps_min:
        raise ConfigError(
            f"degenerate partition: eps_hat={eps_hat} <= eps_min={eps_min}")
    return BudgetFunction(kind, param, bound, eps_min, eps_hat)


def evaluate_budget(budget: BudgetFunction, record: Record) -> float:
    """Budget of one record; pure and deterministic."""
    return budget.budget_of(record)


def domain_index(partition: DomainPartition, eps: float) -> int:
    """Domain index (1-based) of a budget value; see :meth:`DomainPartition.index`."""
    return partition.index(eps)
