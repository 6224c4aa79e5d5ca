"""Synthetic dataset generation (normal, zipf) and CSV ingestion.

Normal draws are rounded to the nearest integer and resampled while outside
[1, U] (clamping would pile mass at U and distort the smallest budget in the
data). Zipf over the truncated integer support [1, U] is sampled by exact
inverse CDF: tail masses come from Hurwitz-zeta differences, and the sample
is located by vectorised bisection, which stays exact for any U.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .core import Dataset
from .errors import ConfigError


@dataclass(frozen=True)
class GeneratorSpec:
    """Synthetic source: kind ``normal`` (mu, sigma) or ``zipf`` (a, b)."""

    kind: str
    n: int
    bound: int
    seed: int
    mu: float = 0.0
    sigma: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "zipf"):
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if self.n < 0:
            raise ConfigError("n must be non-negative")
        if self.bound < 1:
            raise ConfigError("bound must be >= 1")
        if self.kind == "normal" and not (self.mu > 0 and self.sigma > 0):
            raise ConfigError("normal generator needs mu > 0 and sigma > 0")
        if self.kind == "zipf" and not (self.a >= 0 and self.b > 1):
            raise ConfigError("zipf generator needs a >= 0 and b > 1")


def _zipf_tail(a: float, b: float, x) -> np.ndarray:
    """Unnormalised upper-tail mass sum_{k >= x} (k + a)^(-b) for integer x."""
    return hurwitz_zeta(b, np.asarray(x, dtype=float) + a)


def _sample_zipf(rng: np.random.Generator, spec: GeneratorSpec) -> np.ndarray:
    a, b, top = spec.a, spec.b, spec.bound
    total = float(_zipf_tail(a, b, 1) - _zipf_tail(a, b, top + 1))
    # Inverse transform through the upper tail: with t uniform on (0, total),
    # x = min{x : S(x+1) <= t} has P(x) = (S(x) - S(x+1)) / total, where
    # S(x) is the truncated tail mass from x. Bisect on S(mid+1) > t.
    t = rng.random(spec.n) * total
    lo = np.ones(spec.n, dtype=np.int64)
    hi = np.full(spec.n, top, dtype=np.int64)
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        tail_next = _zipf_tail(a, b, mid + 1) - _zipf_tail(a, b, top + 1)
        go_right = tail_next > t
        lo = np.where(go_right, mid + 1, lo)
        hi = np.where(go_right, hi, mid)
    return lo


def _sample_normal(rng: np.random.Generator, spec: GeneratorSpec) -> np.ndarray:
    vals = np.rint(rng.normal(spec.mu, spec.sigma, spec.n))
    bad = (vals < 1) | (vals > spec.bound)
    while bad.any():
        vals[bad] = np.rint(rng.normal(spec.mu, spec.sigma, int(bad.sum())))
        bad = (vals < 1) | (vals > spec.bound)
    return vals.astype(np.int64)


def generate(spec: GeneratorSpec) -> Dataset:
    """Generate a dataset; deterministic per (spec, seed)."""
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    if spec.n == 0:
        return Dataset(np.zeros((0, 1), dtype=np.int64), spec.bound)
    if spec.kind == "normal":
        values = _sample_normal(rng, spec)
    else:
        values = _sample_zipf(rng, spec)
    return Dataset.from_values(values, spec.bound)


@dataclass(frozen=True)
class LoadResult:
    dataset: Dataset
    rows_total: int
    rows_dropped: int


def load_csv(path, value_column: str, bound, key_column: str | None = None) -> LoadResult:
    """Load a UTF-8 comma-separated file with a header row.

    Rows whose value is non-numeric (including NaN), negative, or above the
    bound are dropped; decimal values are quantised to whole units with
    round-half-to-even. Key columns may be non-numeric; distinct keys are
    factorised to consecutive integers.

    Raises:
        ConfigError: missing file or missing column.
    """
    bound = int(bound)
    values: list[int] = []
    raw_keys: list[str] = []
    dropped = 0
    total = 0
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        if value_column not in fields:
            raise ConfigError(f"column {value_column!r} not in {path} (has {fields})")
        if key_column is not None and key_column not in fields:
            raise ConfigError(f"column {key_column!r} not in {path} (has {fields})")
        for row in reader:
            total += 1
            try:
                v = float(row[value_column])
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not math.isfinite(v) or v < 0 or v > bound:
                dropped += 1
                continue
            values.append(round(v))
            if key_column is not None:
                raw_keys.append(row[key_column])

    vals = np.array(values, dtype=np.int64)
    if key_column is None:
        return LoadResult(Dataset.from_values(vals, bound), total, dropped)
    codes: dict[str, int] = {}
    keys = np.array([codes.setdefault(k, len(codes)) for k in raw_keys], dtype=np.int64)
    return LoadResult(Dataset.from_values(vals, bound, keys=keys), total, dropped)
