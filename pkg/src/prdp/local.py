"""Per-record local DP: query augmentation, analyzer, and two-round framework.

Each party sends one noisy indicator per budget domain; the coordinate of
the party's own domain carries 1 + Laplace(1/floor_i), every other
coordinate pure Laplace noise at the same per-domain scales, so domain
membership is hidden. A dummy party (record None) sends pure noise in every
coordinate and its path never touches a record value. The analyzer sums
columns and applies sqrt(8n)-scaled thresholds.

The protocol is simulated in process; parties are mutually independent, so
a sequential loop or a single vectorised draw over a trial-level stream is
distributionally identical to per-party sub-seeded sources. The wire format
(little-endian framing, see ``encode_round1``/``encode_round2``) is defined
so a socket transport can be added without touching protocol logic.
"""

from __future__ import annotations

import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .core import BudgetFunction, Dataset, Record
from .noise import NoiseSource

BOT = None  # dummy-record marker: carries no function of any value


@dataclass(frozen=True)
class LocalResponse:
    """One party's messages: round-1 indicator vector, optional round-2 payload."""

    party_id: int
    round1: np.ndarray
    round2_bot: bool = False
    round2_payload: float | None = None


@dataclass(frozen=True)
class AnalyzerRun:
    """Analyzer trace; pure function of the response matrix and beta."""

    column_sums: np.ndarray
    thresholds: np.ndarray
    selected: int
    eps_tau: float
    estimate: float


def prldp_randomizer(budget: BudgetFunction, record: Record | None,
                     noise: NoiseSource) -> np.ndarray:
    """Round-1 local randomizer: noisy per-domain membership indicators.

    ``record=None`` is the dummy party: all indicators are zero and the
    branch reads no record attribute at all.
    """
    part = budget.partition
    base = np.zeros(part.size)
    if record is not None:
        base[part.index(budget.budget_of(record)) - 1] = 1.0
    return base + noise.laplace(1.0 / part.floors)


def simulate_round1(dataset: Dataset, budget: BudgetFunction,
                    noise: NoiseSource) -> np.ndarray:
    """All n parties' round-1 vectors as an (n, L) matrix, in one draw.

    Parties are mutually independent, so drawing the whole noise matrix from
    one trial-level stream is distributionally identical to per-party
    sub-seeded draws; :func:`prldp_randomizer` remains the per-party form.
    """
    part = budget.partition
    n = dataset.n
    out = noise.laplace(1.0 / part.floors, size=(n, part.size))
    if n:
        idx = part.index_many(budget.budgets(dataset))
        out[np.arange(n), idx - 1] += 1.0
    return out


def analyzer_thresholds(partition, n: int, beta: float) -> np.ndarray:
    """Column thresholds sqrt(8n) * ln(L/beta) / floor_i."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if n < 1:
        raise ValueError("need at least one response")
    return math.sqrt(8.0 * n) * math.log(partition.size / beta) / partition.floors


def prldp_analyzer(responses: np.ndarray, partition, beta: float) -> AnalyzerRun:
    """Aggregate round-1 responses: column sums, first passing domain, estimate.

    Deterministic given the matrix (replayable). The true party count n is
    the number of rows, which the analyzer knows by construction.
    """
    responses = np.asarray(responses, dtype=float)
    if responses.ndim != 2 or responses.shape[1] != partition.size:
        raise ValueError(f"responses must be an (n, {partition.size}) matrix")
    n = responses.shape[0]
    thr = analyzer_thresholds(partition, n, beta)
    col = responses.sum(axis=0)
    passing = np.nonzero(col >= thr)[0]
    selected = int(passing[0]) + 1 if passing.size else partition.size
    estimate = math.fsum(col[selected - 1:])
    return AnalyzerRun(column_sums=col, thresholds=thr, selected=selected,
                       eps_tau=partition.floor(selected), estimate=estimate)


def prldp_count(dataset: Dataset, budget: BudgetFunction, beta: float,
                noise: NoiseSource) -> AnalyzerRun:
    """Round-1 protocol end to end: randomize all parties, then analyze."""
    responses = simulate_round1(dataset, budget, noise)
    return prldp_analyzer(responses, budget.partition, beta)


# -- round-2 mechanisms -------------------------------------------------------

class LdpMechanism(ABC):
    """Local part (record-or-dummy, eps, noise) -> payload; curator aggregates.

    The local part run on the dummy input must be distributionally
    independent of every real record.
    """

    name: str
    query: str

    @abstractmethod
    def local(self, record: Record | None, eps: float, noise: NoiseSource) -> float:
        ...

    @abstractmethod
    def aggregate(self, payloads, beta: float) -> float:
        ...


class LdpCount(LdpMechanism):
    """Per-party presence bit plus Laplace(1/eps); curator sums."""

    name = "ldp-count"
    query = "count"

    def local(self, record, eps, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        bit = 0.0 if record is None else 1.0
        return bit + noise.laplace(1.0 / eps)

    def aggregate(self, payloads, beta):
        return math.fsum(payloads)


class LdpClippedSum(LdpMechanism):
    """Per-party clipped value plus Laplace(tau/eps); curator sums.

    The clip tau is the largest value whose budget still meets eps (public,
    derived from the budget function), so every party eligible at eps fits
    under the clip. Dummy parties submit pure noise around zero.
    """

    name = "ldp-sum"
    query = "sum"

    def __init__(self, budget: BudgetFunction):
        if not budget.has_monotone_inverse:
            raise ValueError("ldp-sum needs a budget function with a monotone inverse")
        self.budget = budget
        self._clip_cache: dict[float, float] = {}

    def clip(self, eps: float) -> float:
        # every party shares the same public eps per round; cache the inverse
        tau = self._clip_cache.get(eps)
        if tau is None:
            tau = float(self.budget.monotone_inverse(min(eps, self.budget.eps_max)))
            self._clip_cache[eps] = tau
        return tau

    def local(self, record, eps, noise):
        if eps <= 0:
            raise ValueError("eps must be positive")
        tau = self.clip(eps)
        v = 0.0 if record is None else float(min(record.value, tau))
        return v + noise.laplace(max(tau, 1.0) / eps)

    def aggregate(self, payloads, beta):
        return math.fsum(payloads)


class LdpExactStub(LdpMechanism):
    """Non-private test stub: payload = value (0 for dummy), sum aggregate."""

    name = "ldp-exact-stub"
    query = "sum"

    def local(self, record, eps, noise):
        return 0.0 if record is None else float(record.value)

    def aggregate(self, payloads, beta):
        return math.fsum(payloads)


@dataclass(frozen=True)
class LocalFrameworkRun:
    eps_tau: float        # round-1 output (halved-budget scale)
    selected: int
    dummies: int          # parties that answered round 2 as dummy
    estimate: float


def prldp_framework(dataset: Dataset, budget: BudgetFunction, beta: float,
                    mechanism: LdpMechanism, noise: NoiseSource) -> LocalFrameworkRun:
    """Two-round protocol lifting an LDP mechanism to per-record budgets.

    Round 1 estimates eps_tau under the halved budget function at failure
    rate beta/2. In round 2, every party whose original budget is at least
    eps_tau runs the mechanism's local part on its record with budget
    eps_tau/2; everyone else runs it on the dummy input. The curator
    aggregates at failure rate beta/2. All parties answer both rounds, so
    participation itself leaks nothing.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    halved = budget.halved()
    run1 = prldp_analyzer(simulate_round1(dataset, halved, noise),
                          halved.partition, beta / 2.0)
    eps_round2 = run1.eps_tau / 2.0

    eligible = (budget.budgets(dataset) >= run1.eps_tau) if dataset.n else np.zeros(0, bool)
    payloads = []
    for j in range(dataset.n):
        record = dataset.record(j) if eligible[j] else BOT
        payloads.append(mechanism.local(record, eps_round2, noise))
    estimate = mechanism.aggregate(payloads, beta / 2.0)
    return LocalFrameworkRun(eps_tau=run1.eps_tau, selected=run1.selected,
                             dummies=int(dataset.n - eligible.sum()),
                             estimate=float(estimate))


# -- wire format --------------------------------------------------------------
#
# Round 1: u32 party id, u32 L, then L little-endian f64 values.
# Round 2: u32 party id, u8 dummy flag, f64 payload (0.0 when dummy).

_ROUND1_HEADER = struct.Struct("<II")
_ROUND2_FRAME = struct.Struct("<IBd")


def encode_round1(party_id: int, values: np.ndarray) -> bytes:
    values = np.asarray(values, dtype="<f8")
    return _ROUND1_HEADER.pack(party_id, values.size) + values.tobytes()


def decode_round1(buf: bytes) -> tuple[int, np.ndarray]:
    party_id, size = _ROUND1_HEADER.unpack_from(buf)
    expected = _ROUND1_HEADER.size + 8 * size
    if len(buf) != expected:
        raise ValueError(f"round-1 frame length {len(buf)} != {expected}")
    values = np.frombuffer(buf, dtype="<f8", offset=_ROUND1_HEADER.size, count=size)
    return party_id, values.copy()


def encode_round2(party_id: int, payload: float | None) -> bytes:
    if payload is None:
        return _ROUND2_FRAME.pack(party_id, 1, 0.0)
    return _ROUND2_FRAME.pack(party_id, 0, float(payload))


def decode_round2(buf: bytes) -> tuple[int, float | None]:
    if len(buf) != _ROUND2_FRAME.size:
        raise ValueError(f"round-2 frame length {len(buf)} != {_ROUND2_FRAME.size}")
    party_id, bot, payload = _ROUND2_FRAME.unpack(buf)
    return party_id, None if bot else payload
