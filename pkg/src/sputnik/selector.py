"""History-driven mutation operator selection.

Each operator's credit is the mean improvement it produced in the last
generation in which it was applied. Improvement is measured per application,
as the normalized mean-fitness score of the genome before mutation minus
that of the mutated offspring, so positive means the operator helped.

Strategies:

* ``random``: uniform choice every draw (the baseline MOEA).
* ``elitist``: the operator with the highest positive credit.
* ``caste``: operators with positive credit, drawn proportionally to it.

For ``elitist`` and ``caste`` a fraction ``exploration_floor`` of draws is
uniform over the whole pool, and nothing is exploited until every operator
has been tried at least once.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import OperatorHandle
from .errors import ConfigError, UsageError
from .indicators import ObjectiveBounds

STRATEGIES = ("random", "elitist", "caste")
DEFAULT_EXPLORATION_FLOOR = 0.10


def score_of(objectives, bounds) -> float:
    """Mean of min-max normalized objectives, clamped to [0, 1].

    ``bounds`` is an ObjectiveBounds or a sequence of (min, max) pairs.
    Objectives with zero range contribute 0.
    """
    if not isinstance(bounds, ObjectiveBounds):
        bounds = ObjectiveBounds.from_pairs(bounds)
    f = np.asarray(objectives, dtype=np.float64)
    span = bounds.upper - bounds.lower
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (f - bounds.lower) / safe, 0.0)
    return float(np.clip(scaled, 0.0, 1.0).mean())


@dataclass
class OperatorCredit:
    operator_id: str
    applications_this_gen: int = 0
    sum_improvement_this_gen: float = 0.0
    delta_impact: float | None = None
    ever_used: bool = False
    total_applications: int = 0


class SputnikSelector:
    """Adaptive mutation-operator selector.

    Besides choosing operators it keeps the running objective bounds used to
    score genomes: ``observe`` widens them with every evaluated batch, and
    they never shrink.
    """

    def __init__(self, operators: Sequence[OperatorHandle], strategy: str = "caste",
                 exploration_floor: float = DEFAULT_EXPLORATION_FLOOR,
                 rng: np.random.Generator | None = None):
        if not operators:
            raise ConfigError("operator pool is empty")
        ids = [op.id for op in operators]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"operator ids are not unique: {ids}")
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        if not 0.0 <= exploration_floor <= 1.0:
            raise ConfigError(f"exploration_floor must lie in [0, 1], got {exploration_floor}")
        self.pool = tuple(operators)
        self.strategy = strategy
        self.exploration_floor = float(exploration_floor)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.credits = {op.id: OperatorCredit(op.id) for op in self.pool}
        self._index = {op.id: i for i, op in enumerate(self.pool)}
        self.bootstrap_complete = False
        self.bounds: ObjectiveBounds | None = None
        self._drawn_in_bootstrap: set[str] = set()
        self._elite: list[int] = []
        self._caste_ids: list[int] = []
        self._caste_cum: list[float] = []
        self.selections = np.zeros(len(self.pool), dtype=np.int64)
        self.last_selections = np.zeros(len(self.pool), dtype=np.int64)

    # -- scoring ------------------------------------------------------------

    def observe(self, F) -> None:
        F = np.asarray(F, dtype=np.float64)
        if F.size == 0:
            return
        lo, hi = F.min(axis=0), F.max(axis=0)
        if self.bounds is None:
            self.bounds = ObjectiveBounds(lo, hi)
        elif np.all(lo >= self.bounds.lower) and np.all(hi <= self.bounds.upper):
            return
        else:
            self.bounds.widen(np.vstack((lo, hi)))
        span = self.bounds.upper - self.bounds.lower
        self._inv_span = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)

    def score(self, objectives) -> float:
        if self.bounds is None:
            raise UsageError("score() called before any objectives were observed")
        return score_of(objectives, self.bounds)

    def scores(self, F) -> np.ndarray:
        """Vectorized ``score`` over the rows of ``F``."""
        if self.bounds is None:
            raise UsageError("scores() called before any objectives were observed")
        scaled = (F - self.bounds.lower) * self._inv_span
        return np.clip(scaled, 0.0, 1.0, out=scaled).sum(axis=1) / scaled.shape[1]

    # -- selection ------------------------------------------------------------

    def select_operator(self) -> OperatorHandle:
        rng = self.rng
        n = len(self.pool)
        if self.strategy == "random":
            i = int(rng.integers(n))
        elif not self.bootstrap_complete:
            fresh = [k for k, op in enumerate(self.pool)
                     if not self.credits[op.id].ever_used and op.id not in self._drawn_in_bootstrap]
            i = fresh[int(rng.integers(len(fresh)))] if fresh else int(rng.integers(n))
            self._drawn_in_bootstrap.add(self.pool[i].id)
        elif rng.random() < self.exploration_floor or not self._elite:
            i = int(rng.integers(n))
        elif self.strategy == "elitist":
            elite = self._elite
            i = elite[0] if len(elite) == 1 else elite[int(rng.integers(len(elite)))]
        else:
            cum = self._caste_cum
            k = bisect_right(cum, rng.random() * cum[-1])
            i = self._caste_ids[min(k, len(cum) - 1)]
        self.selections[i] += 1
        return self.pool[i]

    def selection_probabilities(self) -> np.ndarray:
        """Exact probability of each operator on the next draw once bootstrap
        is over (for the random strategy, always)."""
        n = len(self.pool)
        uniform = np.full(n, 1.0 / n)
        if self.strategy == "random" or not self._elite:
            return uniform
        p = self.exploration_floor * uniform
        exploit = 1.0 - self.exploration_floor
        if self.strategy == "elitist":
            for i in self._elite:
                p[i] += exploit / len(self._elite)
        else:
            total = self._caste_cum[-1]
            prev = 0.0
            for i, c in zip(self._caste_ids, self._caste_cum):
                p[i] += exploit * (c - prev) / total
                prev = c
        return p

    # -- credit -----------------------------------------------------------------

    def report_outcome(self, operator_id: str, parent_score: float, offspring_score: float) -> None:
        credit = self.credits.get(operator_id)
        if credit is None:
            raise UsageError(f"unknown operator id {operator_id!r}")
        credit.applications_this_gen += 1
        credit.total_applications += 1
        credit.sum_improvement_this_gen += parent_score - offspring_score
        credit.ever_used = True

    def end_generation(self) -> None:
        for credit in self.credits.values():
            if credit.applications_this_gen:
                credit.delta_impact = credit.sum_improvement_this_gen / credit.applications_this_gen
            credit.applications_this_gen = 0
            credit.sum_improvement_this_gen = 0.0
        self.bootstrap_complete = all(c.ever_used for c in self.credits.values())
        self.last_selections = self.selections
        self.selections = np.zeros(len(self.pool), dtype=np.int64)
        self._refresh()

    def set_impacts(self, impacts: dict[str, float]) -> None:
        """Install fixed credits and end bootstrap (used for analysis and tests)."""
        for op_id, value in impacts.items():
            if op_id not in self.credits:
                raise UsageError(f"unknown operator id {op_id!r}")
            self.credits[op_id].delta_impact = float(value)
            self.credits[op_id].ever_used = True
        self.bootstrap_complete = all(c.ever_used for c in self.credits.values())
        self._refresh()

    def impacts(self) -> dict[str, float | None]:
        return {op.id: self.credits[op.id].delta_impact for op in self.pool}

    def _refresh(self) -> None:
        deltas = [self.credits[op.id].delta_impact for op in self.pool]
        positive = [(i, d) for i, d in enumerate(deltas) if d is not None and d > 0]
        self._caste_ids = [i for i, _ in positive]
        self._caste_cum = np.cumsum([d for _, d in positive]).tolist()
        if positive:
            best = max(d for _, d in positive)
            self._elite = [i for i, d in positive if d == best]
        else:
            self._elite = []


class UniformSelector(SputnikSelector):
    """Plain uniform operator choice; the reference baseline for ``random``."""

    def __init__(self, operators: Sequence[OperatorHandle], rng: np.random.Generator | None = None):
        super().__init__(operators, "random", 0.0, rng)

    def select_operator(self) -> OperatorHandle:
        i = int(self.rng.integers(len(self.pool)))
        self.selections[i] += 1
        return self.pool[i]
