"""Evolutionary engine: individuals, Pareto ranking, NSGA-II and steady-state
epsilon-MOEA generation steps.

Problems are duck-typed. An engine-compatible problem provides::

    n_objectives: int
    operators: sequence of OperatorHandle      # mutation pool
    random_genome(rng) -> genome
    crossover(a, b, rng) -> (genome, genome)
    evaluate(genomes) -> ndarray of shape (len(genomes), n_objectives)
    objective_bounds() -> ObjectiveBounds      # used for hypervolume

Genomes are opaque to the engine. Operators and crossover must return new
genomes rather than modifying their inputs.

Mutation operators are drawn from a *mutator source* (see ``selector``)
exposing ``select_operator()``, ``report_outcome(id, parent_score,
offspring_score)``, ``end_generation()``, ``observe(F)`` and ``scores(F)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, EvaluationError, UsageError


@dataclass(frozen=True)
class OperatorHandle:
    """A named mutation operator. ``apply(genome, rng)`` returns a new genome."""

    id: str
    apply: Callable[[Any, np.random.Generator], Any]

    def __call__(self, genome, rng):
        return self.apply(genome, rng)


@dataclass
class Individual:
    genome: Any
    objectives: np.ndarray | None = None
    provenance: str | None = None

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None


@dataclass
class Population:
    members: list[Individual]
    generation_index: int = 0
    # rank and crowding from the survival step, reused for tournaments
    rank: np.ndarray | None = field(default=None, repr=False)
    crowding: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def objectives(self) -> np.ndarray:
        return objective_matrix(self.members)


@dataclass
class EvolutionConfig:
    population_size: int = 100
    crossover_probability: float = 0.9
    mutation_probability: float = 1.0
    epsilon: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigError("population_size must be >= 1")
        for name in ("crossover_probability", "mutation_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.epsilon is not None:
            eps = np.asarray(self.epsilon, dtype=np.float64)
            if eps.ndim != 1 or eps.size == 0 or not np.all(eps > 0) or not np.all(np.isfinite(eps)):
                raise ConfigError(f"epsilon must be positive reals, got {self.epsilon}")


def objective_matrix(members: Sequence[Individual]) -> np.ndarray:
    rows = []
    for i, ind in enumerate(members):
        if ind.objectives is None:
            raise UsageError(f"member {i} has not been evaluated")
        rows.append(ind.objectives)
    if not rows:
        return np.empty((0, 0))
    return np.vstack(rows)


def _as_matrix(pop) -> np.ndarray:
    if isinstance(pop, Population):
        return pop.objectives()
    if len(pop) and isinstance(pop[0], Individual):
        return objective_matrix(pop)
    return np.atleast_2d(np.asarray(pop, dtype=np.float64))


def dominates(a, b) -> bool:
    """Pareto dominance under minimization."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def fast_nondominated_sort(pop) -> list[list[int]]:
    """Partition member indices into Pareto fronts, best front first.

    ``pop`` may be a Population, a list of Individuals or an objective matrix.
    Indices inside a front are ascending.
    """
    F = _as_matrix(pop)
    if F.size == 0:
        return []
    rank = kernels.nondominated_ranks(F)
    return [np.flatnonzero(rank == r).tolist() for r in range(int(rank.max()) + 1)]


def crowding_distance(front) -> list[float]:
    F = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if F.size == 0:
        raise UsageError("crowding distance of an empty front")
    return kernels.crowding_distance(F).tolist()


def rank_and_crowding(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pareto rank and within-front crowding distance of every row."""
    rank = kernels.nondominated_ranks(F)
    crowd = np.zeros(len(F))
    for r in range(int(rank.max()) + 1 if len(F) else 0):
        idx = np.flatnonzero(rank == r)
        crowd[idx] = kernels.crowding_distance(F[idx])
    return rank, crowd


def survival_order(rank: np.ndarray, crowd: np.ndarray) -> np.ndarray:
    """Indices sorted by rank ascending then crowding descending; stable."""
    return np.lexsort((-crowd, rank))


def evaluate_genomes(problem, genomes: list) -> np.ndarray:
    if not genomes:
        return np.empty((0, problem.n_objectives))
    try:
        F = np.asarray(problem.evaluate(genomes), dtype=np.float64)
    except Exception as exc:  # surfaced as a run failure with the cause attached
        raise EvaluationError(f"evaluation of {len(genomes)} genomes failed: {exc}") from exc
    if F.shape != (len(genomes), problem.n_objectives):
        raise EvaluationError(f"evaluator returned shape {F.shape}, expected {(len(genomes), problem.n_objectives)}")
    bad = ~np.all(np.isfinite(F), axis=1)
    if bad.any():
        raise EvaluationError(f"non-finite objectives for genome {int(np.argmax(bad))}: {F[np.argmax(bad)]}")
    return F


def initial_population(problem, size: int, rng: np.random.Generator) -> Population:
    genomes = [problem.random_genome(rng) for _ in range(size)]
    F = evaluate_genomes(problem, genomes)
    members = [Individual(g, f) for g, f in zip(genomes, F)]
    pop = Population(members, 0)
    pop.rank, pop.crowding = rank_and_crowding(F)
    return pop


def _tournament(rank, crowd, rng, n: int) -> np.ndarray:
    cand = rng.integers(len(rank), size=(n, 2))
    coin = rng.random(n) < 0.5
    a, b = cand[:, 0], cand[:, 1]
    a_better = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
    b_better = (rank[b] < rank[a]) | ((rank[a] == rank[b]) & (crowd[b] > crowd[a]))
    pick_a = a_better | (~b_better & coin)
    return np.where(pick_a, a, b)


def _vary(problem, selector, config, rng, first, second, n_children: int = 2):
    """Crossover then mutation. Returns ``n_children`` tuples of (offspring,
    operator, pre-mutation genome, its objectives or ``None`` when it still
    needs evaluating)."""
    children = []
    crossed = rng.random() < config.crossover_probability
    if crossed:
        ga, gb = problem.crossover(first.genome, second.genome, rng)
        pre = [(ga, None), (gb, None)]
    else:
        pre = [(first.genome, first.objectives), (second.genome, second.objectives)]
    for genome, known in pre[:n_children]:
        op = None
        child = genome
        if rng.random() < config.mutation_probability:
            op = selector.select_operator()
            child = op.apply(genome, rng)
        children.append((child, op, genome, known))
    return children


def _evaluate_offspring(problem, selector, children) -> list[Individual]:
    """Evaluate offspring and pre-mutation genomes, then credit operators."""
    todo: list = []
    slots = []
    for child, op, pre, known in children:
        slots.append(len(todo))
        todo.append(child)
        if op is not None and known is None:
            todo.append(pre)
    F = evaluate_genomes(problem, todo)
    selector.observe(F)
    out = []
    credited, rows, before = [], [], []
    for (child, op, pre, known), s in zip(children, slots):
        out.append(Individual(child, F[s], op.id if op is not None else None))
        if op is not None:
            credited.append(op.id)
            rows.append(s)
            before.append(known if known is not None else F[s + 1])
    if credited:
        k = len(credited)
        both = selector.scores(np.vstack(before + [F[rows]]))
        for op_id, p, c in zip(credited, both[:k].tolist(), both[k:].tolist()):
            selector.report_outcome(op_id, p, c)
    return out


def nsga2_generation(pop: Population, selector, problem, config: EvolutionConfig,
                     rng: np.random.Generator) -> Population:
    """One NSGA-II generation with (mu + mu) elitist survival.

    Parents come from binary tournaments on (rank, crowding). Each offspring
    receives at most one mutation operator drawn from ``selector``; the
    outcomes are reported and the selector's generation is closed before
    returning.
    """
    mu = len(pop)
    if pop.rank is None or pop.crowding is None:
        pop.rank, pop.crowding = rank_and_crowding(pop.objectives())
    n_pairs = (mu + 1) // 2
    winners = _tournament(pop.rank, pop.crowding, rng, 2 * n_pairs)
    children = []
    for k in range(n_pairs):
        first = pop.members[winners[2 * k]]
        second = pop.members[winners[2 * k + 1]]
        children.extend(_vary(problem, selector, config, rng, first, second,
                              n_children=min(2, mu - 2 * k)))
    offspring = _evaluate_offspring(problem, selector, children)
    selector.end_generation()

    combined = pop.members + offspring
    F = objective_matrix(combined)
    rank, crowd = rank_and_crowding(F)
    keep = survival_order(rank, crowd)[:mu]
    nxt = Population([combined[i] for i in keep], pop.generation_index + 1)
    nxt.rank, nxt.crowding = rank[keep], crowd[keep]
    return nxt


# --- epsilon-MOEA -----------------------------------------------------------


@dataclass
class EpsilonState:
    """Steady-state epsilon-MOEA state: a fixed-size population plus an
    epsilon-box archive. Objective matrices are cached alongside the lists."""

    population: list[Individual]
    archive: list[Individual]
    epsilon: np.ndarray
    generation_index: int = 0
    population_F: np.ndarray = field(default=None, repr=False)
    archive_F: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.epsilon = np.asarray(self.epsilon, dtype=np.float64)
        if not np.all(self.epsilon > 0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.population_F is None:
            self.population_F = objective_matrix(self.population)
        if self.archive_F is None:
            self.archive_F = objective_matrix(self.archive) if self.archive else \
                np.empty((0, self.population_F.shape[1]))


def box_index(f, epsilon) -> np.ndarray:
    """Epsilon-box coordinates ``floor(f / epsilon)``."""
    return np.floor(np.asarray(f, dtype=np.float64) / epsilon)


def epsilon_archive_insert(archive: list[Individual], candidate: Individual,
                           epsilon) -> tuple[list[Individual], bool]:
    """Offer ``candidate`` to an epsilon-box archive.

    Rejected if any member's box dominates the candidate's box, or if a member
    sharing its box dominates it or lies closer to the box's lower corner.
    On acceptance, members whose boxes it dominates (and a weaker same-box
    member) are evicted. Returns the new archive and the acceptance flag; the
    input list is left alone.
    """
    eps = np.asarray(epsilon, dtype=np.float64)
    if not np.all(eps > 0):
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    A = objective_matrix(archive) if archive else np.empty((0, len(candidate.objectives)))
    accepted, keep = kernels.epsilon_archive_update(A, candidate.objectives, eps)
    if not accepted:
        return list(archive), False
    return [a for a, k in zip(archive, keep) if k] + [candidate], True


def initial_epsilon_state(problem, size: int, epsilon, rng: np.random.Generator) -> EpsilonState:
    pop = initial_population(problem, size, rng)
    archive: list[Individual] = []
    for ind in pop.members:
        archive, _ = epsilon_archive_insert(archive, ind, epsilon)
    return EpsilonState(list(pop.members), archive, np.asarray(epsilon, dtype=np.float64), 0)


def _population_accept(state: EpsilonState, child: Individual, rng: np.random.Generator) -> bool:
    rel = kernels.dominance_relation(state.population_F, child.objectives)
    dominated = np.flatnonzero(rel == 1)
    if dominated.size:
        slot = int(dominated[rng.integers(dominated.size)])
    elif (rel == -1).any():
        return False
    else:
        slot = int(rng.integers(len(state.population)))
    state.population[slot] = child
    state.population_F[slot] = child.objectives
    return True


def _archive_accept(state: EpsilonState, child: Individual) -> bool:
    accepted, keep = kernels.epsilon_archive_update(state.archive_F, child.objectives, state.epsilon)
    if accepted:
        state.archive = [a for a, k in zip(state.archive, keep) if k] + [child]
        state.archive_F = np.vstack((state.archive_F[keep], child.objectives))
    return accepted


def epsilon_moea_step(state: EpsilonState, selector, problem, config: EvolutionConfig,
                      rng: np.random.Generator) -> Individual:
    """One steady-state step: one offspring from a population tournament
    parent and a uniformly drawn archive parent."""
    i, j = rng.integers(len(state.population), size=2)
    rel = kernels.dominance_relation(state.population_F[j:j + 1], state.population_F[i])[0]
    if rel == 1:
        pick = i
    elif rel == -1:
        pick = j
    else:
        pick = i if rng.random() < 0.5 else j
    first = state.population[pick]
    second = state.archive[rng.integers(len(state.archive))]
    children = _vary(problem, selector, config, rng, first, second, n_children=1)
    child = _evaluate_offspring(problem, selector, children)[0]
    _population_accept(state, child, rng)
    _archive_accept(state, child)
    return child


def epsilon_moea_generation(state: EpsilonState, selector, problem, config: EvolutionConfig,
                            rng: np.random.Generator, steps: int | None = None) -> EpsilonState:
    """Run ``steps`` steady-state steps (default: one population's worth) and
    close the selector's generation. ``state`` is updated in place and
    returned."""
    if not np.all(state.epsilon > 0):
        raise ConfigError(f"epsilon must be positive, got {state.epsilon}")
    for _ in range(len(state.population) if steps is None else steps):
        epsilon_moea_step(state, selector, problem, config, rng)
    selector.end_generation()
    state.generation_index += 1
    return state
