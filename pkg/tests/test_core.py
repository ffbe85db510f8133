import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sputnik.core import (EpsilonState, EvolutionConfig, Individual, Population, box_index,
                          crowding_distance, dominates, epsilon_archive_insert,
                          epsilon_moea_generation, fast_nondominated_sort, initial_epsilon_state,
                          initial_population, nsga2_generation, rank_and_crowding)
from sputnik.errors import ConfigError, EvaluationError, UsageError
from sputnik.selector import SputnikSelector, UniformSelector

from conftest import ToyProblem, brute_force_fronts

vectors = st.lists(st.integers(-3, 3), min_size=3, max_size=3)


def ind(*f):
    return Individual(tuple(f), np.array(f, dtype=float))


# --- dominance ---------------------------------------------------------------

@pytest.mark.parametrize("a, b, expected", [
    ((1, 2), (2, 3), True),
    ((1, 2), (1, 2), False),
    ((1, 3), (3, 1), False),
])
def test_dominates_examples(a, b, expected):
    assert dominates(a, b) is expected


def test_dominates_length_mismatch():
    with pytest.raises(UsageError):
        dominates((1, 2), (1, 2, 3))


@given(vectors)
def test_dominance_irreflexive(a):
    assert not dominates(a, a)


@given(vectors, vectors)
def test_dominance_asymmetric(a, b):
    assert not (dominates(a, b) and dominates(b, a))


@given(vectors, vectors, vectors)
def test_dominance_transitive(a, b, c):
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)


# --- sorting and crowding ------------------------------------------------------

def test_sort_example():
    F = [(1, 1), (2, 2), (0, 3)]
    assert fast_nondominated_sort(np.array(F, dtype=float)) == [[0, 2], [1]]
    assert brute_force_fronts(F) == [[0, 2], [1]]


def test_sort_singleton_and_identical():
    assert fast_nondominated_sort(np.array([[4.0, 2.0]])) == [[0]]
    assert fast_nondominated_sort(np.ones((5, 2))) == [[0, 1, 2, 3, 4]]


def test_sort_rejects_unevaluated():
    with pytest.raises(UsageError):
        fast_nondominated_sort(Population([ind(1, 2), Individual((0, 0))]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 50), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_sort_matches_brute_force(n, m, seed):
    F = np.random.default_rng(seed).integers(0, 5, size=(n, m)).astype(float)
    fronts = fast_nondominated_sort(F)
    assert fronts == brute_force_fronts(F.tolist())
    assert sorted(i for f in fronts for i in f) == list(range(n))


def test_crowding_examples():
    d = crowding_distance([(1, 3), (2, 2), (3, 1)])
    assert d[0] == d[2] == float("inf") and d[1] == pytest.approx(2.0)
    assert crowding_distance([(1, 2), (2, 1)]) == [float("inf")] * 2
    same = crowding_distance([(1, 1)] * 4)
    assert sum(np.isinf(same)) == 2 and sorted(same)[:2] == [0.0, 0.0]


def test_crowding_rejects_empty():
    with pytest.raises(UsageError):
        crowding_distance([])


# --- NSGA-II --------------------------------------------------------------------

def _cfg(**kw):
    base = dict(population_size=2, crossover_probability=0.0, mutation_probability=1.0)
    base.update(kw)
    return EvolutionConfig(**base)


def test_nsga2_offspring_dominating_parents_take_over():
    problem = ToyProblem({"leap": -100.0})
    pop = Population([ind(5.0, 5.0), ind(6.0, 4.0)])
    sel = SputnikSelector(problem.operators, "random", rng=np.random.default_rng(0))
    sel.observe(pop.objectives())
    nxt = nsga2_generation(pop, sel, problem, _cfg(), np.random.default_rng(1))
    assert len(nxt) == 2
    assert all(m.provenance == "leap" for m in nxt.members)
    assert all(m.objectives.max() < -90 for m in nxt.members)


def test_nsga2_without_variation_creates_no_new_points(toy):
    rng = np.random.default_rng(2)
    pop = initial_population(toy, 12, rng)
    sel = UniformSelector(toy.operators, np.random.default_rng(3))
    sel.observe(pop.objectives())
    cfg = EvolutionConfig(12, crossover_probability=0.0, mutation_probability=0.0)
    nxt = nsga2_generation(pop, sel, toy, cfg, rng)
    before = {m.genome for m in pop.members}
    assert len(nxt) == 12
    assert {m.genome for m in nxt.members} <= before
    assert all(m.provenance is None for m in nxt.members)
    assert sel.last_selections.sum() == 0


def test_nsga2_keeps_size_and_reports_every_mutation(toy):
    rng = np.random.default_rng(4)
    pop = initial_population(toy, 11, rng)
    sel = SputnikSelector(toy.operators, "caste", rng=np.random.default_rng(5))
    sel.observe(pop.objectives())
    nxt = nsga2_generation(pop, sel, toy, EvolutionConfig(11, 0.9, 1.0), rng)
    assert len(nxt) == 11 and nxt.generation_index == 1
    assert sel.last_selections.sum() == 11
    assert sel.bootstrap_complete


def test_nsga2_elitism_front_zero_survives_or_is_covered(toy):
    rng = np.random.default_rng(6)
    pop = initial_population(toy, 20, rng)
    sel = SputnikSelector(toy.operators, "elitist", rng=np.random.default_rng(7))
    sel.observe(pop.objectives())
    for _ in range(15):
        F = pop.objectives()
        front0 = F[pop.rank == 0]
        pop = nsga2_generation(pop, sel, toy, EvolutionConfig(20, 0.9, 1.0), rng)
        G = pop.objectives()
        for p in front0:
            assert any(np.all(q <= p) for q in G)


def _serialize(pop):
    return pickle.dumps([(m.genome, m.objectives.tolist(), m.provenance) for m in pop.members])


def test_nsga2_seeded_runs_identical(toy):
    def run():
        rng = np.random.default_rng(8)
        pop = initial_population(toy, 10, rng)
        sel = SputnikSelector(toy.operators, "caste", rng=np.random.default_rng(9))
        sel.observe(pop.objectives())
        for _ in range(10):
            pop = nsga2_generation(pop, sel, toy, EvolutionConfig(10), rng)
        return _serialize(pop)
    assert run() == run()


def test_evaluation_failure_aborts(toy):
    class Broken(ToyProblem):
        def evaluate(self, genomes):
            out = super().evaluate(genomes)
            out[0, 0] = np.nan
            return out
    problem = Broken()
    rng = np.random.default_rng(0)
    pop = Population([ind(1.0, 2.0), ind(2.0, 1.0)])
    sel = UniformSelector(problem.operators, rng)
    sel.observe(pop.objectives())
    with pytest.raises(EvaluationError, match="non-finite"):
        nsga2_generation(pop, sel, problem, _cfg(), rng)


def test_config_validation():
    with pytest.raises(ConfigError):
        EvolutionConfig(10, crossover_probability=1.5)
    with pytest.raises(ConfigError):
        EvolutionConfig(0)
    with pytest.raises(ConfigError):
        EvolutionConfig(10, epsilon=(0.1, 0.0))


# --- epsilon archive -------------------------------------------------------------

def test_archive_same_box_keeps_corner_closer():
    archive = [ind(0.4, 0.4)]
    new, accepted = epsilon_archive_insert(archive, ind(0.45, 0.45), (1.0, 1.0))
    assert not accepted
    assert [a.objectives.tolist() for a in new] == [[0.4, 0.4]]
    np.testing.assert_array_equal(box_index((0.45, 0.45), (1.0, 1.0)), [0.0, 0.0])


def test_archive_same_box_nondominated_tie_break():
    # (0.1, 0.8) is at distance ~0.806 from the corner, (0.5, 0.5) at ~0.707
    new, accepted = epsilon_archive_insert([ind(0.1, 0.8)], ind(0.5, 0.5), (1.0, 1.0))
    assert accepted and [a.objectives.tolist() for a in new] == [[0.5, 0.5]]


def test_archive_dominating_offspring_clears_archive():
    archive = [ind(3.0, 5.0), ind(4.0, 4.0), ind(5.0, 3.0), ind(2.5, 2.6)]
    new, accepted = epsilon_archive_insert(archive, ind(2.0, 2.0), (1.0, 1.0))
    assert accepted and len(new) == 1 and new[0].objectives.tolist() == [2.0, 2.0]


def test_archive_empty_accepts():
    new, accepted = epsilon_archive_insert([], ind(7.0, 1.0), (0.5, 0.5))
    assert accepted and len(new) == 1


def test_archive_rejects_box_dominated():
    new, accepted = epsilon_archive_insert([ind(0.5, 0.5)], ind(1.5, 1.2), (1.0, 1.0))
    assert not accepted and len(new) == 1


def test_archive_nonpositive_epsilon():
    with pytest.raises(ConfigError):
        epsilon_archive_insert([], ind(1.0, 1.0), (0.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=60),
       st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_archive_invariants(points, e0, e1):
    eps = np.array([e0, e1])
    archive = []
    for p in points:
        archive, _ = epsilon_archive_insert(archive, ind(*p), eps)
    boxes = [tuple(box_index(a.objectives, eps)) for a in archive]
    assert len(set(boxes)) == len(boxes)
    for i, bi in enumerate(boxes):
        for j, bj in enumerate(boxes):
            if i != j:
                assert not dominates(bi, bj)


def test_epsilon_generation_runs_and_keeps_invariants(toy):
    rng = np.random.default_rng(12)
    state = initial_epsilon_state(toy, 16, (0.5, 0.5), rng)
    sel = SputnikSelector(toy.operators, "caste", rng=np.random.default_rng(13))
    sel.observe(state.population_F)
    for _ in range(5):
        state = epsilon_moea_generation(state, sel, toy, EvolutionConfig(16, 0.9, 1.0, (0.5, 0.5)), rng)
        assert sel.last_selections.sum() == 16
    assert state.generation_index == 5 and len(state.population) == 16
    np.testing.assert_array_equal(state.population_F, np.vstack([p.objectives for p in state.population]))
    np.testing.assert_array_equal(state.archive_F, np.vstack([a.objectives for a in state.archive]))
    boxes = [tuple(box_index(a.objectives, state.epsilon)) for a in state.archive]
    assert len(set(boxes)) == len(boxes)


def test_epsilon_state_rejects_bad_epsilon():
    with pytest.raises(ConfigError):
        EpsilonState([ind(1.0, 1.0)], [], (-1.0, 1.0))


def test_rank_and_crowding_shapes():
    F = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0], [3.0, 3.0]])
    rank, crowd = rank_and_crowding(F)
    assert rank.tolist() == [0, 0, 0, 1]
    assert np.isinf(crowd[3])
