import numpy as np
import pytest

from sputnik.core import OperatorHandle
from sputnik.indicators import ObjectiveBounds
from sputnik.kernels import available_backends


class ToyProblem:
    """Genome is its own objective vector; operators shift it."""

    n_objectives = 2
    objective_names = ("f0", "f1")

    def __init__(self, shifts=None):
        shifts = shifts or {"down": -1.0, "up": 1.0}
        self.operators = [OperatorHandle(name, self._shift(delta)) for name, delta in shifts.items()]

    @staticmethod
    def _shift(delta):
        return lambda genome, rng: tuple(x + delta for x in genome)

    def random_genome(self, rng):
        return tuple(float(x) for x in rng.uniform(0.0, 10.0, size=2))

    def crossover(self, a, b, rng):
        return (a[0], b[1]), (b[0], a[1])

    def evaluate(self, genomes):
        return np.array(genomes, dtype=float)

    def objective_bounds(self):
        return ObjectiveBounds([-50.0, -50.0], [50.0, 50.0])


def py_dominates(a, b):
    """Reference dominance written with plain loops."""
    no_worse = all(x <= y for x, y in zip(a, b))
    better = any(x < y for x, y in zip(a, b))
    return no_worse and better


def brute_force_fronts(F):
    """Peel fronts by checking every remaining pair; O(n^3 m) and obviously right."""
    remaining = set(range(len(F)))
    fronts = []
    while remaining:
        front = sorted(i for i in remaining
                       if not any(py_dominates(F[j], F[i]) for j in remaining if j != i))
        fronts.append(front)
        remaining -= set(front)
    return fronts


def monte_carlo_hv(front, ref, samples=1_000_000, seed=0, chunk=250_000):
    """Dominated-area estimate by uniform sampling of the box [min(front), ref].

    A sample x is dominated when some point p has p0 <= x0 and p1 <= x1, i.e.
    when the smallest p1 among points with p0 <= x0 is at most x1.
    """
    front = np.asarray(front, dtype=float)
    lo = front.min(axis=0)
    ref = np.asarray(ref, dtype=float)
    order = np.argsort(front[:, 0], kind="stable")
    f0 = front[order, 0]
    best_f1 = np.minimum.accumulate(front[order, 1])
    rng = np.random.default_rng(seed)
    hit = 0
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        pts = rng.uniform(lo, ref, size=(n, 2))
        k = np.searchsorted(f0, pts[:, 0], side="right")
        hit += int(np.count_nonzero((k > 0) & (best_f1[np.maximum(k - 1, 0)] <= pts[:, 1])))
    return hit / samples * float(np.prod(ref - lo))


@pytest.fixture
def toy():
    return ToyProblem()


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
