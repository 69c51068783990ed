import math

import numpy as np
import pytest

from gmoea.core import BoxBounds, Population
from gmoea.errors import PreconditionError, StateError
from gmoea.selection import (
    classify,
    environmental_select,
    neighbour_count,
    spea2_fitness,
    truncate,
)


def _pop(F, X=None):
    F = np.asarray(F, dtype=float)
    if X is None:
        X = np.linspace(0.0, 1.0, len(F) * 2).reshape(len(F), 2)
    return Population(X, F)


# Independent loop-based SPEA2 used as the oracle below.

def _dominates(a, b):
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def _brute_fitness(F):
    n = len(F)
    strength = [sum(_dominates(F[i], F[j]) for j in range(n)) for i in range(n)]
    raw = [sum(strength[j] for j in range(n) if _dominates(F[j], F[i])) for i in range(n)]
    k = max(1, int(math.floor(math.sqrt(n))))
    fit = []
    for i in range(n):
        d = sorted(math.dist(F[i], F[j]) for j in range(n) if j != i)
        sigma = d[min(k, len(d)) - 1] if d else 0.0
        fit.append(raw[i] + 1.0 / (sigma + 2.0))
    return fit


def _brute_truncate(F, members, N):
    members = list(members)
    while len(members) > N:
        profiles = []
        for i in members:
            profiles.append((sorted(math.dist(F[i], F[j]) for j in members if j != i), i))
        members.remove(min(profiles)[1])
    return members


def _brute_select(F, N):
    fit = _brute_fitness(F)
    A = [i for i in range(len(F)) if fit[i] < 1.0]
    if len(A) < N:
        return sorted(range(len(F)), key=lambda i: (fit[i], i))[:N]
    if len(A) == N:
        return A
    return _brute_truncate(F, A, N)


def test_fitness_hand_example():
    t = spea2_fitness(_pop([[1, 1], [2, 2], [0, 3]]))
    np.testing.assert_array_equal(t.strength, [1, 0, 0])
    np.testing.assert_array_equal(t.raw, [0, 1, 0])
    np.testing.assert_allclose(t.density, [1 / (2 + math.sqrt(2)), 1 / (2 + math.sqrt(2)), 1 / (2 + math.sqrt(5))])
    np.testing.assert_allclose(t.fit, [0.2929, 1.2929, 0.2361], atol=1e-4)


def test_mutually_nondominated_have_fit_below_one():
    t = spea2_fitness(_pop([[0, 4], [1, 3], [2, 2], [3, 1], [4, 0]]))
    assert np.all(t.raw == 0)
    assert np.all(t.fit < 1)


def test_duplicates_do_not_dominate_each_other():
    t = spea2_fitness(_pop([[1, 1], [1, 1], [2, 2]]))
    np.testing.assert_array_equal(t.strength, [1, 1, 0])
    assert t.raw[2] == 2


def test_unevaluated_member_rejected():
    pop = Population(np.zeros((2, 2)), np.array([[0.0, 1.0], [np.nan, np.nan]]))
    with pytest.raises(StateError):
        spea2_fitness(pop)


def test_neighbour_count():
    assert neighbour_count(1) == 1
    assert neighbour_count(3) == 1
    assert neighbour_count(100) == 10
    assert neighbour_count(210) == 14


def test_truncation_lexicographic_tie_break():
    out = truncate(_pop([[0, 1], [0.1, 0.9], [1, 0]]), 2)
    np.testing.assert_allclose(out.F, [[0, 1], [1, 0]])


def test_truncation_removes_a_duplicate_first():
    out = truncate(_pop([[0, 1], [0.5, 0.5], [0.5, 0.5], [1, 0]]), 3)
    np.testing.assert_allclose(out.F, [[0, 1], [0.5, 0.5], [1, 0]])


def test_truncation_needs_surplus():
    with pytest.raises(PreconditionError):
        truncate(_pop([[0, 1], [1, 0]]), 2)


def test_select_fills_with_best_fit():
    F = [[0, 2], [1, 1], [2, 0], [1, 2], [2, 1], [2, 2], [3, 3], [4, 4]]
    pop = _pop(F)
    fit = spea2_fitness(pop).fit
    chosen = environmental_select(pop, 5)
    expected = np.argsort(fit, kind="stable")[:5]
    np.testing.assert_allclose(chosen.F, np.asarray(F, dtype=float)[expected])
    np.testing.assert_allclose(chosen.fitness, fit[expected])


def test_select_identity_when_all_nondominated():
    F = [[0, 3], [1, 2], [2, 1], [3, 0]]
    chosen = environmental_select(_pop(F), 4)
    np.testing.assert_allclose(chosen.F, F)


def test_select_needs_enough_members():
    with pytest.raises(PreconditionError):
        environmental_select(_pop([[0, 1], [1, 0]]), 3)


@pytest.mark.parametrize("seed", range(200))
def test_selection_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    M = int(rng.integers(2, 4))
    N = int(rng.integers(1, n + 1))
    F = rng.random((n, M))
    pop = _pop(F)

    np.testing.assert_allclose(spea2_fitness(pop).fit, _brute_fitness(F.tolist()), rtol=1e-12)
    chosen = environmental_select(pop, N)
    expected = _brute_select(F.tolist(), N)
    assert len(chosen) == N
    assert sorted(map(tuple, chosen.F.tolist())) == sorted(tuple(F[i]) for i in expected)


def test_classify_labels_dominating_pair_real():
    pop = _pop([[0, 1], [2, 2], [1, 0], [3, 3]], X=np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8]]))
    data = classify(pop, BoxBounds.unit(2))
    np.testing.assert_array_equal(data.real, [True, False, True, False])
    assert len(data.real_samples) == len(data.fake_samples) == 2


def test_classify_rescales_to_unit_cube():
    bounds = BoxBounds(np.array([-5.0, 10.0]), np.array([5.0, 20.0]))
    X = np.array([[-5.0, 10.0], [5.0, 20.0], [0.0, 15.0], [2.5, 12.5]])
    data = classify(_pop([[0, 1], [1, 0], [2, 2], [3, 3]], X), bounds)
    np.testing.assert_allclose(data.X, [[0, 0], [1, 1], [0.5, 0.5], [0.75, 0.25]])
    assert np.all((data.X >= 0) & (data.X <= 1))


def test_classify_odd_population():
    F = np.random.default_rng(1).random((5, 2))
    with pytest.raises(PreconditionError):
        classify(_pop(F), BoxBounds.unit(2))
    data = classify(_pop(F), BoxBounds.unit(2), allow_odd=True)
    assert data.real.sum() == 2
    assert (~data.real).sum() == 3
