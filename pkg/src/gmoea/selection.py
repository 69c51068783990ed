"""
SPEA2 fitness assignment, truncation and environmental selection, plus the
real/fake classification that labels GAN training data.

All distances (density and truncation) are Euclidean distances in objective
space.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from gmoea.core import Direction, Population, dominance_matrix, rescale
from gmoea.errors import PreconditionError, StateError

logger = logging.getLogger(__name__)


@dataclass
class FitnessTable:
    strength: np.ndarray
    raw: np.ndarray
    density: np.ndarray
    fit: np.ndarray

    def __len__(self):
        return self.fit.size


@dataclass
class LabeledDataset:
    """Unit-cube decision vectors with a boolean label (True = real)."""

    X: np.ndarray
    real: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    @property
    def real_samples(self):
        return self.X[self.real]

    @property
    def fake_samples(self):
        return self.X[~self.real]


def _objectives(pop):
    if pop.F is None or not pop.fully_evaluated:
        raise StateError("population has unevaluated members")
    return pop.F


def neighbour_count(n):
    """k of the k-th nearest neighbour density: floor(sqrt(n)), at least 1."""
    return max(1, int(np.floor(np.sqrt(n))))


def fitness_from_objectives(F):
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    dom = dominance_matrix(F)
    strength = dom.sum(axis=1)
    raw = (strength[:, None] * dom).sum(axis=0).astype(np.float64)
    if n > 1:
        dist = np.sort(cdist(F, F), axis=1)
        # column 0 holds the zero self-distance
        k = min(neighbour_count(n), n - 1)
        sigma = dist[:, k]
    else:
        sigma = np.zeros(n)
    density = 1.0 / (sigma + 2.0)
    return FitnessTable(strength, raw, density, raw + density)


def spea2_fitness(pop):
    """Str, Raw, Den and Fit for every member."""
    return fitness_from_objectives(_objectives(pop))


def truncation_order(F, n_keep):
    """Indices of the rows kept by SPEA2 truncation, in original order."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    dist = cdist(F, F)
    np.fill_diagonal(dist, np.inf)
    alive = np.ones(n, dtype=bool)
    while alive.sum() > n_keep:
        idx = np.flatnonzero(alive)
        sub = np.sort(dist[np.ix_(idx, idx)], axis=1)[:, :-1]
        # lexsort keys run last-to-first; the nearest distance is the primary key
        victim = idx[np.lexsort(sub.T[::-1])[0]]
        alive[victim] = False
    return np.flatnonzero(alive)


def truncate(archive, N):
    """Remove the most crowded members one at a time until N remain."""
    F = _objectives(archive)
    if len(archive) <= N:
        raise PreconditionError(f"truncation needs more than {N} members, got {len(archive)}")
    return archive.take(truncation_order(F, N))


def selection_indices(F, N, table=None):
    """Indices chosen by SPEA2 environmental selection."""
    F = np.asarray(F, dtype=np.float64)
    table = table if table is not None else fitness_from_objectives(F)
    candidates = np.flatnonzero(table.fit < 1.0)
    if candidates.size < N:
        return np.argsort(table.fit, kind="stable")[:N]
    if candidates.size == N:
        return candidates
    return candidates[truncation_order(F[candidates], N)]


def environmental_select(pop, N):
    """Select N members: non-dominated ones first, truncated when too many."""
    F = _objectives(pop)
    if len(pop) < N:
        raise PreconditionError(f"cannot select {N} members from {len(pop)}")
    table = fitness_from_objectives(F)
    idx = selection_indices(F, N, table)
    chosen = pop.take(idx)
    chosen.fitness = table.fit[idx]
    return chosen


def classify(pop, bounds, allow_odd=False):
    """Label the better half (by environmental selection) real, the rest fake."""
    F = _objectives(pop)
    n = len(pop)
    if n < 2:
        raise PreconditionError("classification needs at least two members")
    if n % 2 and not allow_odd:
        raise PreconditionError(f"classification needs an even population, got {n}")
    real_idx = selection_indices(F, n // 2)
    real = np.zeros(n, dtype=bool)
    real[real_idx] = True
    X = rescale(pop.X, bounds, Direction.TO_UNIT)
    logger.debug(f"Classified {real.sum()} real and {n - real.sum()} fake samples")
    return LabeledDataset(X, real)
