"""
Core value types shared by every other module.

Decision and objective vectors are plain float64 numpy arrays; a population
keeps them as row-stacked matrices so selection and metrics can work on the
whole set at once. Minimisation is the only convention.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from gmoea.errors import BudgetError, DimensionError, RangeError

logger = logging.getLogger(__name__)

# Stream ids used by a single run; one generator per concern.
STREAM_INIT = 0
STREAM_GAN_INIT = 1
STREAM_TRAIN = 2
STREAM_VARIATION = 3


class Relation(Enum):
    A_DOMINATES_B = "a<b"
    B_DOMINATES_A = "b<a"
    NON_DOMINATED = "a~b"
    EQUAL = "a=b"


class Direction(Enum):
    TO_UNIT = "to_unit"
    FROM_UNIT = "from_unit"


def as_vector(values, name="vector"):
    """Convert to a 1-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RangeError(f"{name} contains non-finite entries")
    return arr


def dominates(a, b):
    """Pareto relation between two objective vectors under minimisation."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"objective vectors differ in length: {a.size} vs {b.size}")
    a_le = np.all(a <= b)
    b_le = np.all(b <= a)
    if a_le and b_le:
        return Relation.EQUAL
    if a_le:
        return Relation.A_DOMINATES_B
    if b_le:
        return Relation.B_DOMINATES_A
    return Relation.NON_DOMINATED


def dominance_matrix(F):
    """Boolean matrix whose entry (i, j) is True when row i dominates row j."""
    F = np.asarray(F, dtype=np.float64)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def nondominated_mask(F):
    """Mask of rows not dominated by any other row."""
    F = np.asarray(F, dtype=np.float64)
    if len(F) == 0:
        return np.zeros(0, dtype=bool)
    return ~dominance_matrix(F).any(axis=0)


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower, "lower bound")
        upper = as_vector(self.upper, "upper bound")
        if lower.shape != upper.shape:
            raise DimensionError("lower and upper bounds differ in length")
        if not np.all(lower < upper):
            raise RangeError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self):
        return self.lower.size

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def midpoint(self):
        return (self.lower + self.upper) / 2.0

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def _check_dim(self, x):
        if x.shape[-1] != self.dim:
            raise DimensionError(f"expected {self.dim} variables, got {x.shape[-1]}")


def clamp(x, bounds):
    """Project x (a vector or a row matrix) onto the box."""
    x = np.asarray(x, dtype=np.float64)
    bounds._check_dim(x)
    return np.clip(x, bounds.lower, bounds.upper)


def rescale(x, bounds, direction):
    """Map between problem units and the unit cube."""
    x = np.asarray(x, dtype=np.float64)
    bounds._check_dim(x)
    if direction is Direction.TO_UNIT:
        if not bounds.contains(x):
            raise RangeError("rescale to unit cube requires x within bounds")
        return (x - bounds.lower) / bounds.width
    if direction is Direction.FROM_UNIT:
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise RangeError("rescale from unit cube requires x within [0, 1]")
        return x * bounds.width + bounds.lower
    raise ValueError(f"unknown direction {direction!r}")


@dataclass
class Individual:
    x: np.ndarray
    f: Optional[np.ndarray] = None
    fitness: Optional[float] = None

    @property
    def evaluated(self):
        return self.f is not None


@dataclass
class Population:
    """Row-stacked decision vectors with their (possibly missing) objectives.

    Unevaluated members carry a NaN objective row; ``fitness`` is the SPEA2
    Fit cached by the last selection step, if any.
    """

    X: np.ndarray
    F: Optional[np.ndarray] = None
    fitness: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        if self.F is not None:
            self.F = np.atleast_2d(np.asarray(self.F, dtype=np.float64))
            if self.F.shape[0] != self.X.shape[0]:
                raise DimensionError(
                    f"{self.X.shape[0]} decision rows but {self.F.shape[0]} objective rows"
                )
        if self.fitness is not None:
            self.fitness = np.asarray(self.fitness, dtype=np.float64)

    @classmethod
    def from_members(cls, members):
        members = list(members)
        X = np.array([m.x for m in members], dtype=np.float64)
        F = None
        if members and all(m.evaluated for m in members):
            F = np.array([m.f for m in members], dtype=np.float64)
        return cls(X, F)

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i):
        f = None
        if self.F is not None and not np.isnan(self.F[i]).any():
            f = self.F[i].copy()
        fit = None if self.fitness is None else float(self.fitness[i])
        return Individual(self.X[i].copy(), f, fit)

    @property
    def members(self):
        return [self[i] for i in range(len(self))]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def evaluated(self):
        """Per-member evaluation mask."""
        if self.F is None:
            return np.zeros(len(self), dtype=bool)
        return ~np.isnan(self.F).any(axis=1)

    @property
    def fully_evaluated(self):
        return bool(self.evaluated.all())

    def take(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        F = None if self.F is None else self.F[idx]
        fit = None if self.fitness is None else self.fitness[idx]
        return Population(self.X[idx], F, fit)

    def merge(self, other):
        """Union P ∪ Q keeping P's members first."""
        if self.F is None and other.F is None:
            F = None
        else:
            m = (self.F if self.F is not None else other.F).shape[1]
            mine = self.F if self.F is not None else np.full((len(self), m), np.nan)
            theirs = other.F if other.F is not None else np.full((len(other), m), np.nan)
            F = np.vstack([mine, theirs])
        return Population(np.vstack([self.X, other.X]), F)

    def nondominated(self):
        """Non-dominated subset of the evaluated members."""
        pop = self.take(np.flatnonzero(self.evaluated))
        if len(pop) == 0:
            return pop
        return pop.take(np.flatnonzero(nondominated_mask(pop.F)))


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; identical pairs give identical sequences."""

    seed: int
    stream: int = 0

    def generator(self):
        if self.seed < 0:
            raise RangeError("seed must be non-negative")
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))


@dataclass
class FeCounter:
    """Function-evaluation budget bookkeeping."""

    budget: int
    used: int = 0
    history: list = field(default_factory=list)

    @property
    def remaining(self):
        return self.budget - self.used

    def consume(self, n):
        if n > self.remaining:
            raise BudgetError(n, self.remaining)
        self.used += n
        self.history.append(n)


def random_population(spec, size, rng):
    """Uniform random, unevaluated population inside the problem's box."""
    b = spec.bounds
    X = b.lower + rng.random((size, b.dim)) * b.width
    return Population(X, np.full((size, spec.M), np.nan))


def evaluate_population(spec, pop, budget):
    """Evaluate every member lacking objectives, charging the FE counter."""
    todo = ~pop.evaluated
    n = int(todo.sum())
    if n == 0:
        return Population(pop.X.copy(), None if pop.F is None else pop.F.copy(), None)
    budget.consume(n)
    F = np.full((len(pop), spec.M), np.nan) if pop.F is None else pop.F.copy()
    F[todo] = spec.evaluate(pop.X[todo])
    logger.debug(f"Evaluated {n} members, {budget.remaining} FEs remaining")
    return Population(pop.X.copy(), F, None)
