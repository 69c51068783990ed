"""
IMF1-IMF10 benchmark suite.

Ten box-bounded test problems in [0, 1]^D whose Pareto sets are curves (or a
surface, for the tri-objective IMF4 and IMF8) threading through the decision
space via variable linkages. IMF1-IMF4 set every variable equal to x1 on the Pareto set,
IMF5-IMF10 use a power-law linkage. Each problem also knows how to sample its
Pareto front on a uniform grid and how to place points on its Pareto set.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from gmoea.core import BoxBounds, as_vector
from gmoea.errors import DimensionError, PreconditionError, RangeError, UnknownProblemError

logger = logging.getLogger(__name__)

PROBLEM_NAMES = tuple(f"IMF{i}" for i in range(1, 11))
THREE_OBJECTIVE = ("IMF4", "IMF8")
PRESET_DIMS = (30, 50, 100, 200)
PRESET_BUDGETS = {30: 5000, 50: 10000, 100: 15000, 200: 30000}
PRESET_POPULATION = {2: 100, 3: 105}

# Smallest f1 reachable by 1 - exp(-4x) sin^6(6 pi x): the first peak of the
# damped term sits where tan(6 pi x) = 9 pi.
_X_PEAK = math.atan(9.0 * math.pi) / (6.0 * math.pi)
IMF3_F1_MIN = 1.0 - math.exp(-4.0 * _X_PEAK) * math.sin(6.0 * math.pi * _X_PEAK) ** 6


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    D: int
    M: int
    bounds: BoxBounds
    linkage: str
    front: str
    _objectives: Callable = field(repr=False)

    def evaluate(self, X):
        """Objective matrix for a matrix of decision vectors (no FE accounting)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.D:
            raise DimensionError(f"{self.name} expects {self.D} variables, got {X.shape[1]}")
        return self._objectives(X)

    def pf_sampler(self, target_size):
        return sample_pf(self, target_size)


# Variable linkages: t_i for the 1-based variable indices start..D.

def _linear_linkage(X, start):
    return X[:, start - 1:] - X[:, :1]


def _power_linkage(X, start):
    D = X.shape[1]
    i = np.arange(start, D + 1, dtype=np.float64)
    return X[:, start - 1:] ** (1.0 / (1.0 + 3.0 * i / D)) - X[:, :1]


_LINKAGES = {"linear": _linear_linkage, "power": _power_linkage}


def _g_mean(t):
    return 1.0 + 9.0 * np.mean(t ** 2, axis=1)


def _g_rastrigin(t):
    return 1.0 + 10.0 * t.shape[1] + np.sum(t ** 2 - 10.0 * np.cos(2.0 * np.pi * t), axis=1)


def _g_rosenbrock(t):
    y = 1.0 + t
    return 1.0 + np.sum(100.0 * (y[:, :-1] ** 2 - y[:, 1:]) ** 2 + (1.0 - y[:, :-1]) ** 2, axis=1)


def _two_objective(linkage, g_func, f1_func, shape):
    link = _LINKAGES[linkage]

    def objectives(X):
        g = g_func(link(X, 2))
        f1 = f1_func(X[:, 0])
        ratio = f1 / g
        f2 = g * (1.0 - np.sqrt(ratio)) if shape == "convex" else g * (1.0 - ratio ** 2)
        return np.column_stack([f1, f2])

    return objectives


def _three_objective(linkage):
    link = _LINKAGES[linkage]

    def objectives(X):
        g = np.sum(link(X, 3) ** 2, axis=1)
        a = 0.5 * np.pi * X[:, 0]
        b = 0.5 * np.pi * X[:, 1]
        return (1.0 + g)[:, None] * np.column_stack([
            np.cos(a) * np.cos(b),
            np.cos(a) * np.sin(b),
            np.sin(a),
        ])

    return objectives


def _identity(x1):
    return x1


def _damped_f1(x1):
    return 1.0 - np.exp(-4.0 * x1) * np.sin(6.0 * np.pi * x1) ** 6


# name -> (linkage, front, builder)
_SUITE = {
    "IMF1": ("linear", "convex", lambda: _two_objective("linear", _g_mean, _identity, "convex")),
    "IMF2": ("linear", "concave", lambda: _two_objective("linear", _g_mean, _identity, "concave")),
    "IMF3": ("linear", "damped", lambda: _two_objective("linear", _g_mean, _damped_f1, "concave")),
    "IMF4": ("linear", "sphere", lambda: _three_objective("linear")),
    "IMF5": ("power", "convex", lambda: _two_objective("power", _g_mean, _identity, "convex")),
    "IMF6": ("power", "concave", lambda: _two_objective("power", _g_mean, _identity, "concave")),
    "IMF7": ("power", "damped", lambda: _two_objective("power", _g_mean, _damped_f1, "concave")),
    "IMF8": ("power", "sphere", lambda: _three_objective("power")),
    "IMF9": ("power", "convex", lambda: _two_objective("power", _g_rastrigin, _identity, "convex")),
    "IMF10": ("power", "convex", lambda: _two_objective("power", _g_rosenbrock, _identity, "convex")),
}


def objective_count(name):
    if name not in _SUITE:
        raise UnknownProblemError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEM_NAMES)}")
    return 3 if name in THREE_OBJECTIVE else 2


def make_problem(name, D):
    """Build the named IMF problem with D decision variables."""
    M = objective_count(name)
    if int(D) != D or D < M:
        raise PreconditionError(f"{name} needs an integer D >= {M}, got {D}")
    D = int(D)
    linkage, front, builder = _SUITE[name]
    return ProblemSpec(name, D, M, BoxBounds.unit(D), linkage, front, builder())


def objective_eval(spec, x):
    """Objective vector of a single in-bounds decision vector."""
    x = as_vector(x, "decision vector")
    if x.size != spec.D:
        raise DimensionError(f"{spec.name} expects {spec.D} variables, got {x.size}")
    if not spec.bounds.contains(x):
        raise RangeError(f"decision vector outside the bounds of {spec.name}")
    return spec.evaluate(x[None, :])[0]


def pareto_set(spec, params):
    """Decision vectors on the Pareto set for PF parameters in [0, 1]^(M-1)."""
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    if params.shape[1] != spec.M - 1:
        raise DimensionError(f"{spec.name} takes {spec.M - 1} front parameters")
    n = params.shape[0]
    start = spec.M
    X = np.empty((n, spec.D))
    X[:, :spec.M - 1] = params
    x1 = params[:, :1]
    if spec.linkage == "linear":
        X[:, start - 1:] = x1
    else:
        i = np.arange(start, spec.D + 1, dtype=np.float64)
        X[:, start - 1:] = x1 ** (1.0 + 3.0 * i / spec.D)
    return X


def front_residual(spec, F):
    """Distance bound from objective vectors to the analytic front.

    For the sphere fronts this is the exact distance to the unit sphere; for
    curves it is the vertical gap to f2 = h(f1), which bounds the Euclidean
    distance from above.
    """
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    if spec.front == "sphere":
        return np.abs(np.linalg.norm(F, axis=1) - 1.0)
    f1 = F[:, 0]
    if spec.front == "convex":
        curve = 1.0 - np.sqrt(np.clip(f1, 0.0, None))
    else:
        curve = 1.0 - f1 ** 2
    return np.abs(F[:, 1] - curve)


def lattice_size(H):
    """Number of points of a 3-objective simplex lattice with H divisions."""
    return (H + 1) * (H + 2) // 2


def _lattice_divisions(target_size):
    H = 1
    while lattice_size(H + 1) <= target_size:
        H += 1
    if abs(lattice_size(H + 1) - target_size) < abs(lattice_size(H) - target_size):
        H += 1
    return H


@lru_cache(maxsize=32)
def _front_points(front, target_size):
    if front == "sphere":
        H = _lattice_divisions(target_size)
        rows = [(i, j, H - i - j) for i in range(H + 1) for j in range(H + 1 - i)]
        W = np.array(rows, dtype=np.float64) / H
        pf = W / np.linalg.norm(W, axis=1, keepdims=True)
    else:
        lo = IMF3_F1_MIN if front == "damped" else 0.0
        f1 = np.linspace(lo, 1.0, target_size)
        f2 = 1.0 - np.sqrt(f1) if front == "convex" else 1.0 - f1 ** 2
        pf = np.column_stack([f1, f2])
    pf.setflags(write=False)
    return pf


def sample_pf(spec, target_size):
    """Evenly spread Pareto-front points, as close to target_size as the grid allows."""
    if target_size < spec.M:
        raise PreconditionError(f"PF sample size must be at least M={spec.M}")
    return _front_points(spec.front, int(target_size))


def preset_population(M):
    return PRESET_POPULATION[M]


def preset_budget(D):
    """FE budget of the preset matching D (the nearest preset at or above D)."""
    for dim in PRESET_DIMS:
        if D <= dim:
            return PRESET_BUDGETS[dim]
    return PRESET_BUDGETS[PRESET_DIMS[-1]]


def list_problems():
    """One row per problem: name, M, preset dimensions, linkage and front shape."""
    return [
        {
            "problem": name,
            "M": objective_count(name),
            "N": PRESET_POPULATION[objective_count(name)],
            "D presets": ", ".join(str(d) for d in PRESET_DIMS),
            "linkage": _SUITE[name][0],
            "front": _SUITE[name][1],
        }
        for name in PROBLEM_NAMES
    ]
