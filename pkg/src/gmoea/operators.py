"""
Real-coded variation: SBX, polynomial mutation, binary tournament mating and
the hybrid reproduction that mixes GAN sampling with the genetic pipeline.

The batch helpers (``sbx_pairs``, ``mutate_rows``) do the work on whole
matrices; ``sbx`` and ``polynomial_mutation`` are the single-vector views.
Every operator draws its random numbers in a fixed order from the rng it is
handed, so a seeded generator reproduces the output bit for bit.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from gmoea.core import Population, as_vector, clamp
from gmoea.errors import DimensionError, PreconditionError, RangeError
from gmoea.gan import generate_candidates

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariationConfig:
    eta_c: float = 20.0
    p_c: float = 1.0
    eta_m: float = 20.0
    p_m: Optional[float] = None  # None means 1/D
    p_var: float = 0.5
    gan_share: float = 0.5
    mutate_gan: bool = False

    def __post_init__(self):
        for name in ("p_c", "p_var", "gan_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise RangeError(f"{name} must lie in [0, 1], got {value}")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise RangeError(f"p_m must lie in [0, 1], got {self.p_m}")
        if self.eta_c < 0 or self.eta_m < 0:
            raise RangeError("distribution indices must be non-negative")

    def mutation_rate(self, D):
        return 1.0 / D if self.p_m is None else self.p_m

    def to_dict(self):
        return asdict(self)


def _check_inside(X, bounds, what):
    if not bounds.contains(X):
        raise RangeError(f"{what} outside the box")


def sbx_pairs(P1, P2, cfg, bounds, rng):
    """SBX on row-aligned parent matrices; returns the two child matrices."""
    P1 = np.atleast_2d(np.asarray(P1, dtype=np.float64))
    P2 = np.atleast_2d(np.asarray(P2, dtype=np.float64))
    if P1.shape != P2.shape:
        raise DimensionError(f"parent shapes differ: {P1.shape} vs {P2.shape}")
    bounds._check_dim(P1)
    _check_inside(P1, bounds, "first parent")
    _check_inside(P2, bounds, "second parent")
    n, D = P1.shape

    u = rng.random((n, D))
    var_mask = rng.random((n, D)) < cfg.p_var
    pair_mask = rng.random(n) < cfg.p_c

    exponent = 1.0 / (cfg.eta_c + 1.0)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** exponent,
        (1.0 / (2.0 * (1.0 - u))) ** exponent,
    )
    # identical genes have nothing to spread
    active = var_mask & pair_mask[:, None] & (np.abs(P1 - P2) > 1e-14)
    beta = np.where(active, beta, 1.0)

    mean = 0.5 * (P1 + P2)
    half_gap = 0.5 * (P1 - P2)
    C1 = np.where(active, mean + beta * half_gap, P1)
    C2 = np.where(active, mean - beta * half_gap, P2)
    return clamp(C1, bounds), clamp(C2, bounds)


def sbx(p1, p2, cfg, bounds, rng):
    """Simulated binary crossover of two parents."""
    p1 = as_vector(p1, "first parent")
    p2 = as_vector(p2, "second parent")
    if p1.size != p2.size:
        raise DimensionError(f"parents differ in length: {p1.size} vs {p2.size}")
    c1, c2 = sbx_pairs(p1[None, :], p2[None, :], cfg, bounds, rng)
    return c1[0], c2[0]


def mutate_rows(X, cfg, bounds, rng):
    """Bounded polynomial mutation applied row by row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    bounds._check_dim(X)
    _check_inside(X, bounds, "mutation input")
    n, D = X.shape
    mask = rng.random((n, D)) < cfg.mutation_rate(D)
    r = rng.random((n, D))

    lo, width = bounds.lower, bounds.width
    d1 = (X - lo) / width
    d2 = (bounds.upper - X) / width
    power = cfg.eta_m + 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        left = (2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1) ** power) ** (1.0 / power) - 1.0
        right = 1.0 - (2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2) ** power) ** (1.0 / power)
    delta = np.where(r < 0.5, left, right)
    out = np.where(mask, X + delta * width, X)
    return clamp(out, bounds)


def polynomial_mutation(x, cfg, bounds, rng):
    x = as_vector(x, "decision vector")
    return mutate_rows(x[None, :], cfg, bounds, rng)[0]


def _fit_values(fit):
    return np.asarray(getattr(fit, "fit", fit), dtype=np.float64)


def binary_tournament(pop, fit, k, rng):
    """Indices of k parents, each the lower-Fit member of two uniform draws."""
    n = len(pop)
    if n < 2:
        raise PreconditionError(f"tournament needs at least two members, got {n}")
    values = _fit_values(fit)
    if values.size != n:
        raise DimensionError(f"{values.size} fitness values for {n} members")
    draws = rng.integers(0, n, size=(k, 2))
    first, second = draws[:, 0], draws[:, 1]
    return np.where(values[second] < values[first], second, first)


def genetic_offspring(pop, fit, n, cfg, bounds, rng, keep_both=True):
    """n offspring from tournament parents, SBX and polynomial mutation.

    With ``keep_both`` each SBX pair contributes both children (the SPEA2
    accounting); otherwise one child per pair is kept uniformly at random.
    """
    if n == 0:
        return np.empty((0, pop.dim))
    n_pairs = (n + 1) // 2 if keep_both else n
    parents = binary_tournament(pop, fit, 2 * n_pairs, rng)
    P1, P2 = pop.X[parents[0::2]], pop.X[parents[1::2]]
    C1, C2 = sbx_pairs(P1, P2, cfg, bounds, rng)
    if keep_both:
        children = np.empty((2 * n_pairs, pop.dim))
        children[0::2], children[1::2] = C1, C2
        children = children[:n]
    else:
        pick_first = rng.random(n_pairs) < 0.5
        children = np.where(pick_first[:, None], C1, C2)
    return mutate_rows(children, cfg, bounds, rng)


def hybrid_reproduce(pop, fit, gan, model, cfg, bounds, rng):
    """N unevaluated offspring, each slot from the GAN with probability gan_share.

    The remaining slots go through the genetic path (one SBX child kept per
    pair, then polynomial mutation). GAN offspring are mutated only when
    ``cfg.mutate_gan`` is set.
    """
    N = len(pop)
    from_gan = rng.random(N) < cfg.gan_share
    n_gan = int(from_gan.sum())
    if n_gan and (gan is None or model is None):
        raise PreconditionError("GAN path selected without a trained generator")

    X = np.empty((N, pop.dim))
    if n_gan:
        generated = generate_candidates(gan, model, n_gan, bounds, rng)
        if cfg.mutate_gan:
            generated = mutate_rows(generated, cfg, bounds, rng)
        X[from_gan] = generated
    X[~from_gan] = genetic_offspring(pop, fit, N - n_gan, cfg, bounds, rng, keep_both=False)
    logger.debug(f"Reproduced {N} offspring, {n_gan} from the generator")
    M = pop.F.shape[1] if pop.F is not None else 1
    return Population(X, np.full((N, M), np.nan))
