import numpy as np
import pytest

from gmoea.core import BoxBounds, Population
from gmoea.errors import DimensionError, PreconditionError, RangeError
from gmoea.gan import GanConfig, fit_latent_model, init_gan_pair
from gmoea.operators import (
    VariationConfig,
    binary_tournament,
    genetic_offspring,
    hybrid_reproduce,
    mutate_rows,
    polynomial_mutation,
    sbx,
    sbx_pairs,
)
from gmoea.selection import spea2_fitness

UNIT5 = BoxBounds.unit(5)


class _FixedDraws:
    """rng stand-in returning constant uniform draws."""

    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return np.full(size, self.value)


def _pop(rng, n=10, D=5):
    X = rng.random((n, D))
    F = np.column_stack([X[:, 0], 1.0 - X[:, 0] + X[:, 1]])
    return Population(X, F)


def test_sbx_symmetry_point_returns_parents():
    p1, p2 = np.full(5, 0.2), np.full(5, 0.7)
    c1, c2 = sbx(p1, p2, VariationConfig(p_var=1.0), UNIT5, _FixedDraws(0.5))
    np.testing.assert_allclose(c1, p1)
    np.testing.assert_allclose(c2, p2)


def test_sbx_preserves_midpoint(rng):
    wide = BoxBounds(np.full(5, -100.0), np.full(5, 100.0))
    P1, P2 = rng.random((200, 5)), rng.random((200, 5))
    C1, C2 = sbx_pairs(P1, P2, VariationConfig(eta_c=2.0, p_var=1.0), wide, rng)
    np.testing.assert_allclose((C1 + C2) / 2, (P1 + P2) / 2, atol=1e-12)
    assert not np.allclose(C1, P1)


def test_sbx_reproducible_and_in_bounds():
    p1, p2 = np.zeros(5), np.ones(5)
    a = sbx(p1, p2, VariationConfig(eta_c=1.0), UNIT5, np.random.default_rng(4))
    b = sbx(p1, p2, VariationConfig(eta_c=1.0), UNIT5, np.random.default_rng(4))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert UNIT5.contains(a[0]) and UNIT5.contains(a[1])


def test_sbx_probability_zero_copies_parents(rng):
    p1, p2 = rng.random(5), rng.random(5)
    c1, c2 = sbx(p1, p2, VariationConfig(p_c=0.0), UNIT5, rng)
    np.testing.assert_array_equal(c1, p1)
    np.testing.assert_array_equal(c2, p2)


def test_sbx_errors(rng):
    with pytest.raises(DimensionError):
        sbx(np.zeros(5), np.zeros(4), VariationConfig(), UNIT5, rng)
    with pytest.raises(RangeError):
        sbx(np.full(5, 1.5), np.zeros(5), VariationConfig(), UNIT5, rng)


def test_mutation_rate_defaults_to_inverse_dimension():
    assert VariationConfig().mutation_rate(30) == pytest.approx(1 / 30)
    assert VariationConfig(p_m=0.2).mutation_rate(30) == 0.2


def test_mutation_with_zero_rate_is_identity(rng):
    x = rng.random(5)
    np.testing.assert_array_equal(polynomial_mutation(x, VariationConfig(p_m=0.0), UNIT5, rng), x)


def test_mutation_output_within_bounds(rng):
    X = rng.random((500, 5))
    X[:10] = 0.0
    X[10:20] = 1.0
    out = mutate_rows(X, VariationConfig(p_m=1.0, eta_m=1.0), UNIT5, rng)
    assert UNIT5.contains(out)


def test_mutation_strength_falls_with_index():
    x = np.full(1, 0.5)
    medians = []
    for eta in (5, 20, 100):
        rng = np.random.default_rng(eta)
        X = np.repeat(x[None, :], 10000, axis=0)
        out = mutate_rows(X, VariationConfig(p_m=1.0, eta_m=eta), BoxBounds.unit(1), rng)
        medians.append(np.median(np.abs(out - X)))
    assert medians[0] > medians[1] > medians[2]


def test_mutation_rejects_out_of_bounds(rng):
    with pytest.raises(RangeError):
        polynomial_mutation(np.full(5, -0.1), VariationConfig(), UNIT5, rng)


def test_variation_config_validation():
    with pytest.raises(RangeError):
        VariationConfig(gan_share=1.5)
    with pytest.raises(RangeError):
        VariationConfig(p_m=-0.1)


def test_tournament_prefers_nondominated():
    pop = Population(np.array([[0.1], [0.9]]), np.array([[0.0, 0.0], [1.0, 1.0]]))
    fit = spea2_fitness(pop)
    rng = np.random.default_rng(0)
    winners = binary_tournament(pop, fit, 1000, rng)
    assert len(winners) == 1000
    # the dominated member only wins tournaments against itself
    assert np.mean(winners == 1) < 0.35


def test_tournament_ties_go_to_first_draw():
    pop = Population(np.zeros((3, 1)), np.zeros((3, 2)))
    rng = np.random.default_rng(5)
    winners = binary_tournament(pop, np.zeros(3), 50, rng)
    expected = np.random.default_rng(5).integers(0, 3, size=(50, 2))[:, 0]
    np.testing.assert_array_equal(winners, expected)


def test_tournament_needs_two_members():
    pop = Population(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(PreconditionError):
        binary_tournament(pop, np.zeros(1), 2, np.random.default_rng(0))


def test_tournament_deterministic(rng):
    pop = _pop(rng)
    fit = spea2_fitness(pop)
    a = binary_tournament(pop, fit, 20, np.random.default_rng(9))
    b = binary_tournament(pop, fit, 20, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_genetic_offspring_counts(rng):
    pop = _pop(rng)
    fit = spea2_fitness(pop)
    assert genetic_offspring(pop, fit, 7, VariationConfig(), UNIT5, rng, keep_both=True).shape == (7, 5)
    assert genetic_offspring(pop, fit, 7, VariationConfig(), UNIT5, rng, keep_both=False).shape == (7, 5)
    assert genetic_offspring(pop, fit, 0, VariationConfig(), UNIT5, rng).shape == (0, 5)


def _gan(rng, pop):
    pair = init_gan_pair(5, rng, GanConfig())
    return pair, fit_latent_model(pop.X[:5])


def test_hybrid_pure_genetic_needs_no_gan(rng):
    pop = _pop(rng)
    Q = hybrid_reproduce(pop, spea2_fitness(pop), None, None, VariationConfig(gan_share=0.0), UNIT5, rng)
    assert len(Q) == len(pop)
    assert not Q.evaluated.any()
    assert UNIT5.contains(Q.X)


def test_hybrid_pure_gan_requires_generator(rng):
    pop = _pop(rng)
    with pytest.raises(PreconditionError):
        hybrid_reproduce(pop, spea2_fitness(pop), None, None, VariationConfig(gan_share=1.0), UNIT5, rng)


def test_hybrid_pure_gan_matches_generator_output(rng):
    pop = _pop(rng)
    pair, model = _gan(rng, pop)
    cfg = VariationConfig(gan_share=1.0)
    Q = hybrid_reproduce(pop, spea2_fitness(pop), pair, model, cfg, UNIT5, np.random.default_rng(3))
    assert len(Q) == 10
    assert UNIT5.contains(Q.X)
    again = hybrid_reproduce(pop, spea2_fitness(pop), pair, model, cfg, UNIT5, np.random.default_rng(3))
    np.testing.assert_array_equal(Q.X, again.X)


def test_hybrid_share_is_binomial(monkeypatch, rng):
    pop = _pop(rng, n=100)
    fit = spea2_fitness(pop)
    requested = []

    def fake_generator(gan, model, n, bounds, rng):
        requested.append(n)
        return np.full((n, bounds.dim), 0.5)

    monkeypatch.setattr("gmoea.operators.generate_candidates", fake_generator)
    cfg = VariationConfig(gan_share=0.5)
    for seed in range(1000):
        Q = hybrid_reproduce(pop, fit, object(), object(), cfg, UNIT5, np.random.default_rng(seed))
        assert len(Q) == 100
    counts = np.asarray(requested)
    assert len(counts) == 1000
    assert abs(counts.mean() - 50) < 2
    assert np.mean(np.abs(counts - 50) <= 15) >= 0.99
