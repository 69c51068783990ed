"""
The generator/discriminator pair used for offspring reproduction.

The generator (D-D-D-D) maps latent vectors drawn from a Gaussian fitted to
the real samples into the unit cube; the discriminator (D-D-1) scores unit-cube
vectors as real. Each generation the pair is trained on the labelled
population (real = selected half, fake = the rest) with a three-term
discriminator loss, then sampled for candidate decision vectors.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from gmoea.core import Direction, rescale
from gmoea.errors import DegeneracyError, PreconditionError
from gmoea.nn import (
    MlpParams,
    AdamState,
    adam_init,
    adam_step,
    backward,
    disc_loss_and_grad,
    forward,
    gen_loss_and_grad,
    mlp_init,
)

logger = logging.getLogger(__name__)

JITTER_SCHEDULE = (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
LATENT_MODES = ("gaussian", "standard")
GENERATOR_INITS = ("identity", "glorot")

# Per-activation (gain, shift) of a layer that is close to the identity on
# [0, 1]: relu passes x through, sigmoid(4x - 2) ~ x around 0.5.
_IDENTITY_AFFINE = {"relu": (1.0, 0.0), "sigmoid": (4.0, -2.0)}
IDENTITY_NOISE = 0.1


@dataclass(frozen=True)
class GanConfig:
    epochs: int = 200
    batch: int = 32
    lr_d: float = 1e-4
    lr_g: float = 4e-4
    beta1: float = 0.5
    beta2: float = 0.999
    hidden: str = "relu"
    non_saturating: bool = False
    reset_optimizer: bool = False
    latent: str = "gaussian"
    generator_init: str = "identity"

    def __post_init__(self):
        if self.latent not in LATENT_MODES:
            raise PreconditionError(f"latent must be one of {LATENT_MODES}, got {self.latent!r}")
        if self.generator_init not in GENERATOR_INITS:
            raise PreconditionError(f"generator_init must be one of {GENERATOR_INITS}, got {self.generator_init!r}")
        if self.epochs < 0 or self.batch < 1:
            raise PreconditionError("epochs must be >= 0 and batch >= 1")


@dataclass
class GanPair:
    generator: MlpParams
    discriminator: MlpParams
    g_opt: AdamState
    d_opt: AdamState

    @property
    def dim(self):
        return self.generator.in_dim


@dataclass
class LatentModel:
    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray
    jitter: float = 0.0


@dataclass
class LossTrace:
    """Per-update losses; ``generation`` is stamped by the caller."""

    rows: List[tuple] = field(default_factory=list)

    def append(self, generation, epoch, batch, d_loss, g_loss):
        self.rows.append((int(generation), int(epoch), int(batch), float(d_loss), float(g_loss)))

    def extend(self, other):
        self.rows.extend(other.rows)

    def restamp(self, generation):
        return LossTrace([(generation,) + row[1:] for row in self.rows])

    def __len__(self):
        return len(self.rows)

    @property
    def d_losses(self):
        return np.array([r[3] for r in self.rows])

    @property
    def g_losses(self):
        return np.array([r[4] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["generation", "epoch", "batch", "d_loss", "g_loss"])
            for row in self.rows:
                writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4])])


def identity_generator(D, rng, hidden="relu"):
    """Generator D-D-D-D that starts close to G(y) = y on the unit cube.

    Every layer is a scaled identity plus Glorot weights shrunk by
    IDENTITY_NOISE, so the generated samples begin where the latent model
    puts them: on the real samples.
    """
    glorot = mlp_init([D, D, D, D], rng, hidden=hidden)
    last = len(glorot.layers) - 1
    layers = []
    for i, (W, _) in enumerate(glorot.layers):
        gain, shift = _IDENTITY_AFFINE["sigmoid" if i == last else hidden]
        layers.append((gain * np.eye(D) + IDENTITY_NOISE * W, np.full(D, shift)))
    return MlpParams(layers, hidden, "sigmoid")


def init_gan_pair(D, rng, cfg=GanConfig()):
    """Fresh networks (generator D-D-D-D, discriminator D-D-1) with zeroed Adam state."""
    if cfg.generator_init == "identity":
        generator = identity_generator(D, rng, hidden=cfg.hidden)
    else:
        generator = mlp_init([D, D, D, D], rng, hidden=cfg.hidden)
    discriminator = mlp_init([D, D, 1], rng, hidden=cfg.hidden)
    return GanPair(
        generator,
        discriminator,
        adam_init(generator, cfg.lr_g, cfg.beta1, cfg.beta2),
        adam_init(discriminator, cfg.lr_d, cfg.beta1, cfg.beta2),
    )


def reset_optimizers(gan, cfg):
    return GanPair(
        gan.generator,
        gan.discriminator,
        adam_init(gan.generator, cfg.lr_g, cfg.beta1, cfg.beta2),
        adam_init(gan.discriminator, cfg.lr_d, cfg.beta1, cfg.beta2),
    )


def real_statistics(real):
    """Sample mean and unbiased covariance of the real samples."""
    real = np.atleast_2d(np.asarray(real, dtype=np.float64))
    if real.shape[0] < 2:
        raise PreconditionError("need at least two real samples for a covariance")
    mu = real.mean(axis=0)
    centred = real - mu
    sigma = centred.T @ centred / (real.shape[0] - 1)
    return mu, sigma


def cholesky(sigma, jitter_schedule=JITTER_SCHEDULE):
    """Lower factor of sigma + j*I for the first jitter j that works.

    Returns ``(L, j)``.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T):
        raise PreconditionError("covariance must be a symmetric square matrix")
    eye = np.eye(sigma.shape[0])
    for j in jitter_schedule:
        try:
            L = np.linalg.cholesky(sigma + j * eye)
        except np.linalg.LinAlgError:
            continue
        if j > 0:
            logger.debug(f"Cholesky needed jitter {j:g}")
        return L, j
    raise DegeneracyError(f"covariance not factorisable with jitter up to {jitter_schedule[-1]:g}")


def fit_latent_model(real):
    """Gaussian latent model of the real samples, falling back to a diagonal covariance."""
    mu, sigma = real_statistics(real)
    try:
        L, j = cholesky(sigma)
    except DegeneracyError:
        logger.warning("Degenerate covariance; falling back to its diagonal")
        sigma = np.diag(np.clip(np.diag(sigma), 0.0, None))
        L, j = cholesky(sigma)
    return LatentModel(mu, sigma, L, j)


def standard_latent_model(D):
    eye = np.eye(D)
    return LatentModel(np.zeros(D), eye, eye.copy(), 0.0)


def sample_latent(model, m, rng):
    """m draws of mu + L u with u standard normal."""
    u = rng.standard_normal((m, model.mu.size))
    return model.mu + u @ model.chol.T


def train(gan, data, epochs, batch, rng, cfg=GanConfig(), model=None):
    """Alternate discriminator and generator updates over shuffled mini-batches.

    Every epoch shuffles the labelled data and walks floor(|X| / batch)
    batches. For each batch the discriminator sees the batch's real and fake
    members plus ``batch`` generated samples, then the generator is updated on
    a fresh latent draw. Returns the trained pair and the loss trace.
    """
    n = len(data)
    n_real = int(data.real.sum())
    if n_real == 0 or n_real == n:
        raise PreconditionError("training data needs both real and fake samples")
    if n < batch:
        raise PreconditionError(f"need at least {batch} samples, got {n}")
    trace = LossTrace()
    if epochs == 0:
        return gan, trace
    if model is None:
        model = fit_latent_model(data.real_samples) if cfg.latent == "gaussian" else standard_latent_model(data.X.shape[1])

    G, Dn, g_opt, d_opt = gan.generator, gan.discriminator, gan.g_opt, gan.d_opt
    for epoch in range(epochs):
        order = rng.permutation(n)
        for b in range(n // batch):
            idx = order[b * batch:(b + 1) * batch]
            T, labels = data.X[idx], data.real[idx]

            z = sample_latent(model, batch, rng)
            generated, _ = forward(G, z)
            scores, d_cache = forward(Dn, np.vstack([T, generated]))
            scores = scores[:, 0]
            batch_scores, gen_scores = scores[:batch], scores[batch:]
            d_loss, (g_real, g_fake, g_gen) = disc_loss_and_grad(
                batch_scores[labels], batch_scores[~labels], gen_scores
            )
            d_out = np.empty(2 * batch)
            d_out[:batch][labels] = g_real
            d_out[:batch][~labels] = g_fake
            d_out[batch:] = g_gen
            d_grads = backward(Dn, d_cache, d_out[:, None])
            Dn, d_opt = adam_step(Dn, d_opt, d_grads)

            z = sample_latent(model, batch, rng)
            generated, g_cache = forward(G, z)
            gen_scores, d_cache = forward(Dn, generated)
            g_loss, g_out = gen_loss_and_grad(gen_scores[:, 0], cfg.non_saturating)
            through_d = backward(Dn, d_cache, g_out[:, None])
            g_grads = backward(G, g_cache, through_d.d_input)
            G, g_opt = adam_step(G, g_opt, g_grads)

            trace.append(0, epoch, b, d_loss, g_loss)
    return GanPair(G, Dn, g_opt, d_opt), trace


def generate_candidates(gan, model, n, bounds, rng):
    """n decision vectors: latent draws through the generator, mapped onto the box."""
    if n == 0:
        return np.empty((0, bounds.dim))
    y = sample_latent(model, n, rng)
    unit, _ = forward(gan.generator, y)
    return rescale(unit, bounds, Direction.FROM_UNIT)
