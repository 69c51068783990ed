"""
Optimizer loops: GMOEA, the SPEA2 baseline and the two GMOEA ablations.

Every loop follows the same skeleton: a random initial population, then
generations of reproduction, evaluation and SPEA2 environmental selection on
P ∪ Q for as long as a full generation of N offspring fits in the remaining
FE budget. GMOEA additionally labels the population real/fake and retrains
its GAN each generation before reproducing.
"""

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import List, Optional

import numpy as np

from gmoea.core import (
    STREAM_GAN_INIT,
    STREAM_INIT,
    STREAM_TRAIN,
    STREAM_VARIATION,
    FeCounter,
    Population,
    RngStream,
    evaluate_population,
    random_population,
)
from gmoea.errors import ComparisonError, ConfigError, PreconditionError
from gmoea.gan import (
    GanConfig,
    LossTrace,
    fit_latent_model,
    init_gan_pair,
    reset_optimizers,
    standard_latent_model,
    train,
)
from gmoea.metrics import measure, wilcoxon_rank_sum
from gmoea.operators import VariationConfig, genetic_offspring, hybrid_reproduce
from gmoea.problems import make_problem, preset_budget, preset_population, sample_pf
from gmoea.selection import classify, environmental_select, spea2_fitness

logger = logging.getLogger(__name__)

PF_SIZE = 10000
# classify needs two real samples for the latent covariance
GAN_MIN_POPULATION = 4


class Algorithm(Enum):
    GMOEA = "GMOEA"
    SPEA2 = "SPEA2"
    GMOEA_STAR = "GMOEA*"
    GMOEA_MINUS = "GMOEA-"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        text = str(tag).strip().replace("−", "-")
        for member in cls:
            if text.upper() in (member.value, member.name):
                return member
        raise ConfigError(f"unknown algorithm {tag!r}; expected one of {', '.join(m.value for m in cls)}")

    @property
    def slug(self):
        return self.name.lower()

    @property
    def gan_share(self):
        """Fixed share for the ablations, None when the configured share applies."""
        return {Algorithm.GMOEA_STAR: 0.0, Algorithm.GMOEA_MINUS: 1.0}.get(self)

    def trains_gan(self, variation):
        return self is not Algorithm.SPEA2 and variation.gan_share > 0.0


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "GMOEA"
    problem: str = "IMF1"
    D: int = 30
    N: Optional[int] = None
    budget: Optional[int] = None
    seed: int = 0
    trace_every: Optional[int] = None
    pf_size: int = PF_SIZE
    record_timing: bool = False
    variation: VariationConfig = field(default_factory=VariationConfig)
    gan: GanConfig = field(default_factory=GanConfig)

    @classmethod
    def preset(cls, algorithm, problem, D, seed=0, **overrides):
        """Config with the population size and FE budget of the standard setup."""
        spec = make_problem(problem, D)
        return cls(
            algorithm=Algorithm.parse(algorithm).value,
            problem=problem,
            D=D,
            N=preset_population(spec.M),
            budget=preset_budget(D),
            seed=seed,
            **overrides,
        )

    @property
    def tag(self):
        return Algorithm.parse(self.algorithm)

    def resolved(self):
        """Copy with N, budget and trace cadence filled in from the presets."""
        spec = make_problem(self.problem, self.D)
        N = self.N if self.N is not None else preset_population(spec.M)
        budget = self.budget if self.budget is not None else preset_budget(self.D)
        trace_every = self.trace_every if self.trace_every is not None else N
        share = self.tag.gan_share
        variation = self.variation if share is None else replace(self.variation, gan_share=share)
        return replace(
            self,
            algorithm=self.tag.value,
            N=N,
            budget=budget,
            trace_every=trace_every,
            variation=variation,
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Snapshot:
    fe: int
    igd: float
    hv: float


@dataclass
class RunRecord:
    config: RunConfig
    seed: int
    fe_used: int
    wall_ms: int
    snapshots: List[Snapshot]
    final: Population
    losses: LossTrace = field(default_factory=LossTrace)

    @property
    def final_igd(self):
        return self.snapshots[-1].igd

    @property
    def final_hv(self):
        return self.snapshots[-1].hv

    def indicator(self, name):
        if name not in ("igd", "hv"):
            raise PreconditionError(f"unknown indicator {name!r}")
        return getattr(self.snapshots[-1], name)

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "seed": int(self.seed),
            "fe_used": int(self.fe_used),
            "wall_ms": int(self.wall_ms),
            "snapshots": [asdict(s) for s in self.snapshots],
            "final_objectives": self.final.F.tolist(),
            "final_decisions": self.final.X.tolist(),
        }


class _Run:
    """State of one optimizer run: problem, budget, RNG streams and traces."""

    def __init__(self, cfg):
        self.cfg = cfg.resolved()
        if self.cfg.N < 2:
            raise ConfigError(f"population size must be at least 2, got {self.cfg.N}")
        if self.cfg.tag.trains_gan(self.cfg.variation) and self.cfg.N < GAN_MIN_POPULATION:
            raise ConfigError(
                f"{self.cfg.algorithm} trains a GAN on the best half of the population "
                f"and needs N >= {GAN_MIN_POPULATION}, got {self.cfg.N}"
            )
        if self.cfg.budget < self.cfg.N:
            raise ConfigError(f"budget {self.cfg.budget} is smaller than the population size {self.cfg.N}")
        if self.cfg.trace_every < 1:
            raise ConfigError("trace_every must be positive")
        self.spec = make_problem(self.cfg.problem, self.cfg.D)
        self.pf = sample_pf(self.spec, self.cfg.pf_size)
        self.counter = FeCounter(self.cfg.budget)
        self.snapshots = []
        self.next_mark = 0
        self.losses = LossTrace()
        self.generation = 0

    def stream(self, stream_id):
        return RngStream(self.cfg.seed, stream_id).generator()

    def initial_population(self):
        P = random_population(self.spec, self.cfg.N, self.stream(STREAM_INIT))
        return evaluate_population(self.spec, P, self.counter)

    @property
    def can_continue(self):
        return self.counter.remaining >= self.cfg.N

    def snapshot(self, P, force=False):
        fe = self.counter.used
        if not force and fe < self.next_mark:
            return
        if self.snapshots and self.snapshots[-1].fe == fe:
            return
        front = P.nondominated()
        igd, hv = measure(front.F, self.pf)
        self.snapshots.append(Snapshot(fe, igd.value, hv.value))
        while self.next_mark <= fe:
            self.next_mark += self.cfg.trace_every
        logger.debug(
            f"gen {self.generation} fe {fe}: IGD {igd.value:.4e} HV {hv.value:.4f}"
        )

    def finish(self, P, started):
        self.snapshot(P, force=True)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        logger.info(
            f"{self.cfg.algorithm} on {self.cfg.problem} D={self.cfg.D} seed={self.cfg.seed}: "
            f"{self.counter.used} FEs, {self.generation} generations, "
            f"final IGD {self.snapshots[-1].igd:.4e} ({elapsed_ms:.0f} ms)"
        )
        wall_ms = int(round(elapsed_ms)) if self.cfg.record_timing else 0
        return RunRecord(self.cfg, self.cfg.seed, self.counter.used, wall_ms, self.snapshots, P, self.losses)


def _step(run, P, Q):
    Q = evaluate_population(run.spec, Q, run.counter)
    P = environmental_select(P.merge(Q), run.cfg.N)
    run.generation += 1
    run.snapshot(P)
    return P


def run_gmoea(cfg):
    """GMOEA and its ablations; the tag decides the GAN share."""
    if cfg.tag is Algorithm.SPEA2:
        raise ConfigError("run_gmoea does not run the SPEA2 baseline")
    started = time.perf_counter()
    run = _Run(cfg)
    cfg = run.cfg
    logger.info(f"Starting {cfg.algorithm} on {cfg.problem} D={cfg.D} N={cfg.N} budget={cfg.budget} seed={cfg.seed}")

    P = run.initial_population()
    run.snapshot(P)
    use_gan = cfg.tag.trains_gan(cfg.variation)
    gan = init_gan_pair(cfg.D, run.stream(STREAM_GAN_INIT), cfg.gan) if use_gan else None
    train_rng = run.stream(STREAM_TRAIN)
    variation_rng = run.stream(STREAM_VARIATION)
    bounds = run.spec.bounds

    model = None
    while run.can_continue:
        table = spea2_fitness(P)
        if use_gan:
            data = classify(P, bounds, allow_odd=True)
            if cfg.gan.latent == "gaussian":
                model = fit_latent_model(data.real_samples)
            else:
                model = standard_latent_model(cfg.D)
            if cfg.gan.reset_optimizer:
                gan = reset_optimizers(gan, cfg.gan)
            batch = min(cfg.gan.batch, len(data))
            gan, trace = train(gan, data, cfg.gan.epochs, batch, train_rng, cfg.gan, model)
            run.losses.extend(trace.restamp(run.generation))
            if len(trace):
                logger.debug(
                    f"gen {run.generation}: mean D loss {trace.d_losses.mean():.4f}, "
                    f"mean G loss {trace.g_losses.mean():.4f}"
                )
        Q = hybrid_reproduce(P, table, gan, model, cfg.variation, bounds, variation_rng)
        P = _step(run, P, Q)
    return run.finish(P, started)


def run_spea2(cfg):
    """SPEA2 with tournament mating and SBX + polynomial mutation, both children kept."""
    started = time.perf_counter()
    run = _Run(cfg)
    cfg = run.cfg
    logger.info(f"Starting SPEA2 on {cfg.problem} D={cfg.D} N={cfg.N} budget={cfg.budget} seed={cfg.seed}")

    P = run.initial_population()
    run.snapshot(P)
    variation_rng = run.stream(STREAM_VARIATION)
    while run.can_continue:
        table = spea2_fitness(P)
        X = genetic_offspring(P, table, cfg.N, cfg.variation, run.spec.bounds, variation_rng, keep_both=True)
        Q = Population(X, np.full((cfg.N, run.spec.M), np.nan))
        P = _step(run, P, Q)
    return run.finish(P, started)


def run(cfg):
    """Dispatch on the algorithm tag."""
    if cfg.tag is Algorithm.SPEA2:
        return run_spea2(cfg)
    return run_gmoea(cfg)


@dataclass(frozen=True)
class Comparison:
    symbol: str
    median_a: float
    median_b: float
    p_value: float


def _cell_key(record):
    c = record.config
    return (c.problem, c.D, c.budget)


def compare(records_a, records_b, indicator="igd", alpha=0.05):
    """Rank-sum comparison of final indicator values, from records_a's side."""
    records_a, records_b = list(records_a), list(records_b)
    if len(records_a) < 2 or len(records_b) < 2:
        raise PreconditionError("comparison needs at least two records per side")
    keys = {_cell_key(r) for r in records_a + records_b}
    if len(keys) != 1:
        raise ComparisonError(f"records come from different problem/budget cells: {sorted(keys)}")
    a = [r.indicator(indicator) for r in records_a]
    b = [r.indicator(indicator) for r in records_b]
    result = wilcoxon_rank_sum(a, b, alpha=alpha, lower_is_better=(indicator == "igd"))
    return Comparison(result.symbol, result.median_a, result.median_b, result.p_value)
