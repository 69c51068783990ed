"""GMOEA: GAN-driven multiobjective evolution, the SPEA2 baseline and the IMF benchmark suite."""

from gmoea.algorithms import Algorithm, RunConfig, RunRecord, compare, run, run_gmoea, run_spea2
from gmoea.errors import GmoeaError
from gmoea.problems import make_problem, sample_pf

__version__ = "1.0.0"

__all__ = [
    "Algorithm",
    "GmoeaError",
    "RunConfig",
    "RunRecord",
    "compare",
    "make_problem",
    "run",
    "run_gmoea",
    "run_spea2",
    "sample_pf",
]
