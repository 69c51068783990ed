#!/usr/bin/env python3
"""
Golden-value files for the IMF benchmark suite.

Writes seeded decision vectors together with objective values computed by an
independent scalar implementation (plain ``math``, one variable at a time),
and verifies the vectorised library against such a file.
"""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gmoea.problems import PROBLEM_NAMES, THREE_OBJECTIVE, make_problem  # noqa: E402

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

LINEAR = ("IMF1", "IMF2", "IMF3", "IMF4")


def _linkage(name, x, i):
    """t_i for the 1-based variable index i."""
    D = len(x)
    if name in LINEAR:
        return x[i - 1] - x[0]
    return x[i - 1] ** (1.0 / (1.0 + 3.0 * i / D)) - x[0]


def scalar_objectives(name, x):
    """Objective vector of one decision vector, computed term by term."""
    D = len(x)
    if name in THREE_OBJECTIVE:
        g = sum(_linkage(name, x, i) ** 2 for i in range(3, D + 1))
        a = math.pi * x[0] / 2.0
        b = math.pi * x[1] / 2.0
        return [
            (1.0 + g) * math.cos(a) * math.cos(b),
            (1.0 + g) * math.cos(a) * math.sin(b),
            (1.0 + g) * math.sin(a),
        ]

    t = [_linkage(name, x, i) for i in range(2, D + 1)]
    if name == "IMF9":
        g = 1.0 + 10.0 * (D - 1) + sum(v * v - 10.0 * math.cos(2.0 * math.pi * v) for v in t)
    elif name == "IMF10":
        y = [1.0 + v for v in t]
        g = 1.0 + sum(100.0 * (y[k] ** 2 - y[k + 1]) ** 2 + (1.0 - y[k]) ** 2 for k in range(len(y) - 1))
    else:
        g = 1.0 + 9.0 * sum(v * v for v in t) / len(t)

    if name in ("IMF3", "IMF7"):
        f1 = 1.0 - math.exp(-4.0 * x[0]) * math.sin(6.0 * math.pi * x[0]) ** 6
    else:
        f1 = x[0]
    if name in ("IMF2", "IMF3", "IMF6", "IMF7"):
        f2 = g * (1.0 - (f1 / g) ** 2)
    else:
        f2 = g * (1.0 - math.sqrt(f1 / g))
    return [f1, f2]


def golden_path(directory, name, D):
    return Path(directory) / f"{name}_D{D}.txt"


class GoldenValues:
    def __init__(self, dims=(5, 30), samples=8, seed=2024):
        self.dims = tuple(dims)
        self.samples = samples
        self.seed = seed

    def collect(self, name, D, rng):
        """Rows of D inputs followed by the M scalar-computed objectives."""
        rows = []
        for x in rng.random((self.samples, D)):
            x = [float(v) for v in x]
            rows.append(x + scalar_objectives(name, x))
        return np.array(rows)

    def write(self, directory):
        """One text file per (problem, D): space-separated, 17 significant digits."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(self.seed)
        paths = []
        for name in PROBLEM_NAMES:
            for D in self.dims:
                path = golden_path(directory, name, D)
                np.savetxt(path, self.collect(name, D, rng), fmt="%.17g", delimiter=" ")
                paths.append(path)
        logger.info(f"Wrote {len(paths)} golden files to {directory}")
        return paths


def read_golden(path, D):
    """(X, F) from one golden file."""
    rows = np.atleast_2d(np.loadtxt(path, dtype=np.float64))
    return rows[:, :D], rows[:, D:]


def verify_golden(directory, rtol=1e-12, atol=1e-12):
    """Compare the library against every golden file; returns (checked, mismatches)."""
    mismatches = []
    checked = 0
    for path in sorted(Path(directory).glob("IMF*_D*.txt")):
        name, dim = path.stem.split("_D")
        spec = make_problem(name, int(dim))
        X, expected = read_golden(path, spec.D)
        got = spec.evaluate(X)
        checked += X.shape[0]
        bad = ~np.all(np.isclose(got, expected, rtol=rtol, atol=atol), axis=1)
        for k in np.flatnonzero(bad):
            mismatches.append((name, spec.D, expected[k].tolist(), got[k].tolist()))

    if mismatches:
        logger.warning(f"{len(mismatches)} of {checked} cases disagree:")
        for name, D, expected, got in mismatches:
            logger.warning(f"- {name} D={D}: expected {expected}, got {got}")
    else:
        logger.info(f"All {checked} golden cases agree")
    return checked, mismatches


def main():
    parser = argparse.ArgumentParser(description="Write or verify IMF golden-value files")
    parser.add_argument("--out", default="data/golden", help="Golden file directory")
    parser.add_argument("--verify", action="store_true", help="Verify instead of writing")
    parser.add_argument("--samples", type=int, default=8, help="Vectors per problem and D")
    parser.add_argument("--seed", type=int, default=2024, help="Seed for the decision vectors")
    args = parser.parse_args()

    if args.verify:
        _, mismatches = verify_golden(args.out)
        return 1 if mismatches else 0
    GoldenValues(samples=args.samples, seed=args.seed).write(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
