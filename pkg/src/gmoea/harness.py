"""
Experiment harness and command line front end.

Subcommands:
  run         execute one run config and write its record JSON
  experiment  execute every (algorithm, problem, D) cell of a plan, in parallel
  stats       median/IQR table with rank-sum symbols against a reference algorithm
  trace       convergence-profile CSV from a records directory
  problems    list the benchmark suite
  losses      execute a GMOEA run and write its GAN loss trace

Records land at ``<out>/<problem>_<D>/<algorithm slug>/run_<k>.json``.
"""

import argparse
import csv
import json
import logging
import os
import sys
import traceback
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from tabulate import tabulate

from gmoea.algorithms import Algorithm, RunRecord, Snapshot, compare, run
from gmoea.config import build_run_config, load_config
from gmoea.core import Population
from gmoea.errors import ConfigError, GmoeaError, PreconditionError, UnknownProblemError
from gmoea.metrics import SIMILAR
from gmoea.problems import PROBLEM_NAMES, list_problems, objective_count

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
THREADS_ENV = "GMOEA_THREADS"
STATS_COLUMNS = ["problem", "D", "algorithm", "igd_median", "igd_iqr", "hv_median", "hv_iqr", "symbol_vs_ref"]
TRACE_COLUMNS = ["problem", "D", "algorithm", "run", "fe", "igd", "hv"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


# ----------------- Experiment plans -----------------

@dataclass(frozen=True)
class ExperimentPlan:
    cells: List[Tuple[str, str, int]]
    runs: int = 20
    base_seed: int = 0
    out: str = "results"
    jobs: int = 1
    reference: str = "GMOEA"

    @classmethod
    def from_settings(cls, settings):
        section = settings["experiment"]
        algorithms = [Algorithm.parse(a).value for a in section["algorithms"]]
        for problem in section["problems"]:
            if problem not in PROBLEM_NAMES:
                raise settings.error(f"unknown problem {problem!r}", "experiment", "problems")
        for D in section["dims"]:
            if isinstance(D, bool) or not isinstance(D, (int, float)) or not float(D).is_integer():
                raise settings.error(f"dims entries must be integers, got {D!r}", "experiment", "dims")
            for problem in section["problems"]:
                if D < objective_count(problem):
                    raise settings.error(
                        f"D={D} is below the {objective_count(problem)} objectives of {problem}", "experiment", "dims"
                    )
        cells = [(a, p, int(d)) for p in section["problems"] for d in section["dims"] for a in algorithms]
        if section["runs"] < 1:
            raise settings.error("runs must be at least 1", "experiment", "runs")
        return cls(
            cells=cells,
            runs=int(section["runs"]),
            base_seed=int(section["base_seed"]),
            out=str(section["out"]),
            jobs=resolve_jobs(section["jobs"]),
            reference=Algorithm.parse(section["reference"]).value,
        )


def resolve_jobs(configured):
    """Parallelism degree; the GMOEA_THREADS environment variable wins."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            jobs = int(value)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
        logger.info(f"Using {jobs} jobs from {THREADS_ENV}")
        return jobs
    return int(configured)


def cell_seed(base_seed, cell, run_index):
    """base_seed + run_index, offset by a hash of the cell so cells never share seeds."""
    algorithm, problem, D = cell
    tag = f"{Algorithm.parse(algorithm).value}|{problem}|{D}".encode()
    return int(base_seed) + (zlib.crc32(tag) << 16) + int(run_index)


def record_path(out, cell, run_index):
    algorithm, problem, D = cell
    return Path(out) / f"{problem}_{D}" / Algorithm.parse(algorithm).slug / f"run_{run_index}.json"


# ----------------- Record persistence -----------------

def record_json(record):
    return json.dumps(record.to_dict(), indent=2) + "\n"


def write_record(record, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record_json(record))
    return path


def record_from_dict(doc):
    config = build_run_config(doc["config"])
    X = np.asarray(doc["final_decisions"], dtype=np.float64)
    F = np.asarray(doc["final_objectives"], dtype=np.float64)
    snapshots = [Snapshot(int(s["fe"]), float(s["igd"]), float(s["hv"])) for s in doc["snapshots"]]
    return RunRecord(config, int(doc["seed"]), int(doc["fe_used"]), int(doc["wall_ms"]), snapshots, Population(X, F))


def load_record(path):
    with open(path, "r") as f:
        return record_from_dict(json.load(f))


def load_records(records_dir):
    """Records under a directory keyed by (problem, D, algorithm), each list ordered by run index."""
    records_dir = Path(records_dir)
    if not records_dir.is_dir():
        raise PreconditionError(f"records directory {records_dir} does not exist")
    grouped = {}
    paths = sorted(records_dir.glob("*/*/run_*.json"), key=lambda p: (p.parent, int(p.stem.split("_")[1])))
    for path in paths:
        record = load_record(path)
        c = record.config
        grouped.setdefault((c.problem, c.D, c.algorithm), []).append(record)
    logger.info(f"Loaded {len(paths)} records from {records_dir}")
    return grouped


# ----------------- Execution -----------------

def _run_task(cfg, path):
    record = run(cfg)
    write_record(record, path)
    logger.info(f"Finished {cfg.algorithm} on {cfg.problem} D={cfg.D} seed={cfg.seed} -> {path}")
    return str(path)


def plan_tasks(plan, base):
    tasks = []
    for cell in plan.cells:
        algorithm, problem, D = cell
        for k in range(plan.runs):
            cfg = replace(base, algorithm=algorithm, problem=problem, D=D, seed=cell_seed(plan.base_seed, cell, k))
            tasks.append((cfg, record_path(plan.out, cell, k)))
    return tasks


def run_experiment(plan, base):
    """Run every (cell, run) task and write one record file each; returns the paths."""
    tasks = plan_tasks(plan, base)
    logger.info(f"Running {len(tasks)} runs over {len(plan.cells)} cells with {plan.jobs} jobs")
    paths = Parallel(n_jobs=plan.jobs)(delayed(_run_task)(cfg, path) for cfg, path in tasks)
    logger.info(f"Experiment finished; records in {plan.out}")
    return [Path(p) for p in paths]


# ----------------- Statistics -----------------

@dataclass
class StatsRow:
    problem: str
    D: int
    algorithm: str
    igd_median: Optional[float] = None
    igd_iqr: Optional[float] = None
    hv_median: Optional[float] = None
    hv_iqr: Optional[float] = None
    symbol_vs_ref: str = ""
    best_igd: bool = False
    best_hv: bool = False

    @property
    def missing(self):
        return self.igd_median is None


def _iqr(values):
    q75, q25 = np.percentile(values, [75, 25])
    return float(q75 - q25)


@dataclass
class StatsTable:
    rows: List[StatsRow] = field(default_factory=list)
    reference: str = "GMOEA"

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(STATS_COLUMNS)
            for r in self.rows:
                writer.writerow([
                    r.problem,
                    r.D,
                    r.algorithm,
                    "" if r.missing else repr(r.igd_median),
                    "" if r.missing else repr(r.igd_iqr),
                    "" if r.missing else repr(r.hv_median),
                    "" if r.missing else repr(r.hv_iqr),
                    r.symbol_vs_ref,
                ])

    def to_text(self):
        """Aligned grid; '*' marks the best median of each (problem, D) row."""
        def cell(value, spread, best):
            if value is None:
                return "-"
            return f"{value:.4e} ({spread:.2e}){' *' if best else ''}"

        body = [
            [r.problem, r.D, r.algorithm, cell(r.igd_median, r.igd_iqr, r.best_igd),
             cell(r.hv_median, r.hv_iqr, r.best_hv), r.symbol_vs_ref]
            for r in self.rows
        ]
        headers = ["problem", "D", "algorithm", "IGD median (IQR)", "HV median (IQR)", f"vs {self.reference}"]
        return tabulate(body, headers=headers, tablefmt="grid")


def _algorithm_order(names):
    order = [a.value for a in Algorithm]
    return sorted(names, key=order.index)


def _instance_order(key):
    problem, D = key
    return (PROBLEM_NAMES.index(problem), D)


def summarize(records_dir, reference="GMOEA", indicator="igd"):
    """Per-instance medians, IQRs, rank-sum symbols and best-cell markers."""
    reference = Algorithm.parse(reference).value
    grouped = load_records(records_dir)
    instances = sorted({(p, d) for p, d, _ in grouped}, key=_instance_order)
    algorithms = _algorithm_order({a for _, _, a in grouped})
    with_symbols = len(algorithms) > 1
    table = StatsTable(reference=reference)

    for problem, D in instances:
        block = []
        ref_records = grouped.get((problem, D, reference), [])
        for algorithm in algorithms:
            records = grouped.get((problem, D, algorithm))
            row = StatsRow(problem, D, algorithm)
            if not records:
                logger.warning(f"No records for {algorithm} on {problem} D={D}")
                block.append(row)
                continue
            igd = [r.final_igd for r in records]
            hv = [r.final_hv for r in records]
            row.igd_median, row.igd_iqr = float(np.median(igd)), _iqr(igd)
            row.hv_median, row.hv_iqr = float(np.median(hv)), _iqr(hv)
            if with_symbols:
                if algorithm == reference:
                    row.symbol_vs_ref = SIMILAR
                elif len(records) >= 2 and len(ref_records) >= 2:
                    row.symbol_vs_ref = compare(records, ref_records, indicator).symbol
                else:
                    logger.warning(f"Too few runs to compare {algorithm} with {reference} on {problem} D={D}")
            block.append(row)

        present = [r for r in block if not r.missing]
        if present:
            min(present, key=lambda r: r.igd_median).best_igd = True
            max(present, key=lambda r: r.hv_median).best_hv = True
        table.rows.extend(block)
    return table


def trace_rows(records_dir):
    rows = []
    grouped = load_records(records_dir)
    order = [a.value for a in Algorithm]
    for (problem, D, algorithm), records in sorted(
        grouped.items(), key=lambda kv: (_instance_order(kv[0][:2]), order.index(kv[0][2]))
    ):
        for k, record in enumerate(records):
            for s in record.snapshots:
                rows.append([problem, D, algorithm, k, s.fe, repr(s.igd), repr(s.hv)])
    return rows


def write_trace_csv(records_dir, path):
    rows = trace_rows(records_dir)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(rows)
    return len(rows)


# ----------------- Command line -----------------

def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="gmoea", description="GMOEA experiments on the IMF benchmark suite")
    parser.add_argument("--verbose", action="store_true", help="Log per-generation detail")
    parser.add_argument("--quiet", action="store_true", help="Log warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="Run one configuration")
    p.add_argument("--config", help="YAML/JSON config file (packaged defaults when omitted)")
    p.add_argument("--out", help="Record JSON path (stdout when omitted)")
    p.add_argument("--losses", help="Also write the GAN loss trace CSV here")

    p = sub.add_parser("experiment", help="Run an experiment plan")
    p.add_argument("--config", help="YAML/JSON config file")
    p.add_argument("--out", help="Override experiment.out")
    p.add_argument("--jobs", type=int, help="Override experiment.jobs")

    p = sub.add_parser("stats", help="Summarise a records directory")
    p.add_argument("records", help="Records directory")
    p.add_argument("--reference", default="GMOEA", help="Algorithm the symbols compare against")
    p.add_argument("--indicator", choices=["igd", "hv"], default="igd")
    p.add_argument("--csv", help="CSV path (default <records>/stats.csv)")
    p.add_argument("--text", help="Text table path (default <records>/stats.txt)")

    p = sub.add_parser("trace", help="Convergence-profile CSV")
    p.add_argument("records", help="Records directory")
    p.add_argument("--csv", help="CSV path (default <records>/trace.csv)")

    sub.add_parser("problems", help="List the benchmark suite")

    p = sub.add_parser("losses", help="Run a GMOEA configuration and write its loss trace")
    p.add_argument("--config", help="YAML/JSON config file")
    p.add_argument("--csv", required=True, help="Loss trace CSV path")
    return parser


def _cmd_run(args):
    record = run(load_config(args.config).run_config())
    if args.out:
        write_record(record, args.out)
        logger.info(f"Record written to {args.out}")
    else:
        sys.stdout.write(record_json(record))
    if args.losses:
        record.losses.to_csv(args.losses)
        logger.info(f"Loss trace written to {args.losses}")


def _cmd_experiment(args):
    settings = load_config(args.config)
    plan = ExperimentPlan.from_settings(settings)
    if args.out:
        plan = replace(plan, out=args.out)
    if args.jobs is not None:
        plan = replace(plan, jobs=args.jobs)
    run_experiment(plan, settings.run_config())


def _cmd_stats(args):
    table = summarize(args.records, args.reference, args.indicator)
    csv_path = args.csv or os.path.join(args.records, "stats.csv")
    text_path = args.text or os.path.join(args.records, "stats.txt")
    table.to_csv(csv_path)
    text = table.to_text()
    Path(text_path).write_text(text + "\n", encoding="utf-8")
    print(text)
    logger.info(f"Statistics written to {csv_path} and {text_path}")


def _cmd_trace(args):
    path = args.csv or os.path.join(args.records, "trace.csv")
    n = write_trace_csv(args.records, path)
    logger.info(f"{n} trace rows written to {path}")


def _cmd_problems(args):
    rows = list_problems()
    print(tabulate([list(r.values()) for r in rows], headers=list(rows[0]), tablefmt="grid"))


def _cmd_losses(args):
    cfg = load_config(args.config).run_config()
    if cfg.tag in (Algorithm.SPEA2, Algorithm.GMOEA_STAR):
        raise ConfigError(f"{cfg.algorithm} trains no GAN, so it has no loss trace")
    record = run(cfg)
    record.losses.to_csv(args.csv)
    logger.info(f"{len(record.losses)} loss rows written to {args.csv}")


COMMANDS = {
    "run": _cmd_run,
    "experiment": _cmd_experiment,
    "stats": _cmd_stats,
    "trace": _cmd_trace,
    "problems": _cmd_problems,
    "losses": _cmd_losses,
}


def cli_run(argv=None):
    """Parse arguments, dispatch and map failures to exit codes."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        logging.basicConfig(format=LOG_FORMAT)
        logger.error(str(e))
        return EXIT_CONFIG
    setup_logging(args.verbose, args.quiet)
    try:
        COMMANDS[args.command](args)
    except (ConfigError, UnknownProblemError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except GmoeaError as e:
        logger.error(str(e))
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        logger.error(traceback.format_exc())
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    return cli_run(sys.argv[1:])
