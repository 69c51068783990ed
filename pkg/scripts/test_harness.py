import csv
import itertools
import json
import os
from pathlib import Path

import numpy as np
import pytest

from gmoea.algorithms import Algorithm, RunConfig, RunRecord, Snapshot
from gmoea.config import load_text
from gmoea.core import Population
from gmoea.errors import ConfigError
from gmoea.harness import (
    EXIT_CONFIG,
    EXIT_OK,
    STATS_COLUMNS,
    THREADS_ENV,
    TRACE_COLUMNS,
    ExperimentPlan,
    cell_seed,
    cli_run,
    load_record,
    record_path,
    resolve_jobs,
    summarize,
    write_record,
    write_trace_csv,
)
from gmoea.metrics import SIMILAR
from gmoea.problems import PRESET_DIMS, PROBLEM_NAMES

SRC = str(Path(__file__).resolve().parent.parent / "src")

SMALL_RUN = """\
run:
  algorithm: {algorithm}
  problem: IMF1
  D: 5
  N: 10
  budget: 40
  seed: 3
  pf_size: 200
  gan:
    epochs: 1
    batch: 4
"""

SMALL_EXPERIMENT = """\
experiment:
  algorithms: [GMOEA, SPEA2]
  problems: [IMF1]
  dims: [5]
  runs: 2
  jobs: 1
"""


@pytest.fixture(autouse=True)
def _no_thread_override(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)


def _write_config(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _fake_record(algorithm, problem, D, igd, hv):
    cfg = RunConfig(algorithm=algorithm, problem=problem, D=D, N=10, budget=40)
    return RunRecord(cfg, 0, 40, 0, [Snapshot(10, igd * 2, hv / 2), Snapshot(40, igd, hv)],
                     Population(np.zeros((1, D)), np.zeros((1, 2))))


def _write_fake(out, algorithm, problem, D, values):
    for k, (igd, hv) in enumerate(values):
        write_record(_fake_record(algorithm, problem, D, igd, hv), record_path(out, (algorithm, problem, D), k))


def _tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.json"))}


def test_problems_command_lists_suite(capsys):
    assert cli_run(["problems"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in PROBLEM_NAMES:
        assert name in out


def test_run_is_byte_identical(tmp_path):
    config = _write_config(tmp_path, SMALL_RUN.format(algorithm="GMOEA"))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    losses = tmp_path / "losses.csv"
    assert cli_run(["run", "--config", config, "--out", str(a), "--losses", str(losses)]) == EXIT_OK
    assert cli_run(["run", "--config", config, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["fe_used"] == 40
    with open(losses) as f:
        assert len(list(csv.reader(f))) == 1 + 6


def test_run_writes_stdout_without_out(tmp_path, capsys):
    config = _write_config(tmp_path, SMALL_RUN.format(algorithm="SPEA2"))
    assert cli_run(["run", "--config", config]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["algorithm"] == "SPEA2"


def test_unknown_key_reports_line(tmp_path, caplog):
    config = _write_config(tmp_path, "run:\n  algorithm: GMOEA\n  bogus: 1\n")
    assert cli_run(["run", "--config", config]) == EXIT_CONFIG
    assert f"{config}:3:" in caplog.text
    with pytest.raises(ConfigError) as info:
        load_text("run:\n  algorithm: GMOEA\n  bogus: 1\n", "inline")
    assert info.value.line == 3


def test_type_mismatch_reports_line():
    with pytest.raises(ConfigError) as info:
        load_text("run:\n  seed: 1\n  gan:\n    epochs: many\n", "inline")
    assert info.value.line == 4


def test_bad_yaml_and_bad_values_exit_with_config_code(tmp_path):
    broken = _write_config(tmp_path, "run: [unclosed\n", "broken.yaml")
    assert cli_run(["run", "--config", broken]) == EXIT_CONFIG
    unknown = _write_config(tmp_path, "run:\n  problem: IMF11\n", "unknown.yaml")
    assert cli_run(["run", "--config", unknown]) == EXIT_CONFIG
    assert cli_run(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert cli_run(["no-such-command"]) == EXIT_CONFIG


def test_unknown_algorithm_points_at_its_line():
    settings = load_text("run:\n  seed: 2\n  algorithm: NSGA-II\n", "inline")
    with pytest.raises(ConfigError) as info:
        settings.run_config()
    assert info.value.line == 3


def test_config_accepts_json():
    settings = load_text('{"run": {"problem": "IMF4", "D": 10}}', "inline.json")
    cfg = settings.run_config()
    assert (cfg.problem, cfg.D, cfg.algorithm) == ("IMF4", 10, "GMOEA")


def test_experiment_parallel_matches_sequential(tmp_path, monkeypatch):
    monkeypatch.setenv("PYTHONPATH", os.pathsep.join(filter(None, [SRC, os.environ.get("PYTHONPATH")])))
    config = _write_config(tmp_path, SMALL_RUN.format(algorithm="GMOEA") + SMALL_EXPERIMENT)
    seq, par = tmp_path / "seq", tmp_path / "par"
    assert cli_run(["experiment", "--config", config, "--out", str(seq), "--jobs", "1"]) == EXIT_OK
    assert cli_run(["experiment", "--config", config, "--out", str(par), "--jobs", "2"]) == EXIT_OK
    files = _tree_bytes(seq)
    assert len(files) == 4
    assert "IMF1_5/gmoea/run_1.json" in {k.replace(os.sep, "/") for k in files}
    assert files == _tree_bytes(par)

    assert cli_run(["stats", str(seq)]) == EXIT_OK
    with open(seq / "stats.csv", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == STATS_COLUMNS
    assert [r[2] for r in rows[1:]] == ["GMOEA", "SPEA2"]
    assert rows[1][-1] == SIMILAR
    assert (seq / "stats.txt").exists()


def test_plan_from_settings():
    settings = load_text(SMALL_EXPERIMENT, "inline")
    plan = ExperimentPlan.from_settings(settings)
    assert plan.cells == [("GMOEA", "IMF1", 5), ("SPEA2", "IMF1", 5)]
    assert plan.runs == 2
    bad = load_text("experiment:\n  problems: [IMF1, IMF99]\n", "inline")
    with pytest.raises(ConfigError) as info:
        ExperimentPlan.from_settings(bad)
    assert info.value.line == 2


@pytest.mark.parametrize("dims,message", [
    ("[2]", "below the 3 objectives of IMF4"),
    ("[30, 7.5]", "must be integers"),
    ("[thirty]", "must be integers"),
])
def test_plan_rejects_bad_dims(dims, message):
    text = f"experiment:\n  problems: [IMF1, IMF4]\n  dims: {dims}\n"
    with pytest.raises(ConfigError, match=message) as info:
        ExperimentPlan.from_settings(load_text(text, "inline"))
    assert info.value.line == 3


def test_bad_dims_exit_with_config_code(tmp_path, caplog):
    config = _write_config(tmp_path, "experiment:\n  problems: [IMF4]\n  dims: [2]\n")
    assert cli_run(["experiment", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert f"{config}:3:" in caplog.text
    assert not (tmp_path / "out").exists()


def test_tiny_gan_population_is_a_config_error(tmp_path):
    config = _write_config(tmp_path, SMALL_RUN.format(algorithm="GMOEA").replace("N: 10", "N: 3"))
    assert cli_run(["run", "--config", config, "--out", str(tmp_path / "run.json")]) == EXIT_CONFIG


def test_thread_override(monkeypatch):
    assert resolve_jobs(2) == 2
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_jobs(1) == 3
    monkeypatch.setenv(THREADS_ENV, "lots")
    with pytest.raises(ConfigError):
        resolve_jobs(1)


def test_cell_seeds_never_collide():
    seeds = set()
    cells = itertools.product([a.value for a in Algorithm], PROBLEM_NAMES, PRESET_DIMS)
    count = 0
    for cell in cells:
        for k in range(20):
            seeds.add(cell_seed(0, cell, k))
            count += 1
    assert len(seeds) == count
    assert cell_seed(5, ("GMOEA", "IMF1", 30), 0) == cell_seed(0, ("GMOEA", "IMF1", 30), 0) + 5


def test_record_layout_and_reload(tmp_path):
    path = record_path(tmp_path, ("GMOEA*", "IMF3", 30), 4)
    assert path == tmp_path / "IMF3_30" / "gmoea_star" / "run_4.json"
    record = _fake_record("GMOEA*", "IMF3", 30, 0.25, 0.7)
    write_record(record, path)
    loaded = load_record(path)
    assert loaded.config == record.config
    assert loaded.final_igd == 0.25
    assert [s.fe for s in loaded.snapshots] == [10, 40]


def test_summary_medians_and_symbols(tmp_path):
    _write_fake(tmp_path, "GMOEA", "IMF1", 30, [(0.01 + 0.001 * k, 0.9) for k in range(10)])
    _write_fake(tmp_path, "SPEA2", "IMF1", 30, [(0.5 + 0.01 * k, 0.3) for k in range(10)])
    _write_fake(tmp_path, "GMOEA*", "IMF1", 30, [(0.01 + 0.001 * k, 0.9) for k in range(10)])
    table = summarize(tmp_path)
    by_alg = {r.algorithm: r for r in table.rows}
    assert by_alg["GMOEA"].igd_median == pytest.approx(np.median([0.01 + 0.001 * k for k in range(10)]))
    assert by_alg["GMOEA"].symbol_vs_ref == SIMILAR
    assert by_alg["GMOEA*"].symbol_vs_ref == SIMILAR
    # SPEA2 is significantly worse than the reference
    assert by_alg["SPEA2"].symbol_vs_ref == "−"
    assert by_alg["SPEA2"].hv_iqr == 0.0
    assert by_alg["GMOEA"].best_igd and not by_alg["SPEA2"].best_igd
    assert "*" in table.to_text()


def test_summary_single_algorithm_has_no_symbols(tmp_path):
    _write_fake(tmp_path, "SPEA2", "IMF2", 30, [(0.1, 0.5), (0.2, 0.4), (0.3, 0.3)])
    table = summarize(tmp_path)
    assert len(table.rows) == 1
    assert table.rows[0].symbol_vs_ref == ""
    assert table.rows[0].igd_median == pytest.approx(0.2)


def test_summary_leaves_gaps_for_missing_cells(tmp_path):
    _write_fake(tmp_path, "GMOEA", "IMF1", 30, [(0.1, 0.5), (0.2, 0.4)])
    _write_fake(tmp_path, "GMOEA", "IMF2", 30, [(0.1, 0.5), (0.2, 0.4)])
    _write_fake(tmp_path, "SPEA2", "IMF1", 30, [(0.1, 0.5), (0.2, 0.4)])
    table = summarize(tmp_path)
    keys = [(r.problem, r.algorithm, r.missing) for r in table.rows]
    assert keys == [
        ("IMF1", "GMOEA", False),
        ("IMF1", "SPEA2", False),
        ("IMF2", "GMOEA", False),
        ("IMF2", "SPEA2", True),
    ]
    csv_path = tmp_path / "stats.csv"
    table.to_csv(csv_path)
    with open(csv_path, encoding="utf-8") as f:
        last = list(csv.reader(f))[-1]
    assert last[:3] == ["IMF2", "30", "SPEA2"]
    assert last[3:7] == ["", "", "", ""]


def test_trace_csv(tmp_path):
    _write_fake(tmp_path, "SPEA2", "IMF1", 30, [(0.1, 0.5), (0.2, 0.4)])
    _write_fake(tmp_path, "GMOEA", "IMF1", 30, [(0.1, 0.5)])
    out = tmp_path / "trace.csv"
    assert write_trace_csv(tmp_path, out) == 6
    with open(out, encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == TRACE_COLUMNS
    assert rows[1][:5] == ["IMF1", "30", "GMOEA", "0", "10"]
    assert cli_run(["trace", str(tmp_path)]) == EXIT_OK


def test_losses_command(tmp_path):
    baseline = _write_config(tmp_path, SMALL_RUN.format(algorithm="SPEA2"), "spea2.yaml")
    assert cli_run(["losses", "--config", baseline, "--csv", str(tmp_path / "x.csv")]) == EXIT_CONFIG
    config = _write_config(tmp_path, SMALL_RUN.format(algorithm="GMOEA-"), "minus.yaml")
    out = tmp_path / "losses.csv"
    assert cli_run(["losses", "--config", config, "--csv", str(out)]) == EXIT_OK
    with open(out) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["generation", "epoch", "batch", "d_loss", "g_loss"]
    assert len(rows) == 7


def test_stats_on_missing_directory_is_runtime_error(tmp_path):
    assert cli_run(["stats", str(tmp_path / "nope")]) == 2
