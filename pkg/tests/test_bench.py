"""The experiment driver: spec validation, CSV reproducibility, summaries,
goldens, and the command-line surface."""

import json
import subprocess
import sys

import pytest

from introplan.bench import (
    CSV_COLUMNS,
    ExperimentSpec,
    episode_seed,
    run_experiment,
    strip_timing_columns,
    summarize_rows,
    verify_goldens,
    oracle_report,
)
from introplan.cli import main
from introplan.envs import fixture_text
from introplan.errors import SpecError


def small_spec(**overrides):
    base = dict(
        domain="grid",
        sizes=[2, 3, 4],
        planners=["greedy", "introspector", "random:5"],
        episodes=3,
        seed=11,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def test_spec_round_trip():
    spec = small_spec()
    assert ExperimentSpec.from_json(spec.to_json()) == spec


def test_spec_validation():
    with pytest.raises(SpecError):
        small_spec(sizes=[]).validate()
    with pytest.raises(SpecError):
        small_spec(planners=["bogus:3"]).validate()
    with pytest.raises(SpecError):
        small_spec(normalize="sometimes").validate()
    with pytest.raises(SpecError):
        small_spec(sizes=[0]).validate()
    small_spec(domain="bins:2", sizes=[0, 1]).validate()  # close-only episodes are fine


def test_episode_seed_stable_and_planner_independent():
    assert episode_seed(7, "grid", 5, 0) == episode_seed(7, "grid", 5, 0)
    assert episode_seed(7, "grid", 5, 0) != episode_seed(7, "grid", 5, 1)
    assert episode_seed(7, "grid", 5, 0) != episode_seed(8, "grid", 5, 0)


def test_run_experiment_writes_rows(tmp_path):
    spec = small_spec()
    rows, csv_path, summary_path = run_experiment(spec, out_path=tmp_path / "r.csv")
    assert len(rows) == len(spec.sizes) * len(spec.planners) * spec.episodes
    text = csv_path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    summary = summary_path.read_text()
    assert "cell domain=grid" in summary and "slope domain=grid" in summary


def test_run_experiment_reproducible_modulo_timing(tmp_path):
    spec = small_spec()
    _, p1, _ = run_experiment(spec, out_path=tmp_path / "a.csv")
    _, p2, _ = run_experiment(spec, out_path=tmp_path / "b.csv")
    assert strip_timing_columns(p1.read_text()) == strip_timing_columns(p2.read_text())


def test_run_experiment_parallel_matches_serial(tmp_path):
    spec = small_spec(episodes=2)
    _, p1, _ = run_experiment(spec, out_path=tmp_path / "serial.csv")
    spec2 = small_spec(episodes=2, workers=2)
    _, p2, _ = run_experiment(spec2, out_path=tmp_path / "par.csv")
    assert strip_timing_columns(p1.read_text()) == strip_timing_columns(p2.read_text())


def test_empty_sweep(tmp_path):
    spec = small_spec(episodes=0)
    rows, csv_path, summary_path = run_experiment(spec, out_path=tmp_path / "e.csv")
    assert rows == []
    assert csv_path.read_text().strip() == ",".join(CSV_COLUMNS)
    assert "cell" not in summary_path.read_text()


def test_summary_deterministic(tmp_path):
    spec = small_spec()
    rows, _, _ = run_experiment(spec, out_path=tmp_path / "s.csv")
    stripped = [row[:-2] + ["0.0", row[-1]] for row in rows]
    assert summarize_rows(stripped) == summarize_rows(stripped)


def test_budget_rows_marked(tmp_path):
    spec = ExperimentSpec(
        domain="grid",
        sizes=[12],
        planners=["greedy"],
        episodes=1,
        seed=0,
        node_cap=10,
    )
    rows, _, _ = run_experiment(spec, out_path=tmp_path / "b.csv")
    statuses = {row[CSV_COLUMNS.index("status")] for row in rows}
    assert statuses == {"BUDGET"}


def test_verify_goldens_passes():
    report = verify_goldens()
    assert report.passed, report.to_text()
    payload = json.loads(report.to_json())
    assert payload["passed"] is True
    names = {c["name"]: c for c in payload["checks"]}
    assert names["bins2x2 reachable states"]["expected"] == 36
    assert names["bins2x2 dead-end states"]["expected"] == 18
    assert names["bins2x2 oracle plan length"]["expected"] == 4


def test_verify_goldens_flags_corrupted_fixture(monkeypatch):
    import introplan.envs as envs_module

    real = envs_module.fixture_text

    def corrupted(name):
        if name == "bins_2x2.sexp":
            return "(instance (domain bins) (state (constants b1)"
        return real(name)

    monkeypatch.setattr(envs_module, "fixture_text", corrupted)
    report = verify_goldens()
    assert not report.passed
    failed = [c.name for c in report.checks if not c.passed]
    assert "bins2x2 fixture usable" in failed
    assert any(c.name.startswith("blocks fixture") and c.passed for c in report.checks)


def test_oracle_report_summarizes_fixture():
    text = oracle_report(fixture_text("bins_2x2.sexp"))
    assert "reachable states: 36" in text
    assert "dead-end states: 18" in text
    assert "optimal success plan: 4 action(s)" in text


def test_cli_verify_goldens(capsys):
    code = main(["verify-goldens"])
    out = capsys.readouterr().out
    assert code == 0
    assert "golden suite: PASS" in out


def test_cli_run_and_oracle(tmp_path, capsys):
    out_csv = tmp_path / "cli.csv"
    code = main(
        [
            "run", "--domain", "grid", "--sizes", "2..3",
            "--planners", "introspector", "--episodes", "2",
            "--seed", "5", "--out", str(out_csv),
        ]
    )
    assert code == 0
    assert out_csv.exists()
    fixture = tmp_path / "inst.sexp"
    fixture.write_text(fixture_text("bins_2x2.sexp"))
    code = main(["oracle", "--fixture", str(fixture)])
    assert code == 0
    assert "reachable states: 36" in capsys.readouterr().out


def test_cli_spec_file(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec = small_spec(episodes=1, out=str(tmp_path / "from_spec.csv"))
    spec_path.write_text(spec.to_json())
    assert main(["run", "--spec", str(spec_path)]) == 0
    assert (tmp_path / "from_spec.csv").exists()


def test_cli_bad_spec_exit_code(tmp_path):
    spec_path = tmp_path / "bad.json"
    spec_path.write_text("{\"domain\": \"grid\"}")
    assert main(["run", "--spec", str(spec_path)]) == 2
    assert main(["run", "--domain", "grid", "--sizes", "2", "--planners", "nope:1"]) == 2


def test_cli_corrupted_fixture_fails(tmp_path, capsys):
    fixture = tmp_path / "broken.sexp"
    fixture.write_text("(instance (domain bins) (state (constants b1) (facts (Open b1)))")
    code = main(["oracle", "--fixture", str(fixture)])
    assert code == 1


def test_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "introplan.cli", "verify-goldens"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "golden suite: PASS" in proc.stdout
