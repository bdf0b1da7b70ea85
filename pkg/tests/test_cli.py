from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from app import cli
from app.config import Settings
from app.errors import IntegratorFailure
from app.services import orchestrator
from app.workers import experiment_worker

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

SIMULATE_TOML = """
seed = 3

[problem]
p = 3.0
dim = 1

[problem.f]
kind = "odd_power"
q = 3.0

[grid]
R = 4.0
m_per_axis = 17

[stepping]
dt = 0.1

[initial]
l2_min = 2.0

[run]
T_final = 0.5
"""


@pytest.fixture(autouse=True)
def _no_history(monkeypatch: pytest.MonkeyPatch) -> None:
    settings = Settings(record_history=False, snapshot_formats=["csv"])
    monkeypatch.setattr(cli, "get_settings", lambda: settings)


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


def _simulate_argv(tmp_path: Path, out: Path) -> list[str]:
    return ["simulate", "--config", str(_write(tmp_path, SIMULATE_TOML)), "--out", str(out)]


def test_simulate_prints_final_norm_last(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    out = tmp_path / "out"

    code = cli.main(_simulate_argv(tmp_path, out))

    assert code == cli.EXIT_PASSED
    last_line = capsys.readouterr().out.strip().splitlines()[-1]
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert float(last_line) == report["final_l2"]
    assert report["experiment"] == "simulate"


def test_seed_override_changes_hash(tmp_path: Path) -> None:
    path = _write(tmp_path, SIMULATE_TOML)

    first = cli.load_config(path, "simulate")
    second = cli.load_config(path, "simulate", seed=11)

    assert (first.seed, second.seed) == (3, 11)


def test_validate_reports_failed_condition(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    code = cli.main(
        [
            "validate",
            "--config",
            str(CONFIG_DIR / "decaying_beta.toml"),
            "--out",
            str(tmp_path),
        ]
    )

    assert code == cli.EXIT_FAILED
    assert "failed condition: absorption_floor" in capsys.readouterr().err


@pytest.mark.parametrize(
    ("text", "extra"),
    [
        (SIMULATE_TOML + "\n[extra]\nunknown = 1\n", []),
        (SIMULATE_TOML.replace("R = 4.0", "R = 2.0"), []),
        (SIMULATE_TOML, ["--strict-paper"]),
        (SIMULATE_TOML.replace("dt = 0.1", "dt = 1.5"), []),
        ("this is not toml = = =", []),
    ],
)
def test_invalid_configuration_exits_with_config_code(
    tmp_path: Path, text: str, extra: list[str]
) -> None:
    path = _write(tmp_path, text)

    assert cli.main(["simulate", "--config", str(path), *extra]) == cli.EXIT_CONFIG


def test_missing_config_file_exits_with_config_code(tmp_path: Path) -> None:
    assert cli.main(["simulate", "--config", str(tmp_path / "absent.toml")]) == cli.EXIT_CONFIG


def test_solver_failure_exits_with_dump(
    tmp_path: Path,
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
) -> None:
    def _fail(state, *args, **kwargs):
        raise IntegratorFailure("step rejected", state=state, diagnostics={"halvings": 10})

    monkeypatch.setattr(experiment_worker, "run_to_time", _fail)
    out = tmp_path / "out"

    code = cli.main(_simulate_argv(tmp_path, out))

    assert code == cli.EXIT_SOLVER
    assert f"diagnostic dump: {out / 'failure'}" in capsys.readouterr().err
    assert (out / "failure" / "last_accepted.plap").exists()


def test_output_dir_defaults_under_settings(tmp_path: Path) -> None:
    config = cli.load_config(_write(tmp_path, SIMULATE_TOML), "simulate")

    assert cli.resolve_output_dir(config, Settings(default_output_dir="runs")) == Path(
        "runs/simulate"
    )


def test_refused_explicit_step_exits_with_dump(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    text = SIMULATE_TOML.replace("p = 3.0", "p = 2.0").replace(
        "dt = 0.1", 'dt = 0.5\nscheme = "explicit"'
    )
    out = tmp_path / "out"

    code = cli.main(["simulate", "--config", str(_write(tmp_path, text)), "--out", str(out)])

    assert code == cli.EXIT_SOLVER
    assert "exceeds stability limit" in capsys.readouterr().err
    failure = json.loads((out / "failure" / "failure.json").read_text(encoding="utf-8"))
    assert failure["diagnostics"]["halvings"] == 0
    assert failure["diagnostics"]["explicit_dt_limit"] < 0.5
    assert (out / "failure" / "last_accepted.plap").exists()


def test_trajectory_timeout_exits_with_dump(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    def _slow(*args, **kwargs):
        time.sleep(0.5)

    settings = Settings(
        record_history=False, snapshot_formats=["csv"], trajectory_timeout_seconds=0.05
    )
    monkeypatch.setattr(cli, "get_settings", lambda: settings)
    monkeypatch.setattr(orchestrator, "run_with_checkpoints", _slow)
    text = SIMULATE_TOML.replace("l2_min = 2.0", "count = 3\nl2_min = 2.0")
    out = tmp_path / "out"

    code = cli.main(["compact", "--config", str(_write(tmp_path, text)), "--out", str(out)])

    assert code == cli.EXIT_SOLVER
    assert "Timed out after 0.05s" in capsys.readouterr().err
    failure = json.loads((out / "failure" / "failure.json").read_text(encoding="utf-8"))
    assert failure["diagnostics"]["trajectory_index"] == 0


def test_repeated_runs_write_identical_artifacts(tmp_path: Path) -> None:
    first, second = tmp_path / "first", tmp_path / "second"

    assert cli.main(_simulate_argv(tmp_path, first)) == cli.EXIT_PASSED
    assert cli.main(_simulate_argv(tmp_path, second)) == cli.EXIT_PASSED

    for name in ("ledger.csv", "report.json", "final.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_restart_from_snapshot_matches_uninterrupted_run(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    settings = Settings(record_history=False, snapshot_formats=["plap"])
    monkeypatch.setattr(cli, "get_settings", lambda: settings)
    full = tmp_path / "full"
    text = SIMULATE_TOML + "\n[io]\nsnapshot_every = 2\n"
    argv = ["simulate", "--config", str(_write(tmp_path, text)), "--out", str(full)]
    assert cli.main(argv) == cli.EXIT_PASSED

    snapshot = full / "snapshots" / "step_000002.plap"
    restart_text = SIMULATE_TOML.replace(
        "l2_min = 2.0", f'kind = "snapshot"\nsnapshot_path = "{snapshot.as_posix()}"'
    )
    restarted = tmp_path / "restarted"
    restart_path = tmp_path / "restart.toml"
    restart_path.write_text(restart_text, encoding="utf-8")

    code = cli.main(["simulate", "--config", str(restart_path), "--out", str(restarted)])

    assert code == cli.EXIT_PASSED
    assert (restarted / "final.plap").read_bytes() == (full / "final.plap").read_bytes()
    assert len((restarted / "ledger.csv").read_text(encoding="utf-8").splitlines()) == 4


def test_absorb_config_passes(tmp_path: Path) -> None:
    out = tmp_path / "absorb"

    code = cli.main(["absorb", "--config", str(CONFIG_DIR / "absorb.toml"), "--out", str(out)])

    assert code == cli.EXIT_PASSED
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert len(report["entries"]) == 20
    assert report["c1_emp"] >= report["c1_h"]
