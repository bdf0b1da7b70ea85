from __future__ import annotations

from pathlib import Path

import pytest
from sqlalchemy import select

from app.config import Settings
from app.db import close_db, create_engine, create_session_factory, init_db
from app.errors import IntegratorFailure
from app.model.problem import problem_spec_from_toml
from app.models import ExperimentRun, TrajectoryRun
from app.schemas import ExperimentStatus, RunConfig
from app.services.config_hash import build_config_hash
from app.workers import experiment_worker
from app.workers.experiment_worker import ExperimentWorker


def _simulate_config() -> RunConfig:
    return RunConfig.model_validate(
        {
            "experiment": "simulate",
            "problem": {"p": 3.0, "f": {"kind": "odd_power", "q": 3.0}},
            "grid": {"R": 4.0, "m_per_axis": 17},
            "stepping": {"dt": 0.1},
            "io": {"snapshot_every": 2},
            "initial": {"l2_min": 2.0},
            "run": {"T_final": 0.5},
        }
    )


async def _session_factory(tmp_path: Path):
    engine = create_engine(f"sqlite+aiosqlite:///{tmp_path / 'runs.db'}")
    await init_db(engine)
    return engine, create_session_factory(engine)


@pytest.mark.asyncio
async def test_completed_run_is_recorded(tmp_path: Path) -> None:
    engine, factory = await _session_factory(tmp_path)
    worker = ExperimentWorker(
        settings=Settings(snapshot_formats=["plap", "csv"]), session_factory=factory
    )
    try:
        report = await worker.run(_simulate_config(), tmp_path / "out")

        async with factory() as session:
            experiment = (await session.execute(select(ExperimentRun))).scalar_one()
            trajectories = (await session.execute(select(TrajectoryRun))).scalars().all()
    finally:
        await close_db(engine)

    assert report.passed and report.final_l2 is not None
    assert experiment.status == ExperimentStatus.completed.value
    assert experiment.passed is True
    assert experiment.config_hash == report.spec_hash
    assert experiment.report_json["final_l2"] == report.final_l2
    assert [(item.trajectory_index, item.steps) for item in trajectories] == [(0, 5)]
    out = tmp_path / "out"
    assert (out / "report.json").exists()
    assert problem_spec_from_toml((out / "problem.toml").read_text(encoding="utf-8")) == (
        _simulate_config().problem
    )
    assert (out / "ledger.csv").read_text(encoding="utf-8").count("\n") == 6
    assert (out / "final.plap").exists() and (out / "final.csv").exists()
    assert sorted(path.name for path in (out / "snapshots").glob("*.plap")) == [
        "step_000002.plap",
        "step_000004.plap",
    ]


@pytest.mark.asyncio
async def test_integrator_failure_marks_run_and_writes_dump(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    def _fail(state, *args, **kwargs):
        raise IntegratorFailure(
            "step rejected", state=state, diagnostics={"t": state.t, "halvings": 10}
        )

    monkeypatch.setattr(experiment_worker, "run_to_time", _fail)
    engine, factory = await _session_factory(tmp_path)
    worker = ExperimentWorker(settings=Settings(), session_factory=factory)
    try:
        with pytest.raises(IntegratorFailure) as excinfo:
            await worker.run(_simulate_config(), tmp_path / "out")

        async with factory() as session:
            experiment = (await session.execute(select(ExperimentRun))).scalar_one()
    finally:
        await close_db(engine)

    dump = Path(excinfo.value.diagnostics["dump_dir"])
    assert (dump / "last_accepted.plap").exists()
    assert (dump / "failure.json").exists()
    assert experiment.status == ExperimentStatus.failed.value
    assert experiment.error_message == "IntegratorFailure: step rejected"
    assert experiment.completed_at is not None


@pytest.mark.asyncio
async def test_worker_runs_without_history(tmp_path: Path) -> None:
    worker = ExperimentWorker(settings=Settings(snapshot_formats=["csv"]))

    report = await worker.run(_simulate_config(), tmp_path)

    assert report.passed
    assert (tmp_path / "final.csv").exists()
    assert not (tmp_path / "final.plap").exists()


@pytest.mark.asyncio
@pytest.mark.parametrize(
    ("experiment", "initial", "run"),
    [
        ("contract", {"count": 2}, {"T_final": 0.5, "checkpoints": 2}),
        (
            "absorb",
            {"count": 2, "l2_min": 0.5, "l2_max": 2.0, "relative_to_rho": True},
            {"T_final": 0.5, "embedding_trials": 5, "optimizer_steps": 1},
        ),
        ("compact", {"count": 3, "l2_max": 3.0}, {"T_final": 1.0, "checkpoints": 4}),
        (
            "attractor",
            {"count": 2},
            {
                "T_burn": 0.5,
                "n_snapshots": 2,
                "snapshot_interval": 0.2,
                "embedding_trials": 5,
                "optimizer_steps": 1,
            },
        ),
    ],
)
async def test_every_experiment_writes_a_report(
    tmp_path: Path, experiment: str, initial: dict, run: dict
) -> None:
    config = RunConfig.model_validate(
        {
            "experiment": experiment,
            "problem": {"p": 3.0, "f": {"kind": "odd_power", "q": 3.0}},
            "grid": {"R": 4.0, "m_per_axis": 17},
            "stepping": {"dt": 0.1},
            "initial": initial,
            "run": run,
        }
    )
    worker = ExperimentWorker(settings=Settings(snapshot_formats=["plap"]))

    report = await worker.run(config, tmp_path)

    assert report.experiment.value == experiment
    assert report.spec_hash == build_config_hash(config)
    assert (tmp_path / "report.json").exists()
    if experiment == "contract":
        assert report.passed and len(report.contraction) == 2
    elif experiment == "absorb":
        assert report.rho_sq is not None and len(report.entries) == 2
    elif experiment == "compact":
        assert [row[0] for row in report.diameters] == [0.0, 0.25, 0.5, 0.75, 1.0]
    else:
        assert report.attractor is not None
        assert len(list((tmp_path / "attractor").glob("*.plap"))) == 4
