from app.schemas import RunConfig
from app.services.config_hash import build_config_hash


def _config(**overrides) -> RunConfig:
    payload = {
        "experiment": "simulate",
        "problem": {"p": 3.0, "dim": 1, "f": {"kind": "odd_power", "q": 3.0}},
        "grid": {"R": 8.0, "m_per_axis": 33},
        "stepping": {"dt": 0.01},
    }
    payload.update(overrides)
    return RunConfig.model_validate(payload)


def test_config_hash_is_stable_across_key_order() -> None:
    config_a = _config()
    config_b = RunConfig.model_validate(
        {
            "stepping": {"dt": 0.01},
            "grid": {"m_per_axis": 33, "R": 8.0},
            "problem": {"f": {"q": 3.0, "kind": "odd_power"}, "dim": 1, "p": 3.0},
            "experiment": "SIMULATE",
        }
    )
    assert build_config_hash(config_a) == build_config_hash(config_b)


def test_config_hash_ignores_output_dir() -> None:
    config_a = _config(io={"output_dir": "out/a"})
    config_b = _config(io={"output_dir": "out/b"})
    assert build_config_hash(config_a) == build_config_hash(config_b)


def test_config_hash_changes_when_config_changes() -> None:
    config_a = _config()
    config_b = config_a.model_copy(update={"seed": 7})
    assert build_config_hash(config_a) != build_config_hash(config_b)
    assert len(build_config_hash(config_a)) == 64
