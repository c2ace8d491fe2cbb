from pathlib import Path

import pytest

from leonrs.config import ScenarioConfig, load_config, loads_config, full_scale, with_override
from leonrs.errors import ConfigurationError


def test_empty_file_gives_defaults():
    cfg = loads_config("")
    assert cfg == ScenarioConfig()
    assert cfg.optimizer.minimum_required_sainr_db == 10.0
    assert cfg.optimizer.maximum_transmit_power_dbm == 30.0
    assert cfg.power_budget() == pytest.approx(1.0)
    assert cfg.sainr_threshold() == pytest.approx(10.0)


def test_inconsistent_array_lists_problem():
    with pytest.raises(ConfigurationError) as exc:
        loads_config("upa: {nx: 3, ny: 2, antennas: 5}")
    assert any("nx*ny" in p for p in exc.value.problems)


def test_all_problems_reported_together():
    text = "scenario: {ues: 0, bogus: 1}\noptimizer: {amplification_coefficient: 0.5}\n"
    with pytest.raises(ConfigurationError) as exc:
        loads_config(text)
    assert any("bogus" in p for p in exc.value.problems)
    # unknown keys stop before value validation; fix them and the rest surfaces
    with pytest.raises(ConfigurationError) as exc:
        loads_config("scenario: {ues: 0}\noptimizer: {amplification_coefficient: 0.5}\n")
    assert len(exc.value.problems) == 2


def test_type_errors_and_yaml_errors():
    with pytest.raises(ConfigurationError, match="expected int"):
        loads_config("scenario: {ues: two}")
    with pytest.raises(ConfigurationError, match="YAML parse error"):
        loads_config("scenario: [unclosed")


def test_too_few_satellites_rejected():
    with pytest.raises(ConfigurationError, match="satellites_in_group"):
        loads_config("scenario: {satellites_in_group: 3}")


def test_dump_roundtrip():
    cfg = with_override(ScenarioConfig(), "optimizer.pvt_error_weights.velocity", 3.5)
    again = loads_config(cfg.dump())
    assert again == cfg
    assert again.scenario_hash(4) == cfg.scenario_hash(4)
    assert again.scenario_hash(4) != cfg.scenario_hash(5)


def test_override_paths():
    cfg = with_override(ScenarioConfig(), "scenario.ues", 3)
    assert cfg.scenario.ues == 3
    for bad in ("scenario.nope", "nope.ues", "optimizer.pvt_error_weights", "scenario.ues.x"):
        with pytest.raises(ConfigurationError):
            with_override(ScenarioConfig(), bad, 1)
    with pytest.raises(ConfigurationError):
        with_override(ScenarioConfig(), "scenario.ues", -1)


def test_full_scale_counts():
    cfg = full_scale()
    assert (cfg.upa.nx, cfg.upa.ny) == (4, 4)
    assert cfg.scenario.satellites_in_group == 5 and cfg.scenario.ues == 10


def test_shipped_desk_config_is_the_default():
    assert load_config(Path(__file__).parents[1] / "configs" / "desk.yaml") == ScenarioConfig()
