import pytest

from ctrlprompt.config import PRESETS, SCHEMA, ExperimentConfig, csv
from ctrlprompt.errors import ConfigError


def test_defaults_follow_schema():
    cfg = ExperimentConfig()
    assert cfg["run"]["seed"] == 123
    assert cfg["training"]["prompt_length"] == 20
    assert cfg["generation"]["top_p"] == 0.8
    assert set(cfg.values) == set(SCHEMA)


def test_unknown_sections_and_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig({"optimizer": {"lr": 1}})
    with pytest.raises(ConfigError):
        ExperimentConfig({"training": {"learning_rate": 1}})
    path = tmp_path / "bad.ini"
    path.write_text("[generation]\ntop_q = 0.3\n")
    with pytest.raises(ConfigError, match="top_q"):
        ExperimentConfig().read_file(path)


def test_type_coercion():
    cfg = ExperimentConfig()
    cfg.override("training.epochs", "7")
    cfg.override("generation.do_sample", "no")
    cfg.override("steering.alpha", "0.5")
    assert cfg.get("training.epochs") == 7 and cfg.get("generation.do_sample") is False
    assert cfg.get("steering.alpha") == "0.5"
    for bad in (("training.epochs", "seven"), ("generation.top_p", "high"), ("eval.extrinsic", "maybe")):
        with pytest.raises(ConfigError):
            cfg.override(*bad)
    with pytest.raises(ConfigError):
        cfg.override("epochs", 3)


def test_presets_carry_table_values():
    cfg = ExperimentConfig()
    cfg.apply_preset("table9-pos")
    s = cfg["steering"]
    assert (float(s["filter_p"]), float(s["p"]), float(s["temperature"]), float(s["alpha"])) == (1.0, 0.9, 1.1, 1.2)
    cfg.apply_preset("table9-neg")
    assert (float(cfg["steering"]["filter_p"]), float(cfg["steering"]["temperature"])) == (0.9, 1.8)
    cfg.apply_preset("table7")
    assert (cfg["training"]["lr"], cfg["training"]["warmup_steps"], cfg["training"]["batch_size"]) == (0.15, 500, 10)
    cfg.apply_preset("table6")
    assert cfg["classifier"]["lr"] == 1e-5
    assert PRESETS["paper-table6"] == PRESETS["table6"]
    with pytest.raises(ConfigError):
        cfg.apply_preset("table10")


def test_file_then_override_precedence(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[training]\nepochs = 3\nlr = 0.2\n")
    cfg = ExperimentConfig()
    cfg.read_file(path)
    cfg.override("training.lr", "0.3")
    assert cfg["training"]["epochs"] == 3 and cfg["training"]["lr"] == 0.3


def test_snapshot_round_trip(tmp_path):
    cfg = ExperimentConfig()
    cfg.apply_preset("table9-neg")
    cfg.override("corpus.ratios", "6,1,1")
    cfg.snapshot(tmp_path / "snap.ini")
    back = ExperimentConfig.from_ini((tmp_path / "snap.ini").read_text())
    assert back.values == cfg.values


def test_csv_helper():
    assert csv("1, 2,3", int) == [1, 2, 3]
    assert csv("") == []
