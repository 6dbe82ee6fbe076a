"""Sectioned key-value experiment configuration with presets and flag overrides."""

from __future__ import annotations

import configparser
import io
from pathlib import Path
from typing import Any

from .errors import ConfigError

# section -> key -> default; the default's type is the key's type
SCHEMA: dict[str, dict[str, Any]] = {
    "run": {"seed": 123, "out_dir": "runs/default"},
    "corpus": {
        "input": "",
        "synth_size_per_class": 700,
        "synth_exclusive_mass": 0.3,
        "synth_neutral": 50,
        "synth_unrated": 50,
        "synth_duplicates": 40,
        "per_label": 0,
        "n_datasets": 3,
        "ratios": "5,1,1",
        "vocab_size": 2000,
        "classifier_dataset": 1,
        "generator_dataset": 2,
        "input_dataset": 3,
    },
    "model": {
        "architecture": "encoder_decoder",
        "embed_dim": 64,
        "n_layers": 2,
        "n_heads": 4,
        "ff_dim": 256,
        "max_len": 64,
        "source_len": 4,
        "pretrained_backbone": "",
        "pretrain_epochs": 8,
        "pretrain_lr": 0.01,
        "pretrain_batch_size": 16,
        "pretrain_warmup_steps": 50,
    },
    "training": {
        "prompt_sites": "encoder,decoder",
        "prompt_length": 20,
        "epochs": 20,
        "batch_size": 10,
        "lr": 0.15,
        "warmup_steps": 500,
        "weight_decay": 0.1,
        "eps": "1e-30,1e-3",
        "clip_threshold": 1.0,
        "decay_rate": -0.8,
        "beta1": "none",
        "relative_step": False,
        "scale_parameter": False,
        "warmup_init": False,
        "max_train": 0,
    },
    "generation": {
        "mode": "plain",
        "labels": "positive,negative",
        "splits": "train,validation,test",
        "num_beams": 10,
        "do_sample": True,
        "no_repeat_ngram_size": 1,
        "temperature": 1.0,
        "top_k": 0,
        "top_p": 0.8,
        "repetition_penalty": 1.0,
        "use_cache": False,
        "early_stopping": True,
        "max_new_tokens": 20,
        "prefix_len": 4,
        "max_inputs": 0,
    },
    "steering": {
        "sample": True,
        "filter_p": "",
        "k": 0,
        "p": "",
        "temperature": "",
        "alpha": "",
    },
    "classifier": {
        "lr": 0.05,
        "batch_size": 32,
        "epochs": 5,
        "momentum": 0.9,
        "embed_dim": 64,
        "n_layers": 1,
        "n_heads": 4,
        "ff_dim": 128,
        "max_len": 64,
    },
    "eval": {
        "split": "test",
        "distinct_ns": "1,2,3",
        "overlap_ns": "2,3,4,5",
        "overlap_denominator": "generated",
        "extrinsic": True,
        "lime_count": 3,
        "lime_samples": 5000,
        "lime_kernel_width": 0.25,
    },
}

PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "table6": {"classifier": {"lr": 1e-5, "batch_size": 32, "epochs": 5}, "run": {"seed": 123}},
    "table7": {
        "training": {
            "eps": "1e-30,1e-3",
            "clip_threshold": 1.0,
            "decay_rate": -0.8,
            "beta1": "none",
            "weight_decay": 0.1,
            "relative_step": False,
            "scale_parameter": False,
            "warmup_init": False,
            "epochs": 20,
            "warmup_steps": 500,
            "batch_size": 10,
            "lr": 0.15,
        },
        "run": {"seed": 123},
    },
    "table8": {
        "generation": {
            "num_beams": 10,
            "do_sample": True,
            "no_repeat_ngram_size": 1,
            "temperature": 1.0,
            "top_k": 0,
            "top_p": 0.8,
            "repetition_penalty": 1.0,
            "use_cache": False,
            "early_stopping": True,
        }
    },
    "table9-pos": {
        "steering": {"sample": True, "filter_p": 1.0, "k": 0, "p": 0.9, "temperature": 1.1, "alpha": 1.2},
        "generation": {"mode": "steer", "labels": "positive"},
    },
    "table9-neg": {
        "steering": {"sample": True, "filter_p": 0.9, "k": 0, "p": 0.9, "temperature": 1.8, "alpha": 1.2},
        "generation": {"mode": "steer", "labels": "negative"},
    },
}
PRESETS["paper-table6"] = PRESETS["table6"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(section: str, key: str, value: Any) -> Any:
    default = SCHEMA[section][key]
    if not isinstance(value, str):
        raw = value
    else:
        raw = value.strip()
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw) if not isinstance(raw, str) else int(raw, 10)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {value!r} is not a valid {type(default).__name__}") from exc


class ExperimentConfig:
    """Resolved configuration: schema defaults, then presets, then file, then overrides."""

    def __init__(self, values: dict[str, dict[str, Any]] | None = None):
        self.values = {s: dict(keys) for s, keys in SCHEMA.items()}
        for section, keys in (values or {}).items():
            self.update(section, keys)

    def update(self, section: str, keys: dict[str, Any]) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in keys.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            self.values[section][key] = _coerce(section, key, value)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    def get(self, dotted: str) -> Any:
        section, key = dotted.split(".", 1)
        return self.values[section][key]

    def apply_preset(self, name: str) -> None:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
        for section, keys in PRESETS[name].items():
            self.update(section, keys)

    def read_file(self, path: str | Path) -> None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            self.update(section, dict(parser[section]))

    def override(self, dotted: str, value: Any) -> None:
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        section, key = dotted.split(".", 1)
        self.update(section, {key: value})

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section in SCHEMA:
            parser[section] = {k: _render(v) for k, v in self.values[section].items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def snapshot(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ini(), encoding="utf-8")

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(text)
        return cls({s: dict(parser[s]) for s in parser.sections()})


def _render(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def csv(value: str, cast=str) -> list:
    return [cast(x.strip()) for x in str(value).split(",") if x.strip()]


def optional_float(value: Any) -> float | None:
    return None if value in ("", None) else float(value)
