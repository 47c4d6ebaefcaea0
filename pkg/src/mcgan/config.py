"""Layered run configuration.

Resolution order: built-in defaults <- config file <- CLI flags. Keys are
flat and namespaced (data.*, gen.*, disc.*, mc.*, train.*, eval.*). Two file
formats are equivalent: a flat-key text file with `key = value` lines
(# comments allowed, values parsed as JSON fragments) and a JSON file, flat
or nested one level. The fully resolved config is serialized into every run
directory so a run can be reproduced from its artifacts alone.
"""

import json
import os
from pathlib import Path

from .errors import ConfigurationError
from .models.discriminator import DiscriminatorConfig
from .models.generator import GeneratorConfig
from .train import PRESETS, TrainConfig
from .data.scene import SceneSpec

SEED_ENV_VAR = "MCGAN_SEED"

DEFAULTS = {
    "data.dir": None,
    "data.count": 16,
    "data.height": 64,
    "data.tracks": 2,
    "data.occlusion": 0.0,
    "data.light": 0.3,
    "data.noise": 0.02,
    "data.augment": False,
    "data.split_ratio": 0.8,
    "gen.channels": 32,
    "gen.coarse_blocks": 4,
    "gen.enhance_blocks": 2,
    "gen.classes": 4,
    "disc.channels": 32,
    "disc.stem_depth": 2,
    "disc.branch_layers": 3,
    "mc.enabled": True,
    "mc.n": 5,
    "mc.dropout": 0.2,
    "train.preset": "paper",
    "train.lr": None,  # None -> preset value
    "train.epochs_constant": 100,
    "train.epochs_decay": 100,
    "train.epochs": 0,
    "train.beta1": 0.5,
    "train.beta2": 0.999,
    "train.batch_size": 4,
    "train.lambda_fm": 10.0,
    "train.seed": None,  # None -> MCGAN_SEED env var or 0
    "train.max_steps": 0,
    "train.checkpoint_every": 0,
    "train.coarse_pretrain_steps": 0,
    "train.threads": 1,
    "eval.point_threshold": 3.0,
    "eval.match_fraction": 0.75,
    "eval.row_stride": 1,
    "eval.mask_threshold": 0.5,
}


def parse_flat_text(text: str) -> dict:
    """`key = value` lines; values are JSON fragments, bare words are strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _flatten(doc: dict) -> dict:
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                flat[f"{key}.{sub}"] = v
        else:
            flat[key] = value
    return flat


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {path} does not exist")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    return parse_flat_text(text)


class RunConfig:
    """Fully resolved flat-key view over all module settings."""

    def __init__(self, values: dict):
        self.values = values

    @classmethod
    def resolve(cls, file_path=None, overrides: dict | None = None) -> "RunConfig":
        values = dict(DEFAULTS)
        layers = []
        if file_path:
            layers.append(load_config_file(file_path))
        if overrides:
            layers.append({k: v for k, v in overrides.items() if v is not None})
        for layer in layers:
            for key, value in layer.items():
                if key not in DEFAULTS:
                    raise ConfigurationError(f"unknown config key {key!r}")
                values[key] = value
        preset = values["train.preset"]
        if preset not in PRESETS:
            raise ConfigurationError(
                f"unknown preset {preset!r}; choose from {sorted(PRESETS)}"
            )
        if values["train.lr"] is None:
            values["train.lr"] = PRESETS[preset]
        if values["train.seed"] is None:
            env = os.environ.get(SEED_ENV_VAR)
            values["train.seed"] = int(env) if env else 0
        return cls(values)

    def __getitem__(self, key: str):
        return self.values[key]

    # -- typed views ------------------------------------------------------

    def scene_spec(self) -> SceneSpec:
        return SceneSpec(
            num_tracks=int(self["data.tracks"]),
            occlusion=float(self["data.occlusion"]),
            light_gradient=float(self["data.light"]),
            noise=float(self["data.noise"]),
        )

    def generator_config(self) -> GeneratorConfig:
        height = int(self["data.height"])
        return GeneratorConfig(
            width=2 * height,
            height=height,
            label_classes=int(self["gen.classes"]),
            channels=int(self["gen.channels"]),
            coarse_blocks=int(self["gen.coarse_blocks"]),
            enhance_blocks=int(self["gen.enhance_blocks"]),
        )

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(
            label_classes=int(self["gen.classes"]),
            channels=int(self["disc.channels"]),
            stem_depth=int(self["disc.stem_depth"]),
            branch_layers=int(self["disc.branch_layers"]),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=float(self["train.lr"]),
            epochs_constant=int(self["train.epochs_constant"]),
            epochs_decay=int(self["train.epochs_decay"]),
            epochs=int(self["train.epochs"]),
            beta1=float(self["train.beta1"]),
            beta2=float(self["train.beta2"]),
            batch_size=int(self["train.batch_size"]),
            lambda_fm=float(self["train.lambda_fm"]),
            mc_enabled=bool(self["mc.enabled"]),
            mc_n=int(self["mc.n"]),
            mc_dropout=float(self["mc.dropout"]),
            seed=int(self["train.seed"]),
            max_steps=int(self["train.max_steps"]),
            checkpoint_every=int(self["train.checkpoint_every"]),
            coarse_pretrain_steps=int(self["train.coarse_pretrain_steps"]),
            threads=int(self["train.threads"]),
        )

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{key} = {json.dumps(self.values[key])}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.values, indent=1, sort_keys=True) + "\n"

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "run_config.cfg").write_text(self.to_text())
        (out_dir / "run_config.json").write_text(self.to_json())
