"""Global JSON configuration shared by all CLI subcommands.

Sections mirror the pipeline stages; each section is validated against
the owning module's preconditions when the command that uses it runs.
Individual keys can be overridden on the command line with
--set section.key=value (values parsed as JSON, falling back to string).
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

from capkit.errors import ConfigError

ENV_CONFIG = "CAPKIT_CONFIG"

DEFAULTS: dict = {
    "paths": {
        "ontology": None,  # None -> bundled AudioSet ontology excerpt
        "clips": None,
        "audiocaps_index": None,
        "audio_root": ".",
        "output_root": "out",
    },
    "subset": {
        "default_target": 550,
        "seed": 0,
        "music_roots": ["/m/04rlf"],
        "deprioritized": ["/m/09x0r", "/m/04rlf"],  # Speech, Music
    },
    "synth": {
        "dataset": "audioset",
        "task": "keywords",
    },
    "features": {
        "inputs": [],
        "sample_rate": 16000,
        "window_length": 400,
        "hop_length": 160,
        "n_mels": 80,
        "chunk_seconds": 30,
    },
    "augment": {
        "inputs": [],
        "p_each": 0.3,
        "noise_std_range": [0.001, 0.015],
        "shift_fraction_range": [-0.5, 0.5],
        "gain_db_range": [-12.0, 12.0],
        "seed": 0,
    },
    "mixture": {
        "ratio": [12, 3, 1],
        "sizes": [0, 0, 0],
        "seed": 0,
        "clotho_expansion": 5,
    },
    "decode": {
        "strategy": "beam",
        "max_len": 32,
        "num_beams": 5,
        "num_groups": 1,
        "diversity_penalty": 0.0,
        "temperature": 1.0,
        "top_k": 0,
        "contrastive_alpha": 0.0,
        "contrastive_k": 4,
        "length_penalty": 1.0,
        "seed": 0,
        "end_token": 0,
        "forced_prefix": [],
        "scorer": {"kind": "table", "path": None, "cmd": None, "host": None, "port": None},
        "jobs": None,
    },
    "eval": {
        "candidates": None,
        "references": None,
        "spice": None,
    },
}


@dataclass
class GlobalConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def section(self, name: str) -> dict:
        try:
            return self.data[name]
        except KeyError:
            raise ConfigError(f"missing config section {name!r}") from None

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        return node

    def set(self, dotted: str, value) -> None:
        parts = dotted.split(".")
        node = self.data
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node[parts[-1]] = value


def _merge(base: dict, override: dict, path: str = "") -> None:
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, here)
        else:
            base[key] = value


def load_config(path=None) -> GlobalConfig:
    """Load a JSON config file over the defaults; `path` falls back to
    $CAPKIT_CONFIG, then to pure defaults."""
    config = GlobalConfig()
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        _merge(config.data, doc)
    return config


def apply_overrides(config: GlobalConfig, assignments) -> None:
    """Apply --set section.key=value pairs; values parse as JSON with a
    plain-string fallback."""
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigError(f"--set needs key=value, got {assignment!r}")
        key, raw = assignment.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        config.set(key.strip(), value)
