"""Run manifests written next to every CLI output as ``<out>.manifest.json``."""
from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .io import atomic_write_text, sha256_file


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class Manifest:
    command: list
    config: dict
    seed: int | None
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started: str = field(default_factory=_now)
    finished: str | None = None

    @staticmethod
    def path_for(out) -> str:
        return f"{out}.manifest.json"

    @classmethod
    def start(cls, argv, args) -> "Manifest":
        config = {k: v for k, v in vars(args).items() if k != "func"}
        return cls(command=["bid", *argv], config=config, seed=getattr(args, "seed", None))

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started": self.started,
            "finished": self.finished,
        }

    def finish(self, out) -> None:
        self.finished = _now()
        atomic_write_text(self.path_for(out), json.dumps(self.to_dict(), indent=2, default=str) + "\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
