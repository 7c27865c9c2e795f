"""Run configuration: canonical JSON, hash and the header stamped on outputs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

from . import __version__


@dataclass(frozen=True)
class RunConfig:
    command: str
    scene: str = ""
    h: float = 1 / 2048
    margin: float = 0.3
    eps_min: float | None = None
    eps_max: float | None = None
    per_octave: int = 4
    depth: int | None = None
    seed: int = 0
    extra: tuple = ()  # sorted (key, value) pairs of subcommand options

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def header(self) -> list[str]:
        return [f"fractal_steiner {__version__}", f"config {self.hash}", f"seed {self.seed}"]


def stamp(payload: dict, cfg: RunConfig) -> dict:
    """JSON report with the version, hash and seed up front."""
    return {"version": __version__, "config_hash": cfg.hash, "seed": cfg.seed,
            "config": json.loads(cfg.canonical()), **payload}
