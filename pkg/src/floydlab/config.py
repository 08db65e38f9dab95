"""Run configuration: one JSON file, overridable from the command line."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from .floyd import ScalingFunction
from .words import GrowthSchedule, Word, parse_word


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: str = "a b"
    schedule: dict = field(default_factory=lambda: {"kind": "tower"})
    stages: int = 2
    radius: int = 5
    ball_budget: int = 2_000_000
    search_budget: int = 200_000
    piece_work: int = 200_000
    scaling: dict = field(default_factory=lambda: {"kind": "geometric", "lambda": "1/2"})
    kappas: list = field(default_factory=lambda: [1, 2])
    depths: list = field(default_factory=lambda: [1, 2, 3, 4])
    separation_stage: int = 1
    decay_stages: list = field(default_factory=lambda: [1, 2])
    rays: list = field(default_factory=lambda: [["a b", 3]])
    rsc_eps: int = 1
    rsc_mu: str = "1/2"
    alpha: str = "1/100"
    K: int = 10**6
    base_stage: int = 1
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("stages", "radius", "ball_budget", "search_budget", "piece_work", "K",
                     "base_stage", "separation_stage"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not self.kappas or any(k <= 0 for k in self.kappas):
            raise ConfigError("kappas must be positive")
        if any(d < 0 for d in self.depths):
            raise ConfigError("depths must be non-negative")
        if self.rsc_eps < 0:
            raise ConfigError("rsc_eps must be non-negative")
        try:
            self.growth()
            self.scaling_function()
            self.seed_word()
            Fraction(self.alpha), Fraction(self.rsc_mu)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def growth(self) -> GrowthSchedule:
        return GrowthSchedule.from_dict(self.schedule)

    def seed_word(self) -> Word:
        return parse_word(self.seed)

    def scaling_function(self) -> ScalingFunction:
        s = self.scaling
        kind = s.get("kind", "geometric")
        if kind == "geometric":
            return ScalingFunction.geometric(Fraction(s.get("lambda", "1/2")))
        if kind == "polynomial":
            return ScalingFunction.polynomial(Fraction(str(s["s"])))
        if kind == "table":
            return ScalingFunction.table([Fraction(str(v)) for v in s["values"]])
        raise ValueError(f"unknown scaling function {kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring the output directory."""
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
