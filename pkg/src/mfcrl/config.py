"""Run configuration: a JSON document resolved against a benchmark preset.

Example::

    {
      "benchmark": "systemic",
      "params": {"sigma": 1.0},
      "desk": true,
      "seed": 0,
      "output_dir": "runs/systemic-s0",
      "trainer": {"epochs": 2000, "critic_lr": 0.01},
      "initial": {"mean_scale": [0.0], "var_scale": [1.0]},
      "eval": {"particles": 10000, "seed": 12345}
    }

Everything except ``benchmark`` is optional. Trainer fields start from the
benchmark's desk (or full-scale) preset and are then overridden.
"""

import json
import warnings
from dataclasses import dataclass, field, fields

from .actor_critic import TrainerConfig
from .benchmarks import get_benchmark


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


_TOP_KEYS = {"benchmark", "params", "desk", "seed", "output_dir", "trainer", "initial", "eval"}
_TRAINER_KEYS = {f.name for f in fields(TrainerConfig)}


@dataclass
class RunConfig:
    benchmark: str
    params: dict = field(default_factory=dict)
    desk: bool = True
    seed: int = 0
    output_dir: str = "runs/default"
    trainer: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, blob):
        if not isinstance(blob, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(blob) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "benchmark" not in blob:
            raise ConfigError("config needs a 'benchmark' id")
        cfg = cls(**blob)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                blob = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(blob)

    def validate(self):
        try:
            bench = get_benchmark(self.benchmark)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        unknown = set(self.trainer) - _TRAINER_KEYS
        if unknown:
            raise ConfigError(f"unknown trainer keys: {sorted(unknown)}")
        if "seed" in self.trainer:
            raise ConfigError("set the seed at top level, not under 'trainer'")
        bad = set(self.initial) - {"mean_scale", "var_scale"}
        if bad:
            raise ConfigError(f"unknown initial-distribution keys: {sorted(bad)}")
        for key in ("mean_scale", "var_scale"):
            if key in self.initial and len(self.initial[key]) != bench.dim:
                raise ConfigError(f"initial.{key} needs {bench.dim} entries")
        if any(v < 0 for v in self.initial.get("var_scale", [])):
            raise ConfigError("initial.var_scale must be non-negative")
        try:
            bench.params(**self.params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.trainer_config()

    def bench(self):
        return get_benchmark(self.benchmark)

    def trainer_config(self):
        preset = self.bench().preset(self.desk)
        base = {
            "batch": preset.batch,
            "particles": preset.particles,
            "steps": preset.steps,
            "order": preset.order,
            "epochs": preset.epochs,
            "actor_lr": preset.actor_lr,
            "critic_lr": preset.critic_lr,
        }
        base.update(self.trainer)
        base["seed"] = self.seed
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                tc = TrainerConfig(**base)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad trainer settings: {exc}") from None
        if tc.epochs < 0 or tc.batch < 1 or tc.particles < 2 or tc.steps < 1 or tc.order < 1:
            raise ConfigError("epochs >= 0, batch >= 1, particles >= 2, steps >= 1, order >= 1 required")
        return tc

    def model(self):
        return self.bench().model(**self.params)

    def sampler(self):
        tc = self.trainer_config()
        return self.bench().sampler(
            tc.batch, tc.particles, self.initial.get("mean_scale"), self.initial.get("var_scale")
        )

    def resolved(self):
        """Fully expanded, JSON-ready view echoed into the run manifest."""
        bench = self.bench()
        sampler = self.sampler()
        return {
            "benchmark": self.benchmark,
            "model": self.model().describe(),
            "desk": self.desk,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "trainer": self.trainer_config().to_dict(),
            "initial": sampler.describe(),
            "eval": {
                "particles": int(self.eval.get("particles", 10000)),
                "seed": int(self.eval.get("seed", 1_000_003 + self.seed)),
                "grid": [list(g) for g in self.eval.get("grid", bench.eval_grid)],
            },
        }
