"""Flat ``section.key=value`` configuration files and run manifests.

A manifest is a config file with every effective value written out plus a
``manifest.*`` block (seeds, artifacts, timing).  Feeding a manifest back in
as a config reproduces the run: ``manifest.*`` keys are ignored on load.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from ..crop import YEAR_WEIGHTS, ObservationMode
from ..errors import ConfigError
from ..rl import AgentConfig

MODES = ("train", "eval", "compare", "verify-rewards", "sweep-w3", "synth-weather")
MODEL_TYPES = tuple(m.value for m in ObservationMode) + ("tabular-toy", "expert-1", "expert-2")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _names(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _opt_float(text: str):
    return None if text.strip() in ("", "auto") else float(text)


# key -> (parser, default).  ``None`` defaults are resolved at load time.
SCHEMA = {
    "run.mode": (str, "train"),
    "run.model": (str, "POMDP10"),
    "run.seed": (int, 0),
    "run.out": (str, "runs/default"),
    "run.scale": (str, "desk"),
    "weather.source": (str, "synth"),
    "weather.path": (str, ""),
    "weather.seed": (int, 1999),
    "weather.days": (int, 204),
    "weather.shift": (float, 0.0),
    "weather.rain_scale": (float, 1.0),
    "env.year": (int, 1999),
    "env.w1": (_opt_float, None),
    "env.w2": (_opt_float, None),
    "env.w3": (_opt_float, None),
    "env.leach_multiplier": (_opt_float, None),
    "env.planting_offset": (int, 0),
    "env.episode_length": (int, 180),
    "eval.episodes": (int, 1),
    "eval.model": (str, ""),
    "compare.models": (_names, ("MDP10", "POMDP10")),
    "compare.seeds": (_ints, (0, 1, 2)),
    "sweep.multipliers": (_floats, (0.0, 5.0, 50.0)),
    "sweep.seeds": (_ints, (0, 1, 2)),
}

_AGENT_PARSERS = {
    "hidden": _ints,
    "gamma": float, "lr": float, "eps_start": float, "eps_end": float, "eps_fraction": float,
    "tau": float, "reward_scale": float, "beta1": float, "beta2": float, "adam_eps": float,
}
_paper = AgentConfig()
for _name, _val in _paper.as_dict().items():
    SCHEMA[f"agent.{_name}"] = (_AGENT_PARSERS.get(_name, int), None)

# Desk scale: a tenth of the full-scale episodes and settings that learn within them.
DESK_AGENT = {
    "episodes": 600,
    "lr": 3e-4,
    "batch_size": 64,
    "train_every": 4,
    "reward_scale": 0.01,
    "tau": 0.01,
    "eps_end": 0.01,
    "select_every": 10,
    "hidden": (128, 128, 128),
}


def format_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "auto"
    return str(v)


def parse_text(text: str, source: str = "<config>") -> dict:
    """Raw ``key -> string`` pairs; later lines win."""
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{n}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_pairs(cls, pairs: dict, source: str = "<config>") -> "ExperimentConfig":
        typed = {}
        for key, raw in pairs.items():
            if key.startswith("manifest."):
                continue
            if key not in SCHEMA:
                raise ConfigError(f"{source}: unknown key {key!r}")
            parse = SCHEMA[key][0]
            try:
                typed[key] = parse(raw) if isinstance(raw, str) else raw
            except ValueError:
                raise ConfigError(f"{source}: {key}={raw!r} is not a valid {getattr(parse, '__name__', 'value')}") from None
        cfg = cls(typed, source)
        cfg.resolve()
        return cfg

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{p}: {exc.strerror}") from exc
        pairs = parse_text(text, str(p))
        pairs.update(overrides or {})
        return cls.from_pairs(pairs, str(p))

    def resolve(self) -> None:
        """Fill every key with an effective value and validate the whole set."""
        v = self.values
        scale = v.get("run.scale", "desk")
        if scale not in ("desk", "paper"):
            raise ConfigError(f"run.scale must be 'desk' or 'paper', got {scale!r}")
        for key, (_, default) in SCHEMA.items():
            if key in v and v[key] is not None:
                continue
            if key.startswith("agent."):
                name = key[6:]
                val = DESK_AGENT.get(name, getattr(_paper, name)) if scale == "desk" else getattr(_paper, name)
                v[key] = tuple(val) if isinstance(val, (list, tuple)) else val
            elif key not in ("env.w1", "env.w2", "env.w3", "env.leach_multiplier"):
                v[key] = default
        year = v["env.year"]
        if year not in YEAR_WEIGHTS and None in (v.get("env.w1"), v.get("env.w2")):
            raise ConfigError(f"env.year {year} has no built-in weights; set env.w1 and env.w2")
        w1, w2, w3 = YEAR_WEIGHTS.get(year, (None, None, None))
        v["env.w1"] = w1 if v.get("env.w1") is None else v["env.w1"]
        v["env.w2"] = w2 if v.get("env.w2") is None else v["env.w2"]
        if v.get("env.leach_multiplier") is not None:
            if v["env.leach_multiplier"] < 0:
                raise ConfigError("env.leach_multiplier must be >= 0")
            v["env.w3"] = v["env.leach_multiplier"] * v["env.w2"]
        elif v.get("env.w3") is None:
            v["env.w3"] = w3 if w3 is not None else 5.0 * v["env.w2"]
        v.setdefault("env.leach_multiplier", None)

        if v["run.mode"] not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}, got {v['run.mode']!r}")
        if v["run.model"] not in MODEL_TYPES:
            raise ConfigError(f"run.model must be one of {MODEL_TYPES}, got {v['run.model']!r}")
        for m in v["compare.models"]:
            if m not in MODEL_TYPES:
                raise ConfigError(f"compare.models: unknown model type {m!r}")
        if any(m < 0 for m in v["sweep.multipliers"]):
            raise ConfigError("sweep.multipliers must be >= 0")
        if v["weather.source"] not in ("synth", "csv"):
            raise ConfigError("weather.source must be 'synth' or 'csv'")
        if v["weather.source"] == "csv":
            if not v["weather.path"]:
                raise ConfigError("weather.source=csv needs weather.path")
            if not Path(v["weather.path"]).is_file():
                raise ConfigError(f"weather.path {v['weather.path']!r} does not exist")
        if not 0.0 <= v["weather.rain_scale"] <= 1.0:
            raise ConfigError("weather.rain_scale must lie in [0, 1]")
        if v["eval.episodes"] < 1:
            raise ConfigError("eval.episodes must be positive")
        if min(v["env.w1"], v["env.w2"], v["env.w3"]) < 0:
            raise ConfigError("reward weights must be non-negative")
        self.agent_config()  # type-checks the agent block

    def agent_config(self) -> AgentConfig:
        kwargs = {k[6:]: val for k, val in self.values.items() if k.startswith("agent.")}
        return AgentConfig(**kwargs)

    def with_overrides(self, **pairs) -> "ExperimentConfig":
        vals = dict(self.values)
        vals.update(pairs)
        cfg = ExperimentConfig(vals, self.source)
        cfg.resolve()
        return cfg

    def dumps(self, skip=()) -> str:
        return "".join(f"{k}={format_value(self.values[k])}\n" for k in sorted(self.values) if k not in skip)


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# Keys whose values change from one execution to the next.
VOLATILE_KEYS = ("manifest.started", "manifest.wall_seconds")


def manifest_text(cfg: ExperimentConfig, extra: dict, started: str | None = None, wall_seconds: float | None = None) -> str:
    """Resolved config plus a ``manifest.*`` block.

    ``run.out`` is left out so a manifest replayed into another directory
    is identical apart from the volatile timing keys.
    """
    lines = ["# run manifest: feed back with --config to reproduce", cfg.dumps(skip=("run.out",))]
    meta = {
        "manifest.toolkit_version": __version__,
        "manifest.started": started or utc_now(),
    }
    if wall_seconds is not None:
        meta["manifest.wall_seconds"] = round(wall_seconds, 3)
    meta.update(extra)
    lines += [f"{k}={format_value(v)}\n" for k, v in meta.items()]
    return "".join(s if s.endswith("\n") else s + "\n" for s in lines)
