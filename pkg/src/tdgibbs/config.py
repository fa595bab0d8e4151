"""Run configuration: a flat ``key = value`` text format.

Example::

    # polynomial order selection
    model = polyreg
    model.seed = 42
    model.n = 30
    model.k_max = 5
    algorithm = gibbs
    bridge = prior_birth
    q = 0.5
    n_sweeps = 200000
    burn_in = 20000
    seed = 1
    mh.steps = 5
    mh.step_size = 0.1
    output_path = chain.csv

Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from .bridges import parse_bridge_name

REQUIRED = ("model", "algorithm", "bridge", "q", "n_sweeps", "burn_in", "seed", "output_path")
ALGORITHMS = ("gibbs", "rj")

# parameters each model accepts, with their types and defaults
MODEL_PARAMS = {
    "polyreg": {"seed": (int, 42), "n": (int, 30), "sigma": (float, 0.3),
                "k_max": (int, 5), "prior_sd": (float, 1.0)},
    "grid": {"preset": (str, "tiny")},
}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class RunConfig:
    model: str
    algorithm: str
    bridge: str
    q: float
    n_sweeps: int
    burn_in: int
    seed: int
    output_path: str
    model_params: dict = field(default_factory=dict)
    mh_steps: int = 5
    mh_step_size: float = 0.1
    threshold: float = 0.03

    def __post_init__(self):
        if self.model not in MODEL_PARAMS:
            raise ConfigError("model", f"unknown model {self.model!r}; choose from {sorted(MODEL_PARAMS)}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"expected one of {ALGORITHMS}, got {self.algorithm!r}")
        try:
            parse_bridge_name(self.bridge)
        except ValueError as e:
            raise ConfigError("bridge", str(e)) from None
        if not 0.0 < self.q < 1.0:
            raise ConfigError("q", f"must lie strictly between 0 and 1, got {self.q}")
        if self.burn_in < 0:
            raise ConfigError("burn_in", "must be nonnegative")
        if not self.n_sweeps > self.burn_in:
            raise ConfigError("n_sweeps", f"must exceed burn_in ({self.n_sweeps} <= {self.burn_in})")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.mh_steps < 0:
            raise ConfigError("mh.steps", "must be nonnegative")
        if self.mh_step_size < 0:
            raise ConfigError("mh.step_size", "must be nonnegative")
        if not self.threshold > 0:
            raise ConfigError("threshold", "must be positive")
        schema = MODEL_PARAMS[self.model]
        params = {name: default for name, (_, default) in schema.items()}
        for name, value in self.model_params.items():
            if name not in schema:
                raise ConfigError(f"model.{name}", f"not a parameter of model {self.model!r}")
            params[name] = value
        self.model_params = params
        self._check_model_params()

    def _check_model_params(self):
        p = self.model_params
        if self.model == "grid":
            from .testbeds import GRID_PRESETS
            if p["preset"] not in GRID_PRESETS:
                raise ConfigError("model.preset", f"unknown preset {p['preset']!r}; choose from {GRID_PRESETS}")
        elif self.model == "polyreg":
            for name in ("n", "k_max"):
                if p[name] < 1:
                    raise ConfigError(f"model.{name}", "must be at least 1")
            for name in ("sigma", "prior_sd"):
                if not p[name] > 0:
                    raise ConfigError(f"model.{name}", "must be positive")
            if not 0 <= p["seed"] < 2**64:
                raise ConfigError("model.seed", "must be an unsigned 64-bit integer")

    def to_text(self) -> str:
        lines = [f"model = {self.model}"]
        lines += [f"model.{k} = {_fmt(v)}" for k, v in sorted(self.model_params.items())]
        lines += [
            f"algorithm = {self.algorithm}",
            f"bridge = {self.bridge}",
            f"q = {_fmt(self.q)}",
            f"n_sweeps = {self.n_sweeps}",
            f"burn_in = {self.burn_in}",
            f"seed = {self.seed}",
            f"mh.steps = {self.mh_steps}",
            f"mh.step_size = {_fmt(self.mh_step_size)}",
            f"threshold = {_fmt(self.threshold)}",
            f"output_path = {self.output_path}",
        ]
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _convert(key, raw, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(key or f"line {lineno}", f"line {lineno} is not 'key = value'")
        if key in raw:
            raise ConfigError(key, "given more than once")
        raw[key] = value

    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(key, "missing")
    model = raw.pop("model")
    if model not in MODEL_PARAMS:
        raise ConfigError("model", f"unknown model {model!r}; choose from {sorted(MODEL_PARAMS)}")

    model_params = {}
    for key in [k for k in raw if k.startswith("model.")]:
        name = key[len("model."):]
        if name not in MODEL_PARAMS[model]:
            raise ConfigError(key, f"not a parameter of model {model!r}")
        model_params[name] = _convert(key, raw.pop(key), MODEL_PARAMS[model][name][0])

    kinds = {"algorithm": str, "bridge": str, "q": float, "n_sweeps": int, "burn_in": int,
             "seed": int, "output_path": str, "mh.steps": int, "mh.step_size": float,
             "threshold": float}
    values = {}
    for key, value in raw.items():
        if key not in kinds:
            raise ConfigError(key, "unknown key")
        values[key.replace(".", "_")] = _convert(key, value, kinds[key])
    return RunConfig(model=model, model_params=model_params, **values)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("<file>", f"cannot read {path}: {e.strerror}") from None
    return parse_config(text)
