"""Experiment configuration and problem construction."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..problems import ExpRateProblem, MiniRenderProblem, MultNoiseQuadratic, Problem, ScriptedTrajectory

PROBLEMS = ("exp-rate", "mult-noise", "mini-render")
OPTIMIZERS = ("meta", "adam")
TRAJECTORIES = ("optimise", "linear", "exponential")
DIFF_NORMS = ("global", "per-parameter")

# tuned on the default problem configurations; override with --lr
DEFAULT_LR = {
    ("exp-rate", "meta"): 0.003,
    ("exp-rate", "adam"): 0.01,
    ("mult-noise", "meta"): 0.05,
    ("mult-noise", "adam"): 0.05,
    ("mini-render", "meta"): 0.003,
    ("mini-render", "adam"): 0.01,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "exp-rate"
    optimizer: str = "meta"
    iterations: int = 100
    replicates: int = 1
    seed: int = 0

    # problem parameters; None means "problem default"
    spp: int | None = None
    diff_spp: int | None = None
    dim: int = 1
    noise_amp: float = 1.0
    init: float | None = None
    target: float | None = None
    pixel_count: int = 16
    max_exponent: float = 4.0
    scene_seed: int = 0

    # optimiser hyperparameters
    lr: float | None = None
    beta_f: float = 0.9
    beta_d: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    # ablations
    no_alpha_clip: bool = False
    independent_variance_samples: bool = False
    non_zero_centred: bool = False
    diff_norm: str = "global"

    trajectory: str = "optimise"
    trajectory_decay: float = 0.95

    track_index: int = 0
    converge_threshold: float = 1e-2
    workers: int = 1
    out: str | None = None
    summary: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; valid: {', '.join(PROBLEMS)}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; valid: {', '.join(OPTIMIZERS)}")
        if self.trajectory not in TRAJECTORIES:
            raise ConfigError(f"unknown trajectory {self.trajectory!r}; valid: {', '.join(TRAJECTORIES)}")
        if self.diff_norm not in DIFF_NORMS:
            raise ConfigError(f"unknown diff_norm {self.diff_norm!r}; valid: {', '.join(DIFF_NORMS)}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.lr is not None and self.lr <= 0:
            raise ConfigError("lr must be positive")
        for name in ("beta_f", "beta_d", "beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {value}")
        if self.non_zero_centred:
            raise ConfigError("non_zero_centred is reserved and not implemented")

    @property
    def learning_rate(self) -> float:
        return self.lr if self.lr is not None else DEFAULT_LR[(self.problem, self.optimizer)]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def build_problem(self) -> Problem:
        try:
            problem = self._build_inner()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.trajectory == "optimise":
            return problem
        return ScriptedTrajectory(problem, self.trajectory, horizon=self.iterations, decay=self.trajectory_decay)

    def _build_inner(self) -> Problem:
        if self.problem == "exp-rate":
            kwargs = {}
            if self.init is not None:
                kwargs["rate_init"] = self.init
            if self.target is not None:
                kwargs["target_mean"] = self.target
            return ExpRateProblem(samples_per_iter=self.spp or 32, diff_spp=self.diff_spp, **kwargs)
        if self.problem == "mult-noise":
            return MultNoiseQuadratic(dim=self.dim, noise_amp=self.noise_amp, spp=self.spp or 1,
                                      diff_spp=self.diff_spp, params_init=self.init,
                                      target=0.0 if self.target is None else self.target)
        return MiniRenderProblem(pixel_count=self.pixel_count, spp=self.spp or 4, diff_spp=self.diff_spp,
                                 max_exponent=self.max_exponent, scene_seed=self.scene_seed,
                                 params_init=self.init)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def coerce(key: str, raw: str):
    """Convert a textual config value to the field's type."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}; valid: {', '.join(sorted(_FIELD_TYPES))}")
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if "None" in kind and raw.lower() in ("", "none", "null"):
        return None
    try:
        if kind.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = coerce(key, raw)
    return values


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
