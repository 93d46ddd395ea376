"""Flat ``key = value`` experiment configuration.

Keys are the fields of ``ExperimentConfig``, each with a type and a
default; unknown keys are rejected.  Lists are comma separated, explicit decomposition groups are
written ``0,1,2,3;4,5,6,7``, and an empty value means "unset" for optional
keys.  ``#`` starts a comment.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace

from .models import GRAPHITE_T1, GRAPHITE_T2, GRAPHITE_U

MODES = ("vqe", "htn_vqe", "qmc", "qc_qmc", "htn_qmc")
MODELS = ("heisenberg", "graphite", "file")
_SECTION = "experiment"


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    # model
    model: str = "heisenberg"
    k: int = 2
    j_inter: float = 1.0
    t1: float = GRAPHITE_T1
    t2: float = GRAPHITE_T2
    u: float = GRAPHITE_U
    hamiltonian_file: str = ""
    electrons: int | None = None
    penalty: float = 0.0
    # ansatz / optimizer
    mode: str = "htn_qmc"
    decomposition: str = "cluster"
    depth: int = 4
    optimizer: str = "SLSQP"
    maxiter: int = 1000
    tol: float = 1e-8
    schedule: str = "joint"
    init_low: float = 0.0
    init_high: float = 1.0
    shots: int = 0
    # qmc
    dtau: float = 0.001
    max_iter: int = 10000
    n_shift: int = 1000
    shift_interval: int = 5
    damping: float = 0.1
    window_start: int = 5000
    window_end: int = 10000
    spawn_mode: str = "exact"
    max_invalid_streak: int = 1000
    deviation_f: float | None = None
    # run
    seeds: tuple[int, ...] = (0,)
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _fail(key: str, msg: str):
    raise ConfigError(f"{_SECTION}.{key}: {msg}")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.model not in MODELS:
        _fail("model", f"must be one of {MODELS}, got {cfg.model!r}")
    if cfg.model == "file" and not cfg.hamiltonian_file:
        _fail("hamiltonian_file", "required when model = file")
    if cfg.model == "heisenberg" and cfg.k < 1:
        _fail("k", "must be >= 1")
    if cfg.mode not in MODES:
        _fail("mode", f"must be one of {MODES}, got {cfg.mode!r}")
    if cfg.mode.startswith("htn") and cfg.decomposition.strip().lower() in ("", "none"):
        _fail("decomposition", f"mode {cfg.mode} needs a decomposition")
    if cfg.depth < 0:
        _fail("depth", "must be >= 0")
    if not cfg.seeds:
        _fail("seeds", "at least one seed is required")
    if any(s < 0 for s in cfg.seeds):
        _fail("seeds", "seeds must be non-negative")
    if cfg.shots < 0:
        _fail("shots", "must be >= 0 (0 = exact contraction)")
    if cfg.dtau <= 0:
        _fail("dtau", "must be positive")
    if cfg.shift_interval < 1:
        _fail("shift_interval", "must be >= 1")
    if not cfg.window_start < cfg.window_end <= cfg.max_iter:
        _fail("window_end", "need window_start < window_end <= max_iter")
    if cfg.deviation_f is not None and not 0 <= cfg.deviation_f <= 1:
        _fail("deviation_f", "must lie in [0, 1]")
    if cfg.penalty < 0:
        _fail("penalty", "must be >= 0")
    if cfg.penalty > 0 and cfg.electrons is None:
        _fail("electrons", "required when penalty > 0")
    if cfg.workers < 1:
        _fail("workers", "must be >= 1")


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(str(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind.endswith("| None"):
            if text == "":
                return None
            kind = kind.split("|")[0].strip()
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind.startswith("tuple"):
            return tuple(int(x) for x in text.split(",") if x.strip())
        return text
    except ValueError:
        _fail(key, f"cannot parse {text!r} as {kind}")


def loads_config(text: str, **overrides) -> ExperimentConfig:
    """Parse config text; keyword ``overrides`` (already typed) win over file values."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for key, raw in parser[_SECTION].items():
        if key not in _TYPES:
            _fail(key, "unknown key")
        values[key] = _parse(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dumps_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return loads_config(fh.read(), **overrides)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_config(cfg))


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    if "seeds" in d:
        d["seeds"] = tuple(d["seeds"])
    return ExperimentConfig(**d)
