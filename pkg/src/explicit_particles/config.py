"""Run configuration: parsing, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .core import ConfigurationError
from .weights import PRESETS

EXPERIMENTS = ("taylor-green", "cavity", "dambreak", "truncation", "optimize-weight", "custom")

# per-experiment defaults applied to keys left unset
DEFAULTS = {
    "taylor-green": dict(dx=0.04, h_factor=3.1, eps=0.1, T=0.1, Re=10.0),
    "cavity": dict(dx=0.01, h_factor=3.1, eps=0.1, Re=100.0),
    "dambreak": dict(dx=0.005, h_factor=2.6, eps=0.05, T=1.3, free_surface=True, collision=True),
    "truncation": dict(dx=2.0 ** -4, h_factor=3.1, eps_max=0.0),
    "optimize-weight": dict(n=3, dim=2),
    "custom": dict(dx=0.05, h_factor=3.1, eps=0.1, T=0.1, Re=10.0),
}


@dataclass
class RunConfig:
    experiment: str
    preset: str = "g-s"
    dx: float | None = None
    h: float | None = None
    h_factor: float | None = None
    m: int | None = None
    C_m: float | None = None
    eps: float | None = None
    tau: object = "auto"
    T: float | None = None
    Re: float | None = None
    seeds: list = field(default_factory=lambda: [0])
    eps_max: float | None = None
    n: int | None = None
    dim: int | None = None
    out: str = "out"
    reference: str | None = None
    pressure_recalc: bool = True
    free_surface: bool = False
    collision: bool = False
    snapshots: int = 0
    steady_tol: float = 1e-3
    max_steps: int = 200_000
    t_max: float | None = None
    squared_norm: bool = True
    body_force: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def radius(self) -> float:
        """Influence radius: explicit h, else C_m dx^(1/m), else h_factor dx."""
        if self.h is not None:
            return self.h
        if self.m is not None:
            c = self.C_m if self.C_m is not None else 3.1 * 0.04 ** (1 - 1 / self.m)
            return c * self.dx ** (1 / self.m)
        return self.h_factor * self.dx


_KEYS = {f.name for f in fields(RunConfig)}
_ALIASES = {"recalc": "pressure_recalc", "seed": "seeds", "epsilon": "eps", "h-factor": "h_factor"}


def _coerce(text):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        pass
    if "," in s:
        return [_coerce(p) for p in s.split(",")]
    return s.strip("\"'")


def _pairs(text):
    s = text.strip()
    if s.startswith("{"):
        try:
            obj = json.loads(s)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON config: {exc}") from None
        return list(obj.items())
    out = []
    for lineno, raw in enumerate(s.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        out.append((k.strip(), _coerce(v)))
    return out


def _positive(cfg, name, allow_none=True):
    v = getattr(cfg, name)
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
        raise ConfigurationError(f"{name} must be a positive number, got {v!r}")


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigurationError(f"experiment: unknown value {cfg.experiment!r}")
    if cfg.preset not in PRESETS:
        raise ConfigurationError(f"preset: unknown preset {cfg.preset!r} (choose from {sorted(PRESETS)})")
    for name in ("dx", "h", "h_factor", "C_m", "eps", "T", "Re", "steady_tol", "t_max"):
        _positive(cfg, name)
    if cfg.tau != "auto":
        _positive(cfg, "tau", allow_none=False)
    if cfg.m is not None and (not isinstance(cfg.m, int) or cfg.m < 1):
        raise ConfigurationError(f"m must be a positive integer, got {cfg.m!r}")
    if cfg.eps_max is not None and not 0 <= cfg.eps_max < 1:
        raise ConfigurationError(f"eps_max must lie in [0, 1), got {cfg.eps_max!r}")
    if cfg.n is not None and (not isinstance(cfg.n, int) or cfg.n < 2):
        raise ConfigurationError(f"n must be an integer >= 2, got {cfg.n!r}")
    if cfg.dim is not None and cfg.dim not in (1, 2, 3):
        raise ConfigurationError(f"dim must be 1, 2 or 3, got {cfg.dim!r}")
    if isinstance(cfg.seeds, int):
        cfg.seeds = [cfg.seeds]
    if not cfg.seeds or not all(isinstance(s, int) and s >= 0 for s in cfg.seeds):
        raise ConfigurationError(f"seeds must be nonnegative integers, got {cfg.seeds!r}")
    if not isinstance(cfg.snapshots, int) or cfg.snapshots < 0:
        raise ConfigurationError(f"snapshots must be a nonnegative integer, got {cfg.snapshots!r}")
    if not isinstance(cfg.max_steps, int) or cfg.max_steps < 1:
        raise ConfigurationError(f"max_steps must be a positive integer, got {cfg.max_steps!r}")
    for name in ("pressure_recalc", "free_surface", "collision", "squared_norm"):
        if not isinstance(getattr(cfg, name), bool):
            raise ConfigurationError(f"{name} must be true or false")
    if cfg.body_force is not None and (not isinstance(cfg.body_force, list)
                                       or not all(isinstance(v, (int, float)) for v in cfg.body_force)):
        raise ConfigurationError("body_force must be a list of numbers")
    return cfg


def make_config(**kw) -> RunConfig:
    """Build from keyword values, apply experiment defaults, validate."""
    kw = {_ALIASES.get(k, k).replace("-", "_"): v for k, v in kw.items()}
    unknown = set(kw) - _KEYS
    if unknown:
        raise ConfigurationError(f"unknown key {sorted(unknown)[0]!r}")
    if "experiment" not in kw or kw["experiment"] is None:
        raise ConfigurationError("missing required key 'experiment'")
    exp = kw["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigurationError(f"experiment: unknown value {exp!r}")
    if exp == "taylor-green" and kw.get("m") is not None and kw.get("eps") is None:
        # convergence set-up: penalty shrinks with the spacing
        kw["eps"] = 2.5 * (kw.get("dx") or DEFAULTS[exp]["dx"])
    for k, v in DEFAULTS[exp].items():
        if kw.get(k) is None:
            kw[k] = v
    if isinstance(kw.get("seeds"), int):
        kw["seeds"] = [kw["seeds"]]
    return validate(RunConfig(**kw))


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` comments) or a JSON object."""
    kw = {}
    for k, v in _pairs(text):
        key = _ALIASES.get(k, k).replace("-", "_")
        if key not in _KEYS:
            raise ConfigurationError(f"unknown key {k!r}")
        kw[key] = v
    return make_config(**kw)
