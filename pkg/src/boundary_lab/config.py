"""Flat ``key = value`` experiment configuration."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .boundary import BoundaryPoint, dimension
from .errors import ConfigError, ParamError


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _points(text: str) -> tuple[BoundaryPoint, ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "/" not in item:
            raise ConfigError(f"basepoint {item!r} must be written head/period")
        head, period = (x.strip() for x in item.split("/", 1))
        try:
            out.append(BoundaryPoint(head, period))
        except ParamError as exc:
            raise ConfigError(str(exc)) from exc
    return tuple(out)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 2
    depth: int = 3
    truncation: int = 6
    s_grid: tuple = (0.3,)
    p: float = 2.0
    t_grid: tuple = (0.0,)
    group_radius: int = 2
    basepoints: tuple = field(default_factory=lambda: (BoundaryPoint("", "a"),))
    trials: int = 50
    seed: int = 0
    output_path: str = "report.csv"
    format: str = "csv"
    plot: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError("m must be >= 2")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.truncation < self.depth:
            raise ConfigError("truncation must be >= depth")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.p < 1:
            raise ConfigError("p must be >= 1")
        if not self.s_grid or not self.t_grid:
            raise ConfigError("s_grid and t_grid must be nonempty")

    @property
    def D(self) -> float:
        return dimension(self.m)

    def truncation_for(self, n: int) -> int:
        """Tail level for depth n, keeping the configured gap above the depth."""
        return n + (self.truncation - self.depth)

    def depth_scan(self) -> list[int]:
        return list(range(max(1, self.depth - 2), self.depth + 1))

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "basepoints":
                v = [f"{b.head}/{b.period}" for b in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    def with_updates(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


_PARSERS = {
    "m": int,
    "depth": int,
    "truncation": int,
    "s_grid": _floats,
    "p": float,
    "t_grid": _floats,
    "group_radius": int,
    "basepoints": _points,
    "trials": int,
    "seed": int,
    "output_path": str,
    "format": lambda x: x.strip().lower(),
    "plot": _bool,
}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def require_below_dimension(cfg: ExperimentConfig, p: float | None = None):
    """Every s on the grid must satisfy s * p < D (p defaults to the configured one)."""
    q = cfg.p if p is None else p
    for s in cfg.s_grid:
        if s * q >= cfg.D:
            raise ParamError(f"s={s} with p={q} violates s*p < D = {cfg.D:.4f}")
