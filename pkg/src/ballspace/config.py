"""Experiment configuration: TOML in, validated dataclasses out, and back.

Grammar (TOML)::

    seed = <int>                          # required; every check seed derives from it
    [grid]     n = 1|2, box = [[a, b], ...], L = <int>
    [weights.<name>]  kind = "constant"|"power"|"capped_power"|"piecewise"|"custom", params...
    [spaces]   <name> = "Tag(args)" | { tag = "...", params... }
    [wavelet]  family = "haar"|"db2"|..., J = <int>, cascade_level = <int>, j_max = <int> (optional)
    [harness]  workers, normalization, tol, growth, budget, battery_kind, battery_count, alpha, beta
    [[checks]] check = <name>, space = <space name>, name = <report name> (optional),
               grid = { n, box, L } (optional override), wavelet = family (optional override),
               check-specific keys
    [output]   dir = <path> (optional), formats = ["json", "table", "csv"]

Space parameters that name weights refer to ``[weights]`` entries.
"""

from __future__ import annotations

import copy
import math
import sys
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

from numpy.random import SeedSequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from .grid import GridError, make_grid
from .spaces import SpaceError, parse_space
from .wavelets import parse_family
from .weights import WeightError, WeightSpec


class ConfigParseError(ValueError):
    exit_code = 2


class ConfigValidationError(ValueError):
    exit_code = 3


CHECK_KEYS = {
    "axioms": {"tol"},
    "extrapolation": {"family", "p", "s", "count", "kind", "growth", "wavelet"},
    "proof_chain": {"p", "triples", "eps", "alpha", "beta", "tol"},
    "wavelet_equivalence": {"s", "count", "kind", "budget", "drift", "split", "wavelet"},
    "convergence": {"kind", "tol", "wavelet"},
    "vector_valued": {"r", "sizes", "growth"},
    "riesz_boundedness": {"count", "kind", "agree"},
}
COMMON_KEYS = {"check", "space", "name", "grid"}
NORMALIZATIONS = ("measure", "radius")
FORMATS = ("json", "table", "csv")


@dataclass
class GridConfig:
    n: int = 1
    box: list = field(default_factory=lambda: [[-4.0, 4.0]])
    L: int = 8

    def build(self):
        return make_grid(self.n, self.box, self.L)


@dataclass
class WaveletConfig:
    family: str = "haar"
    J: int = 0
    cascade_level: int = 12
    j_max: int | None = None


@dataclass
class HarnessConfig:
    workers: int = 1
    normalization: str = "measure"
    tol: float = 1e-9
    growth: float = 2.0
    budget: float = 50.0
    battery_kind: str = "mixed"
    battery_count: int = 8
    alpha: float | None = None
    beta: float | None = None


@dataclass
class CheckConfig:
    check: str
    space: str | None = None
    name: str = ""
    grid: GridConfig | None = None
    params: dict = field(default_factory=dict)

    def seed(self, base: int) -> int:
        """Named generator: SeedSequence([seed, crc32(check name)])."""
        return int(SeedSequence([base, zlib.crc32(self.name.encode())]).generate_state(1)[0])


@dataclass
class OutputConfig:
    dir: str | None = None
    formats: list = field(default_factory=lambda: list(FORMATS))


@dataclass
class ExperimentConfig:
    seed: int
    grid: GridConfig = field(default_factory=GridConfig)
    weights: dict = field(default_factory=dict)
    spaces: dict = field(default_factory=dict)
    wavelet: WaveletConfig = field(default_factory=WaveletConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    checks: list = field(default_factory=list)
    output: OutputConfig = field(default_factory=OutputConfig)

    def weight_specs(self) -> dict:
        return {k: WeightSpec.from_dict(v) for k, v in self.weights.items()}

    def space(self, name: str):
        return parse_space(self.spaces[name], self.weight_specs())

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "grid": asdict(self.grid),
            "weights": copy.deepcopy(self.weights),
            "spaces": copy.deepcopy(self.spaces),
            "wavelet": asdict(self.wavelet),
            "harness": asdict(self.harness),
            "checks": [],
            "output": asdict(self.output),
        }
        for c in self.checks:
            entry = {"check": c.check, "name": c.name}
            if c.space is not None:
                entry["space"] = c.space
            if c.grid is not None:
                entry["grid"] = asdict(c.grid)
            entry.update(c.params)
            d["checks"].append(entry)
        return _drop_none(d)

    def dumps(self) -> str:
        return tomli_w.dumps(_toml_safe(self.to_dict()))


def _drop_none(obj):
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_drop_none(v) for v in obj]
    return obj


def _toml_safe(obj):
    if isinstance(obj, dict):
        return {k: _toml_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_toml_safe(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


# --- loading -------------------------------------------------------------------


def loads(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"config parse error: {exc}") from None
    return from_dict(raw)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from None
    return loads(text)


def _section(raw: dict, key: str, cls):
    block = raw.get(key, {})
    if not isinstance(block, dict):
        raise ConfigValidationError(f"[{key}] must be a table")
    known = set(cls.__dataclass_fields__)
    extra = set(block) - known
    if extra:
        raise ConfigValidationError(f"[{key}] has unknown keys {sorted(extra)}")
    try:
        return cls(**block)
    except TypeError as exc:
        raise ConfigValidationError(f"[{key}]: {exc}") from None


def from_dict(raw: dict) -> ExperimentConfig:
    if "seed" not in raw:
        raise ConfigValidationError("missing 'seed'")
    unknown = set(raw) - {"seed", "grid", "weights", "spaces", "wavelet", "harness", "checks", "output"}
    if unknown:
        raise ConfigValidationError(f"unknown top-level keys {sorted(unknown)}")
    checks = []
    for i, c in enumerate(raw.get("checks", [])):
        c = dict(c)
        if "check" not in c:
            raise ConfigValidationError(f"checks[{i}] has no 'check'")
        grid = GridConfig(**c.pop("grid")) if "grid" in c else None
        kind = c.pop("check")
        space = c.pop("space", None)
        name = c.pop("name", None) or f"{i:02d}_{kind}" + (f"_{space}" if space else "")
        checks.append(CheckConfig(kind, space, name, grid, c))
    cfg = ExperimentConfig(
        seed=raw["seed"],
        grid=_section(raw, "grid", GridConfig),
        weights=dict(raw.get("weights", {})),
        spaces=dict(raw.get("spaces", {})),
        wavelet=_section(raw, "wavelet", WaveletConfig),
        harness=_section(raw, "harness", HarnessConfig),
        checks=checks,
        output=_section(raw, "output", OutputConfig),
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    fail = ConfigValidationError
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        raise fail("seed must be a non-negative integer")
    try:
        cfg.grid.build()
        for c in cfg.checks:
            if c.grid is not None:
                c.grid.build()
    except (GridError, TypeError, ValueError) as exc:
        raise fail(f"grid: {exc}") from None
    for name, w in cfg.weights.items():
        try:
            WeightSpec.from_dict(w)
        except (WeightError, KeyError, TypeError) as exc:
            raise fail(f"weight {name!r}: {exc}") from None
    for name in cfg.spaces:
        try:
            cfg.space(name)
        except SpaceError as exc:
            raise fail(f"space {name!r}: {exc}") from None
    try:
        parse_family(cfg.wavelet.family)
    except ValueError as exc:
        raise fail(f"wavelet: {exc}") from None
    h = cfg.harness
    if h.normalization not in NORMALIZATIONS:
        raise fail(f"normalization must be one of {NORMALIZATIONS}")
    for key in ("tol", "growth", "budget"):
        if not getattr(h, key) > 0:
            raise fail(f"harness.{key} must be positive")
    if h.workers < 1 or h.battery_count < 1:
        raise fail("harness.workers and harness.battery_count must be at least 1")
    bad = set(cfg.output.formats) - set(FORMATS)
    if bad:
        raise fail(f"unknown output formats {sorted(bad)}")
    names = set()
    for c in cfg.checks:
        if c.check not in CHECK_KEYS:
            raise fail(f"unknown check {c.check!r}")
        if c.name in names:
            raise fail(f"duplicate check name {c.name!r}")
        names.add(c.name)
        if c.space is None:
            raise fail(f"check {c.name!r} needs a space")
        if c.space not in cfg.spaces:
            raise fail(f"check {c.name!r} references undefined space {c.space!r}")
        extra = set(c.params) - CHECK_KEYS[c.check]
        if extra:
            raise fail(f"check {c.name!r} has unknown keys {sorted(extra)}")
        if "wavelet" in c.params:
            try:
                parse_family(c.params["wavelet"])
            except ValueError as exc:
                raise fail(f"check {c.name!r}: {exc}") from None
        for key in ("tol", "growth", "budget", "agree", "count", "triples"):
            if key in c.params and not c.params[key] > 0:
                raise fail(f"check {c.name!r}: {key} must be positive")


def default_suite_path() -> Path:
    return Path(__file__).parent / "data" / "default_suite.toml"
