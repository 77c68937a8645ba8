"""Experiment configuration (YAML) and its mapping onto geometries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .channel import GridSpec
from .intervals import ElevationSet, IntervalSet, from_elevation
from .regions import (
    L_FIELDS, PSI_FIELDS, NetworkGeometry, overlapped_geometry, symmetric_geometry,
)

MODES = ("physical", "blockmodel", "formulas_only")
SCENARIO_PARAMS = {
    "overlapped": ("L_BS", "L_Usr", "psi"),
    "symmetric": ("L", "fwd", "back", "overlap"),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    geometry: NetworkGeometry | None = None
    scenario: tuple[str, dict[str, float]] | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    mode: str = "formulas_only"
    sweep: tuple[str, list[float]] | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    output_dir: Path = Path("out")
    leakage_floor_db: float = -30.0
    jobs: int = 1

    def __post_init__(self):
        if (self.geometry is None) == (self.scenario is None):
            raise ConfigError("exactly one of 'geometry' or 'scenario' must be given")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sweep is not None:
            name, values = self.sweep
            if not values:
                raise ConfigError("sweep has no values")
            if not all(math.isfinite(v) for v in values):
                raise ConfigError("sweep values must be finite")
            allowed = self.sweepable()
            if name not in allowed:
                raise ConfigError(f"cannot sweep {name!r}; choose one of {sorted(allowed)}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def sweepable(self) -> tuple[str, ...]:
        if self.scenario is not None:
            return SCENARIO_PARAMS[self.scenario[0]]
        return L_FIELDS

    def sweep_values(self) -> list[float | None]:
        return [None] if self.sweep is None else list(self.sweep[1])

    def geometry_at(self, value: float | None = None) -> NetworkGeometry:
        """Geometry for one sweep point (the base geometry when value is None)."""
        if self.scenario is None:
            g = self.geometry
            if value is not None:
                g = replace(g, **{self.sweep[0]: value})
            return g
        kind, params = self.scenario
        params = dict(params)
        if value is not None:
            params[self.sweep[0]] = value
        try:
            if kind == "overlapped":
                return overlapped_geometry(params["L_BS"], params["L_Usr"], params["psi"])
            return symmetric_geometry(params["L"], params["fwd"], params["back"], params["overlap"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def plot_unit(self, value: float | None = None) -> float | None:
        """Array half-length used to label plot axes in L units, if any."""
        if self.scenario is None:
            return None
        kind, params = self.scenario
        key = "L" if kind == "symmetric" else "L_Usr"
        unit = value if (value is not None and self.sweep and self.sweep[0] == key) else params[key]
        return unit if unit > 0 else None

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"mode": self.mode, "seeds": list(self.seeds),
                               "leakage_floor_db": self.leakage_floor_db}
        if self.scenario is not None:
            out["scenario"] = {self.scenario[0]: dict(self.scenario[1])}
        else:
            out["geometry"] = self.geometry.to_dict()
        out["grid"] = {"n_wavevector": self.grid.n_wavevector, "oversampling": self.grid.oversampling,
                       "seed": self.grid.seed}
        if self.sweep is not None:
            out["sweep"] = {"name": self.sweep[0], "values": list(self.sweep[1])}
        return out


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    return float(value)


def _parse_geometry(data: Any) -> NetworkGeometry:
    if not isinstance(data, dict):
        raise ConfigError("'geometry' must be a mapping")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in L_FIELDS:
            kwargs[key] = _number(value, f"geometry.{key}")
        elif key in PSI_FIELDS:
            kwargs[key] = _interval(value, f"geometry.{key}", IntervalSet)
        elif key.startswith("theta_") and "psi_" + key[6:] in PSI_FIELDS:
            target = "psi_" + key[6:]
            if target in data:
                raise ConfigError(f"give either {key} or {target}, not both")
            kwargs[target] = from_elevation(_interval(value, f"geometry.{key}", ElevationSet))
        else:
            raise ConfigError(f"unknown geometry key {key!r}")
    try:
        return NetworkGeometry(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _interval(value: Any, where: str, kind):
    if not isinstance(value, list):
        raise ConfigError(f"{where} must be a list of [lo, hi] pairs")
    pairs = []
    for pair in value:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{where}: {pair!r} is not a [lo, hi] pair")
        pairs.append((_number(pair[0], where), _number(pair[1], where)))
    try:
        return kind(pairs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_scenario(data: Any) -> tuple[str, dict[str, float]]:
    if not isinstance(data, dict) or len(data) != 1:
        raise ConfigError("'scenario' must hold exactly one of 'overlapped' or 'symmetric'")
    (kind, params), = data.items()
    if kind not in SCENARIO_PARAMS:
        raise ConfigError(f"unknown scenario {kind!r}")
    if not isinstance(params, dict):
        raise ConfigError(f"scenario.{kind} must be a mapping")
    expected = SCENARIO_PARAMS[kind]
    if set(params) != set(expected):
        raise ConfigError(f"scenario.{kind} needs exactly the keys {list(expected)}")
    return kind, {k: _number(params[k], f"scenario.{kind}.{k}") for k in expected}


def parse_config(data: Any, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    known = {"geometry", "scenario", "grid", "mode", "sweep", "seeds", "output_dir",
             "leakage_floor_db", "jobs"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs: dict[str, Any] = {}
    if "geometry" in data:
        kwargs["geometry"] = _parse_geometry(data["geometry"])
    if "scenario" in data:
        kwargs["scenario"] = _parse_scenario(data["scenario"])
    if "grid" in data:
        grid = data["grid"]
        if not isinstance(grid, dict):
            raise ConfigError("'grid' must be a mapping")
        try:
            kwargs["grid"] = GridSpec(**grid)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid: {exc}") from exc
    if "mode" in data:
        kwargs["mode"] = data["mode"]
    if "sweep" in data:
        sweep = data["sweep"]
        if not isinstance(sweep, dict) or set(sweep) != {"name", "values"}:
            raise ConfigError("'sweep' needs exactly 'name' and 'values'")
        if not isinstance(sweep["values"], list):
            raise ConfigError("sweep.values must be a list")
        kwargs["sweep"] = (str(sweep["name"]), [_number(v, "sweep.values") for v in sweep["values"]])
    if "seeds" in data:
        seeds = data["seeds"]
        if not isinstance(seeds, list) or not all(isinstance(s, int) and s >= 0 for s in seeds):
            raise ConfigError("'seeds' must be a list of nonnegative integers")
        kwargs["seeds"] = seeds
    if "output_dir" in data:
        out = Path(str(data["output_dir"]))
        kwargs["output_dir"] = out if out.is_absolute() or base_dir is None else base_dir / out
    if "leakage_floor_db" in data:
        kwargs["leakage_floor_db"] = _number(data["leakage_floor_db"], "leakage_floor_db")
    if "jobs" in data:
        kwargs["jobs"] = int(data["jobs"])
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data, base_dir=path.parent)
