"""Run configuration: strict JSON parsing with defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

from .flow import FlowConfig


class ConfigError(ValueError):
    pass


_REQUIRED = object()

MESH_SOURCES = {
    "icosphere": {"subdivisions": (int, 3), "radius": (float, 1.0)},
    "flat_torus": {"m": (int, 16), "n": (int, 16), "width": (float, 1.0),
                   "height": (float, 1.0)},
    "file": {"path": (str, _REQUIRED)},
}

SECTIONS = {
    "perturb": {"amplitude": (float, 0.0), "seed": (int, 0)},
    "flow": {"dt_init": (float, 1e-3), "t_max": (float, 1000.0),
             "sample_every": (int, 1000), "convergence_tol": (float, 1e-6),
             "renormalize": (bool, True), "solver_tol": (float, 1e-10),
             "min_angle_floor": (float, 0.01)},
    "verdict": {"epsilon_rel": (float, 1e-6), "window_fraction": (float, 0.2)},
    "output": {"trace_csv_path": (str, None), "report_json_path": (str, None)},
}


@dataclass(frozen=True)
class RunConfig:
    mesh_kind: str
    mesh_params: dict
    normalize_area_to: float | None = None
    amplitude: float = 0.0
    seed: int = 0
    flow: FlowConfig = field(default_factory=FlowConfig)
    epsilon_rel: float = 1e-6
    window_fraction: float = 0.2
    trace_csv_path: str | None = None
    report_json_path: str | None = None
    base_dir: str = "."

    def resolve(self, path: str | None) -> str | None:
        if path is None or os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)


def _coerce(value, kind, where):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a nonempty string")
    return value


def _section(obj, schema, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in obj:
        if key not in schema:
            raise ConfigError(f"unknown key {where}.{key}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in obj and obj[key] is not None:
            out[key] = _coerce(obj[key], kind, f"{where}.{key}")
        elif default is _REQUIRED:
            raise ConfigError(f"missing key {where}.{key}")
        else:
            out[key] = default
    return out


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse a JSON run configuration; unknown keys are errors.

    Raises
    ------
    ConfigError
        With the dotted key path of the first problem.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    allowed = {"mesh", "normalize_area_to", *SECTIONS}
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown key {key}")
    mesh = doc.get("mesh")
    if not isinstance(mesh, dict) or len(mesh) != 1:
        raise ConfigError("mesh: exactly one source of icosphere, flat_torus, file is required")
    (kind, params), = mesh.items()
    if kind not in MESH_SOURCES:
        raise ConfigError(f"unknown key mesh.{kind}")
    params = _section(params, MESH_SOURCES[kind], f"mesh.{kind}")

    area = doc.get("normalize_area_to")
    if area is not None:
        area = _coerce(area, float, "normalize_area_to")
        if not area > 0:
            raise ConfigError("normalize_area_to: must be positive")
    sec = {name: _section(doc.get(name, {}), schema, name)
           for name, schema in SECTIONS.items()}
    try:
        flow = FlowConfig(**sec["flow"], seed=sec["perturb"]["seed"],
                          amplitude=sec["perturb"]["amplitude"])
    except ValueError as exc:
        raise ConfigError(f"flow: {exc}") from None
    wf = sec["verdict"]["window_fraction"]
    if not 0 < wf <= 1:
        raise ConfigError("verdict.window_fraction: must lie in (0, 1]")
    if sec["verdict"]["epsilon_rel"] < 0:
        raise ConfigError("verdict.epsilon_rel: must be nonnegative")
    return RunConfig(kind, params, area, flow.amplitude, flow.seed, flow,
                     sec["verdict"]["epsilon_rel"], wf,
                     sec["output"]["trace_csv_path"], sec["output"]["report_json_path"],
                     base_dir)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), os.path.dirname(os.path.abspath(path)))


def config_dict(cfg: RunConfig) -> dict:
    """Fully defaulted configuration in schema layout (for echoing into reports)."""
    flow = {f.name: getattr(cfg.flow, f.name) for f in fields(cfg.flow)
            if f.name not in ("seed", "amplitude")}
    return {
        "mesh": {cfg.mesh_kind: dict(cfg.mesh_params)},
        "normalize_area_to": cfg.normalize_area_to,
        "perturb": {"amplitude": cfg.amplitude, "seed": cfg.seed},
        "flow": flow,
        "verdict": {"epsilon_rel": cfg.epsilon_rel, "window_fraction": cfg.window_fraction},
        "output": {"trace_csv_path": cfg.trace_csv_path,
                   "report_json_path": cfg.report_json_path},
    }
