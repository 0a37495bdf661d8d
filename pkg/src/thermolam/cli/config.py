"""Run configuration: JSON parsing, schema validation and physical checks."""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError, MaterialError
from ..materials import PhaseInput, derive_coefficients
from ..numerics.precision import PrecisionPolicy
from ..spectrum import FAMILIES, SweepConfig
from ..transfer import CellSpec, LayerSpec

BUNDLED_CONFIG = "sofc_bilayer.json"
SCHEMA_FILE = "run_config.schema.json"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PhaseModel(_Strict):
    """Isotropic phase data in SI units (see ``PhaseInput``)."""

    E: float
    nu: float
    rho: float
    Kt: float
    C_spec: float
    alpha_t: float
    D_over_q: float
    beta_t: float | None = None
    q_over_p: float = 0.1
    psi_over_p: float = 1.0 / 3.0
    T0: float = 293.15
    q: float | None = None
    psi: float | None = None
    D: float | None = None


class LayerModel(_Strict):
    phase: str
    thickness: float = Field(description="layer thickness [m]")


class CellModel(_Strict):
    phases: dict[str, PhaseModel]
    layers: list[LayerModel] = Field(min_length=1)

    @model_validator(mode="after")
    def _known_phases(self) -> "CellModel":
        for i, layer in enumerate(self.layers):
            if layer.phase not in self.phases:
                raise ValueError(f"layers[{i}].phase {layer.phase!r} is not defined in cell.phases")
        return self


class GridSegment(_Strict):
    """``num`` points from ``start`` to ``stop`` (inclusive)."""

    kind: Literal["linear", "log"]
    start: float
    stop: float
    num: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "GridSegment":
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("segment bounds must be finite")
        if self.start < 0 or self.stop < self.start:
            raise ValueError("segment needs 0 <= start <= stop")
        if self.kind == "log" and self.start <= 0:
            raise ValueError("log segment needs start > 0")
        return self

    def values(self) -> np.ndarray:
        if self.kind == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


class SweepModel(_Strict):
    omega_segments: list[GridSegment] = Field(default_factory=list)
    omega_values: list[float] = Field(default_factory=list)
    k1_star: float = 0.0
    deltas: list[float] = Field(default_factory=lambda: [1.0], min_length=1)
    eps_band: float = Field(default=1e-6, gt=0)
    cross_check: bool = True
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _has_grid(self) -> "SweepModel":
        if not self.omega_segments and not self.omega_values:
            raise ValueError("omega_segments or omega_values: at least one frequency")
        if any(d < 0 or not math.isfinite(d) for d in self.deltas):
            raise ValueError("deltas must be finite and >= 0")
        return self


class BandsModel(_Strict):
    families: list[str] = Field(default_factory=lambda: ["shear", "compressional"])
    refine: bool = True
    rtol: float = Field(default=1e-6, gt=0, lt=1)

    @field_validator("families")
    @classmethod
    def _known(cls, v: list[str]) -> list[str]:
        for f in v:
            if f not in FAMILIES:
                raise ValueError(f"unknown family {f!r}; expected one of {', '.join(FAMILIES)}")
        return v


class OutputsModel(_Strict):
    dir: str = "thermolam-out"
    spectrum_prefix: str = "spectrum"
    bands_file: str = "bands.csv"
    manifest_file: str = "manifest.json"


class PlotsModel(_Strict):
    enabled: bool = False
    k2i_window: float = Field(default=1.0, gt=0)


class RunConfig(_Strict):
    """Validated run configuration."""

    cell: CellModel
    sweep: SweepModel
    precision: Literal["double", "dd", "qd"] = "dd"
    adaptive_precision: bool = True
    bands: BandsModel = Field(default_factory=BandsModel)
    outputs: OutputsModel = Field(default_factory=OutputsModel)
    plots: PlotsModel = Field(default_factory=PlotsModel)

    def policy(self) -> PrecisionPolicy:
        return PrecisionPolicy(level=self.precision, adaptive=self.adaptive_precision)

    def omega_grid(self) -> tuple[float, ...]:
        vals = [float(v) for v in self.sweep.omega_values]
        for seg in self.sweep.omega_segments:
            vals.extend(float(v) for v in seg.values())
        return tuple(sorted(set(vals)))

    def build_cell(self) -> CellSpec:
        coeffs = {}
        for name, ph in self.cell.phases.items():
            coeffs[name] = derive_coefficients(PhaseInput(name=name, **ph.model_dump()))
        return CellSpec(tuple(LayerSpec(coeffs[l.phase], l.thickness) for l in self.cell.layers))

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            omega_star=self.omega_grid(), k1_star=self.sweep.k1_star,
            deltas=tuple(self.sweep.deltas), precision=self.policy(),
            eps_band=self.sweep.eps_band, cross_check=self.sweep.cross_check,
            workers=self.sweep.workers,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _loc(loc: tuple) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += ("." if out else "") + str(part)
    return out


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        where = _loc(tuple(p for p in e["loc"]))
        if e["type"] == "too_short" and e.get("ctx", {}).get("min_length") == 1:
            msg = "at least one"
        elif e["type"] == "extra_forbidden":
            msg = "unknown key"
        else:
            msg = e["msg"].removeprefix("Value error, ")
        lines.append(f"{where}: {msg}" if where else msg)
    return "; ".join(lines)


def validate_config(data: dict) -> RunConfig:
    """Schema and physical validation of an already parsed document.

    Raises
    ------
    ConfigError
        With the field path of the first schema violation, or the failed
        physical invariant (for example ``nu >= 0.5``).
    """
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    for name, ph in cfg.cell.phases.items():
        try:
            derive_coefficients(PhaseInput(name=name, **ph.model_dump()))
        except MaterialError as exc:
            raise ConfigError(f"cell.phases.{name}: {exc}") from None
    for i, layer in enumerate(cfg.cell.layers):
        if not (math.isfinite(layer.thickness) and layer.thickness > 0):
            raise ConfigError(f"cell.layers[{i}].thickness: must be positive (got {layer.thickness})")
    try:
        cfg.sweep_config()
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    return cfg


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return validate_config(data)


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Raises
    ------
    ConfigError
        Parse errors carry ``file:line:column``; schema errors the field
        path; physical errors the violated invariant.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read ({exc.strerror or exc})") from None
    return parse_config_text(text, str(p))


def bundled_config_path(name: str = BUNDLED_CONFIG) -> Path:
    return Path(str(resources.files("thermolam.data").joinpath(name)))


def load_bundled(name: str = BUNDLED_CONFIG) -> RunConfig:
    return parse_config(bundled_config_path(name))


def json_schema() -> dict:
    return RunConfig.model_json_schema()


__all__ = [
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "validate_config",
    "load_bundled",
    "bundled_config_path",
    "json_schema",
]
