"""Run configuration: YAML file, schema validation, unit conversion.

Lengths in the file carry their unit in the key name (``_cm``, ``_um``,
``_nm``, ``_deg``) and are converted to metres and radians once, here. Any
key left out falls back to the desk-scale preset, and unknown keys are
rejected. Validation errors name the offending key and its line in the file.

Example (the desk preset written out in full)::

    geometry: {p_cm: 3.0, d_cm: 5.0, aperture_w_cm: 0.26, aperture_h_cm: 0.195,
               diffuser_w_cm: 1.0, diffuser_h_cm: 1.0}
    channels:
      - {name: red, lambda_record_nm: 639, lambda_replay_nm: 636, q_cm: 15}
      - {name: green, lambda_record_nm: 532, lambda_replay_nm: 528, q_cm: 50}
      - {name: blue, lambda_record_nm: 457, lambda_replay_nm: 449, q_cm: 100}
    grid: {nx: 1024, ny: 1024, pitch_um: 4.0}
    scene: {image: null, letter_scale: 2, random_phase_seed: null}
    simulate: {distances_cm: [15, 50, 100], theta_deg: 0.0}
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .paraxial import SystemGeometry, WavelengthChannel

CM = 1e-2
UM = 1e-6
NM = 1e-9


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Strict):
    p_cm: float = Field(3.0, gt=0)
    d_cm: float = Field(5.0, gt=0)
    aperture_w_cm: float = Field(0.26, gt=0)
    aperture_h_cm: float = Field(0.195, gt=0)
    diffuser_w_cm: float = Field(1.0, gt=0)
    diffuser_h_cm: float = Field(1.0, gt=0)


class HoeOverride(_Strict):
    r0_cm: Optional[float] = Field(None, gt=0)
    theta_deg: Optional[float] = Field(None, gt=-90, lt=90)
    aperture_w_cm: Optional[float] = Field(None, gt=0)
    aperture_h_cm: Optional[float] = Field(None, gt=0)


class ChannelConfig(_Strict):
    name: str
    lambda_record_nm: float = Field(gt=100, lt=10000)
    lambda_replay_nm: float = Field(gt=100, lt=10000)
    q_cm: float = Field(gt=0)
    hoe: HoeOverride = HoeOverride()


def _desk_channels():
    return [
        ChannelConfig(name="red", lambda_record_nm=639, lambda_replay_nm=636, q_cm=15),
        ChannelConfig(name="green", lambda_record_nm=532, lambda_replay_nm=528, q_cm=50),
        ChannelConfig(name="blue", lambda_record_nm=457, lambda_replay_nm=449, q_cm=100),
    ]


class GridConfig(_Strict):
    nx: int = Field(1024, ge=2)
    ny: int = Field(1024, ge=2)
    pitch_um: float = Field(4.0, gt=0)


class SceneConfig(_Strict):
    image: Optional[str] = None
    letter_scale: int = Field(2, ge=1)
    random_phase_seed: Optional[int] = None


class SimulateConfig(_Strict):
    distances_cm: list[float] = Field(default_factory=lambda: [15.0, 50.0, 100.0], min_length=1)
    theta_deg: float = Field(0.0, gt=-90, lt=90)

    @model_validator(mode="after")
    def _positive(self):
        if any(z <= 0 for z in self.distances_cm):
            raise ValueError("distances_cm must all be positive")
        return self


class DesignConfig(_Strict):
    sweep_points: int = Field(20, ge=0)
    sweep_axis: Literal["w", "h"] = "w"


class SweepConfig(_Strict):
    axis: Literal["lambda", "theta"] = "lambda"
    start: float = -10.0
    stop: float = 10.0
    points: int = Field(201, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop < self.start:
            raise ValueError("sweep stop must not be below start")
        if self.points == 1 and self.stop != self.start:
            raise ValueError("a single-point sweep needs start == stop")
        return self


class TransmittanceConfig(_Strict):
    t_glass: float = Field(ge=0, le=1)
    t_layer: float = Field(ge=0, le=1)
    n_layers: int = Field(ge=0)


class GratingConfig(_Strict):
    """Volume-grating study. ``sweep`` offsets are in nm (lambda) or degrees (theta)."""

    n0: float = Field(1.5, ge=1)
    thickness_um: float = Field(16.0, gt=0)
    grating_tilt_deg: float = 22.5
    theta0_deg: float = -22.5
    nu: Optional[float] = Field(None, ge=0)
    eta_measured: float = Field(0.752, gt=0, lt=1)
    sweep: SweepConfig = SweepConfig()
    compensation: bool = True
    transmittance: Optional[TransmittanceConfig] = TransmittanceConfig(
        t_glass=0.90, t_layer=0.88, n_layers=3)


class RunConfig(_Strict):
    geometry: GeometryConfig = GeometryConfig()
    channels: list[ChannelConfig] = Field(default_factory=_desk_channels)
    grid: GridConfig = GridConfig()
    scene: SceneConfig = SceneConfig()
    simulate: SimulateConfig = SimulateConfig()
    design: DesignConfig = DesignConfig()
    grating: GratingConfig = GratingConfig()
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _channels(self):
        if not self.channels:
            raise ValueError("at least one channel is required")
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        return self

    # conversions to internal SI types

    def system_geometry(self, unit: float = 1.0) -> SystemGeometry:
        """Geometry with lengths in ``unit`` metres (metres by default, ``CM`` for cm)."""
        g = self.geometry
        s = CM / unit
        return SystemGeometry(g.p_cm * s, g.d_cm * s, g.aperture_w_cm * s, g.aperture_h_cm * s,
                              g.diffuser_w_cm * s, g.diffuser_h_cm * s)

    def wavelength_channels(self, unit: float = 1.0) -> list[WavelengthChannel]:
        """Channels with ``q`` in the given length unit (metres by default)."""
        return [WavelengthChannel(c.name, c.lambda_record_nm, c.lambda_replay_nm,
                                  c.q_cm * CM / unit) for c in self.channels]

    def distances(self) -> list[float]:
        return [z * CM for z in self.simulate.distances_cm]


def _line_index(node, path=(), out=None):
    """Map key paths to 1-based source lines of a composed YAML node tree."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark.line + 1
            _line_index(v, key, out)
            out[key] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


def _format_errors(exc: ValidationError, lines: dict, source: str) -> str:
    msgs = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        line = None
        for n in range(len(loc), -1, -1):
            if loc[:n] in lines:
                line = lines[loc[:n]]
                break
        where = ".".join(str(p) for p in loc) or "<root>"
        prefix = f"{source}:{line}" if line else source
        msgs.append(f"{prefix}: {where}: {err['msg']}")
    return "\n".join(msgs)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML error: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, _line_index(node) if node else {}, source)) from exc


def load_config(path=None) -> RunConfig:
    """Read and validate a config file; ``None`` gives the desk preset."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(), sort_keys=False)
