"""Scenario files: strict pydantic schema, TOML load/dump, and domain conversion."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import tomli
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .control import Gains
from .cvt import ConfigError, LloydParams, Region
from .detect import DetectionParams
from .world import Barrier, Building, Obstacle

SCHEMA_VERSION = 1

Triple = tuple[float, float, float]
DiagGain = Union[float, Triple]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GainsModel(_Strict):
    """Diagonal gains are a scalar (isotropic) or a 3-list of the diagonal."""

    K_p: DiagGain = Field((3.0, 3.0, 3.0), description="formation position gain, 1/s^2")
    K_v: DiagGain = Field((5.0, 5.0, 5.0), description="formation velocity gain, 1/s")
    k_c1: DiagGain = Field((1.0, 1.0, 1.0), description="collision spring gain, m^3/s^2")
    k_c2: DiagGain = Field((1.0, 1.0, 1.0), description="collision damper gain, 1/s")
    k_v: DiagGain = Field((0.1, 0.5, 0.1), description="obstacle translational scaling, -")
    k_r: float = Field(0.5, description="rotational potential gain, 1/s^2")
    k_o1: DiagGain = Field(5.0, description="obstacle repulsion gain, 1/s^2")
    k_o2: DiagGain = Field(1.0, description="obstacle damping gain, 1/s")

    def to_gains(self) -> Gains:
        return Gains(**{k: np.asarray(v, dtype=float) if k != "k_r" else v
                        for k, v in self.model_dump().items()})


class DetectionModel(_Strict):
    r_d: float = Field(2.0, description="detection range, m")
    r_s: float = Field(1.0, description="safety range, m")
    theta_fov_deg: float = Field(60.0, description="FOV half-angle, degrees")
    fov_combine: Literal["and", "or"] = "and"
    neighbor_radius: Optional[float] = Field(None, description="collision activation radius, m (default r_d)")
    collision_literal_trigger: bool = Field(False, description="activate collision only inside r_s")

    @model_validator(mode="after")
    def _check(self):
        if not 0 < self.r_s < self.r_d:
            raise ValueError(f"need 0 < r_s < r_d (got r_s={self.r_s}, r_d={self.r_d})")
        if not 0 < self.theta_fov_deg < 180:
            raise ValueError("theta_fov_deg must be in (0, 180)")
        if self.neighbor_radius is not None and self.neighbor_radius <= self.r_s:
            raise ValueError("neighbor_radius must exceed r_s")
        return self

    def to_params(self) -> DetectionParams:
        return DetectionParams(self.r_d, self.r_s, math.radians(self.theta_fov_deg), self.fov_combine)

    @property
    def activation_radius(self) -> float:
        return self.r_d if self.neighbor_radius is None else self.neighbor_radius


class InitModel(_Strict):
    """Gaussian initial (x, y) positions at height ``z``, agents at rest."""

    mean: tuple[float, float] = (0.0, 0.0)
    covariance: Union[float, tuple[tuple[float, float], tuple[float, float]]] = 1.0
    z: float = 0.0
    seed: Optional[int] = Field(None, ge=0, description="defaults to the scenario seed")
    min_separation: float = Field(0.0, ge=0, description="redraw the whole set until all pairs are this far apart, m")
    max_attempts: int = Field(10_000, ge=1)

    def cov_matrix(self) -> np.ndarray:
        c = np.asarray(self.covariance, dtype=float)
        return c * np.eye(2) if c.ndim == 0 else c


class LloydModel(_Strict):
    a1: float = 0.5
    a2: float = 0.5
    b1: float = 0.5
    b2: float = 0.5
    s_num: Optional[int] = Field(None, ge=1, description="samples per iteration (default 100 N)")
    max_iter: int = Field(500, ge=1)
    move_tol: float = Field(1e-3, ge=0, description="m")
    stall_rtol: float = Field(2e-3, ge=0)
    seed: Optional[int] = Field(None, ge=0, description="defaults to scenario seed + 1")
    assignment: Literal["optimal", "greedy"] = "optimal"
    retessellate_every: float = Field(0.0, ge=0, description="s; 0 keeps the t=0 pattern")

    @model_validator(mode="after")
    def _check(self):
        if abs(self.a1 + self.a2 - 1) > 1e-12 or abs(self.b1 + self.b2 - 1) > 1e-12:
            raise ValueError("Lloyd constants must satisfy a1 + a2 = 1 and b1 + b2 = 1")
        if self.a2 <= 0 or self.b2 <= 0:
            raise ValueError("Lloyd constants a2 and b2 must be positive")
        return self


class BarrierModel(_Strict):
    extents: tuple[float, float, float, float] = Field(description="x_min, x_max, y_min, y_max in m")
    altitude: float = Field(5.0, description="m")
    velocity: Triple = Field((1.0, 0.0, 0.0), description="m/s")
    motion_start: float = Field(0.0, ge=0, description="s")

    @model_validator(mode="after")
    def _check(self):
        x0, x1, y0, y1 = self.extents
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"barrier extents must have min < max: {self.extents}")
        return self


class ObstacleModel(_Strict):
    center: Triple
    radius: float = Field(1.0, ge=0, description="m")
    velocity: Triple = (0.0, 0.0, 0.0)
    activation_time: float = Field(0.0, ge=0, description="s")


class BuildingModel(_Strict):
    min: Triple
    max: Triple

    @model_validator(mode="after")
    def _check(self):
        if not all(a < b for a, b in zip(self.min, self.max)):
            raise ValueError(f"building min corner must be < max corner: {self.min} vs {self.max}")
        return self


class SimConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "scenario"
    dt: float = Field(0.1, gt=0, description="s")
    duration: float = Field(145.0, description="s")
    mode: Literal["planar", "3d"] = "planar"
    n_agents: int = Field(ge=1)
    seed: int = Field(0, ge=0)
    world_bounds: tuple[Triple, Triple] = Field(
        ((-1e3, -1e3, -1e3), (1e3, 1e3, 1e3)), description="divergence box, m")
    init: InitModel = InitModel()
    gains: GainsModel = GainsModel()
    detection: DetectionModel = DetectionModel()
    lloyd: LloydModel = LloydModel()
    barrier: BarrierModel
    obstacles: list[ObstacleModel] = []
    buildings: list[BuildingModel] = []

    @model_validator(mode="after")
    def _check(self):
        if self.duration < self.dt:
            raise ValueError("duration must be >= dt")
        lo, hi = self.world_bounds
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("world_bounds min corner must be < max corner")
        return self

    @property
    def n_steps(self) -> int:
        """Logged steps including t = 0."""
        return int(round(self.duration / self.dt)) + 1

    @property
    def init_seed(self) -> int:
        return self.seed if self.init.seed is None else self.init.seed

    @property
    def lloyd_seed(self) -> int:
        return self.seed + 1 if self.lloyd.seed is None else self.lloyd.seed

    def region(self) -> Region:
        x0, x1, y0, y1 = self.barrier.extents
        return Region((x0, y0), (x1, y1))

    def lloyd_params(self, seed: int | None = None) -> LloydParams:
        m = self.lloyd
        return LloydParams(n=self.n_agents, s_num=m.s_num, a1=m.a1, a2=m.a2, b1=m.b1, b2=m.b2,
                           max_iter=m.max_iter, move_tol=m.move_tol, stall_rtol=m.stall_rtol,
                           rng_seed=self.lloyd_seed if seed is None else seed)

    def barrier_obj(self, targets=None) -> Barrier:
        b = self.barrier
        return Barrier(b.extents, b.altitude, np.array(b.velocity),
                       np.zeros((0, 2)) if targets is None else targets, b.motion_start)

    def obstacle_objs(self) -> list[Obstacle]:
        return [Obstacle(k, np.array(o.center), o.radius, np.array(o.velocity), o.activation_time)
                for k, o in enumerate(self.obstacles)]

    def building_objs(self) -> list[Building]:
        return [Building(np.array(b.min), np.array(b.max)) for b in self.buildings]

    def with_overrides(self, **changes) -> "SimConfig":
        return SimConfig.model_validate({**self.model_dump(), **changes})


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_strip_none(v) for v in obj]
    return obj


def dumps(config: SimConfig) -> str:
    return tomli_w.dumps(_strip_none(config.model_dump()))


def loads(text: str) -> SimConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"scenario is not valid TOML: {exc}") from exc
    try:
        return SimConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def load(path) -> SimConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(config: SimConfig, path) -> None:
    Path(path).write_text(dumps(config), encoding="utf-8")


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "invalid scenario: " + "; ".join(parts)


def schema() -> dict:
    return SimConfig.model_json_schema()


__all__ = ["SimConfig", "GainsModel", "DetectionModel", "InitModel", "LloydModel", "BarrierModel",
           "ObstacleModel", "BuildingModel", "load", "loads", "dumps", "save",
           "schema", "SCHEMA_VERSION"]
