"""
Defines the SimulationConfigBuilder that builds the simulation configuration from a YAML file or
a named preset, plus command-line overrides.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, List, NamedTuple, Optional
import logging
import os

from pydantic import BaseModel, StrictInt, StrictStr, ValidationError, root_validator, validator
import yaml

from squirm.coupling.programs import METACHRONAL, PROGRAMS
from squirm.exceptions import SimulationConfigException
from squirm.fem.spaces import FAMILIES, MODES, P1P1_GLS, PLANAR
from squirm.geometry.chart import NORMAL_RULES
from squirm.metachronal import WaveParams

PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config")
PRESETS = ("sphere_verification", "circle_planar", "opalina", "opalina_pair")
STEPS_PER_PERIOD = 200
DEFAULT_STEPS = 100

CIRCLE = "circle"
SPHERE = "sphere"
OPALINA = "opalina"
SHAPES = (CIRCLE, SPHERE, OPALINA)


def _positive(name: str, val: Optional[float]) -> Optional[float]:
    if val is not None and not val > 0:
        raise ValueError(f"Invalid option {name}, positive value is expected, but {val} is found")
    return val


class BaseSimulationConfigBuilder(ABC):
    """Defines the simulation config builder."""

    @abstractmethod
    def get_config(self) -> Any:
        """Returns everything necessary to run a simulation."""


class FluidConfig(BaseModel):
    """Newtonian fluid"""

    mu: float
    rho: float = 0.0

    @validator("mu")
    def check_mu(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        return _positive("mu", val)  # type: ignore

    @validator("rho")
    def check_rho(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if val < 0:
            raise ValueError(f"Invalid option rho, non-negative value is expected, but {val} is found")
        return val


class TimeConfig(BaseModel):
    t_end: float
    dt: Optional[float] = None  # one wave period over 200, or t_end / 100 without waves

    @validator("t_end", "dt")
    def check_time(cls, val: Optional[float]) -> Optional[float]:  # pylint: disable=no-self-argument, no-self-use
        return _positive("time", val)


class ShapeConfig(BaseModel):
    """Body outline: circle (planar), sphere (axisymmetric) or the Opalina profile"""

    kind: StrictStr
    radius: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    eps: float = 0.0

    @validator("kind")
    def check_kind(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in SHAPES:
            raise ValueError(f"Invalid shape {val}, expected one of {SHAPES}")
        return val

    @validator("radius", "a", "b")
    def check_size(cls, val: Optional[float]) -> Optional[float]:  # pylint: disable=no-self-argument, no-self-use
        return _positive("shape size", val)

    @root_validator(skip_on_failure=True)
    def check_dimensions(cls, values):  # type: ignore  # pylint: disable=no-self-argument, no-self-use
        if values["kind"] in (CIRCLE, SPHERE) and values.get("radius") is None:
            raise ValueError(f"A {values['kind']} needs a radius")
        if values["kind"] == OPALINA and (values.get("a") is None or values.get("b") is None):
            raise ValueError("An opalina outline needs the semi-axes a and b")
        return values

    @property
    def size(self) -> float:
        """Radius or semi-major axis"""
        return float(self.radius if self.kind in (CIRCLE, SPHERE) else self.a)  # type: ignore


class BodyConfig(BaseModel):
    """One squirmer: mesh tag, outline, initial configuration and boundary program"""

    tag: StrictInt
    shape: ShapeConfig
    program: StrictStr
    params: Dict[str, Any] = {}
    x_c: List[float] = [0.0, 0.0]
    orientation: float = 0.0
    alpha: Optional[float] = None

    @validator("tag")
    def check_tag(cls, val: int) -> int:  # pylint: disable=no-self-argument, no-self-use
        if val < 1:
            raise ValueError(f"Body tags start at 1, but {val} is found")
        return val

    @validator("program")
    def check_program(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in PROGRAMS:
            raise ValueError(f"Invalid program {val}, expected one of {PROGRAMS}")
        return val

    @validator("x_c")
    def check_center(cls, val: List[float]) -> List[float]:  # pylint: disable=no-self-argument, no-self-use
        if len(val) != 2:
            raise ValueError(f"Body center needs 2 coordinates, but {len(val)} are found")
        return val

    @validator("alpha")
    def check_alpha(cls, val: Optional[float]) -> Optional[float]:  # pylint: disable=no-self-argument, no-self-use
        return _positive("alpha", val)


class DomainConfig(BaseModel):
    """Generated fluid domain; refinement level k divides h_near by 2^k"""

    h_near: float
    h_far: float
    growth: float = 0.3
    extent: Optional[List[float]] = None  # planar box xmin, xmax, ymin, ymax
    outer_radius: Optional[float] = None  # axisymmetric outer sphere
    level: int = 0

    @validator("h_near", "h_far", "growth", "outer_radius")
    def check_sizes(cls, val: Optional[float]) -> Optional[float]:  # pylint: disable=no-self-argument, no-self-use
        return _positive("domain size", val)

    @validator("extent")
    def check_extent(  # pylint: disable=no-self-argument, no-self-use
        cls, val: Optional[List[float]]
    ) -> Optional[List[float]]:
        if val is not None and (len(val) != 4 or val[0] >= val[1] or val[2] >= val[3]):
            raise ValueError(f"Invalid box extent {val}, expected xmin < xmax, ymin < ymax")
        return val

    @validator("level")
    def check_level(cls, val: int) -> int:  # pylint: disable=no-self-argument, no-self-use
        if val < 0:
            raise ValueError(f"Refinement level must be non-negative, but {val} is found")
        return val


class SolverConfig(BaseModel):
    tolerance: float = 1e-10  # relative residual of the direct solve
    picard_tolerance: float = 1e-8
    picard_max_iter: int = 50
    normal_rule: StrictStr = "average"
    projection: StrictStr = "svd"

    @validator("normal_rule")
    def check_normal_rule(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in NORMAL_RULES:
            raise ValueError(f"Invalid normal rule {val}, expected one of {NORMAL_RULES}")
        return val

    @validator("projection")
    def check_projection(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in ("svd", "iterative"):
            raise ValueError(f"Invalid projection {val}, expected svd or iterative")
        return val


class RemeshConfig(BaseModel):
    enabled: bool = True
    threshold: float = 0.2  # remesh when the minimum element quality drops below

    @validator("threshold")
    def check_threshold(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if not 0 < val < 1:
            raise ValueError(f"Remesh threshold must lie in (0, 1), but {val} is found")
        return val


class OutputConfig(BaseModel):
    directory: StrictStr = "output"
    every: int = 1  # steps between snapshots, 0 disables snapshots
    checkpoint_every: int = 0  # steps between checkpoints, 0 disables checkpoints

    @validator("every", "checkpoint_every")
    def check_cadence(cls, val: int) -> int:  # pylint: disable=no-self-argument, no-self-use
        if val < 0:
            raise ValueError(f"Output cadence must be non-negative, but {val} is found")
        return val


class ScalesConfig(BaseModel):
    """Reference scales of nondimensionalization, derived from the first body when absent"""

    length: Optional[float] = None
    velocity: Optional[float] = None

    @validator("length", "velocity")
    def check_scale(cls, val: Optional[float]) -> Optional[float]:  # pylint: disable=no-self-argument, no-self-use
        return _positive("scale", val)


class PartialConfigFromFile(BaseModel):  # pyre-ignore[13]: pydantic uninitialized variables
    """Simulation options read from a YAML file or preset."""

    mode: StrictStr = PLANAR
    element: StrictStr = P1P1_GLS
    fluid: FluidConfig
    time: TimeConfig
    domain: Optional[DomainConfig] = None
    mesh_file: Optional[StrictStr] = None
    bodies: List[BodyConfig]
    solver: SolverConfig = SolverConfig()
    remesh: RemeshConfig = RemeshConfig()
    output: OutputConfig = OutputConfig()
    scales: ScalesConfig = ScalesConfig()

    @validator("mode")
    def check_mode(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in MODES:
            raise ValueError(f"Invalid mode {val}, expected one of {MODES}")
        return val

    @validator("element")
    def check_element(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in FAMILIES:
            raise ValueError(f"Invalid element {val}, expected one of {FAMILIES}")
        return val

    @validator("bodies")
    def check_bodies(cls, val: List[BodyConfig]) -> List[BodyConfig]:  # pylint: disable=no-self-argument, no-self-use
        tags = [body.tag for body in val]
        if not tags:
            raise ValueError("At least one body is expected")
        if len(set(tags)) != len(tags):
            raise ValueError(f"Body tags must be unique, but {tags} are found")
        return val

    @root_validator(skip_on_failure=True)
    def check_geometry(cls, values):  # type: ignore  # pylint: disable=no-self-argument, no-self-use
        """Axisymmetric runs hold one sphere on the axis, planar runs circles or opalinas"""
        bodies = values["bodies"]
        if values["mode"] == PLANAR:
            if any(body.shape.kind == SPHERE for body in bodies):
                raise ValueError("Spheres need the axisymmetric mode")
        elif len(bodies) != 1 or bodies[0].shape.kind != SPHERE or bodies[0].x_c[0] != 0.0:
            raise ValueError("The axisymmetric mode holds exactly one sphere centered on the axis")
        return values


class Overrides(NamedTuple):
    """
    Command-line overrides of the configuration file
    """

    t_end: Optional[float] = None
    dt: Optional[float] = None
    output_directory: Optional[str] = None
    element: Optional[str] = None
    level: Optional[int] = None


class SimulationConfig(NamedTuple):  # pylint: disable=too-many-instance-attributes
    """Simulation configuration, in physical units."""

    mode: str  # planar or axisymmetric
    element: str  # P1P1_GLS or P2P1
    fluid: FluidConfig  # viscosity and density
    dt: float  # time step
    t_end: float  # final time
    domain: Optional[DomainConfig]  # generated domain, or None with mesh_file
    mesh_file: Optional[str]  # plain-text mesh, or None with domain
    bodies: List[BodyConfig]  # one section per squirmer
    solver: SolverConfig  # tolerances
    remesh: RemeshConfig  # quality threshold
    output: OutputConfig  # directory and cadence
    scales: ScalesConfig  # reference length and velocity

    @property
    def axisymmetric(self) -> bool:
        return self.mode != PLANAR

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def wave_period(bodies: List[BodyConfig]) -> Optional[float]:
    """Period of the first metachronal wave, if any"""
    for body in bodies:
        if body.program == METACHRONAL:
            try:
                wave = WaveParams(**{k: v for k, v in body.params.items() if k != "origin"})
            except ValidationError as ex:
                raise SimulationConfigException(f"Invalid wave of body {body.tag}", ex) from ex
            return wave.period
    return None


class SimulationConfigBuilder(BaseSimulationConfigBuilder):
    """Builds the simulation config from a file or preset and overrides."""

    def __init__(self) -> None:
        self.config: Dict[str, Any] = {}

    def from_file(self, config_path: str) -> "SimulationConfigBuilder":
        """build config options from config file"""
        try:
            with open(config_path, "r", encoding="utf-8") as config_file:
                data = yaml.safe_load(config_file)
        except (OSError, yaml.YAMLError) as ex:
            raise SimulationConfigException(f"Cannot read configuration {config_path}", ex) from ex
        if not isinstance(data, dict):
            raise SimulationConfigException("Invalid data in the simulation configuration YAML file")

        try:
            partial_config_from_file = PartialConfigFromFile(**data)
        except ValidationError as ex:
            msg = "Invalid simulation configuration: an option from file is missing or invalid"
            raise SimulationConfigException(msg, ex) from ex
        self.config.update(partial_config_from_file.dict(exclude={"time"}))
        self.config["t_end"] = partial_config_from_file.time.t_end
        self.config["dt"] = partial_config_from_file.time.dt
        return self

    def from_preset(self, name: str) -> "SimulationConfigBuilder":
        """build config options from a shipped preset"""
        if name not in PRESETS:
            raise SimulationConfigException(f"Unknown preset '{name}', expected one of {PRESETS}")
        return self.from_file(os.path.join(PRESET_DIR, f"{name}.yaml"))

    def from_overrides(self, overrides: Overrides) -> "SimulationConfigBuilder":
        """Override config options supplied from other builder steps"""
        supplied = {k: v for k, v in overrides._asdict().items() if v is not None}
        if "output_directory" in supplied:
            self.config.setdefault("output", {})["directory"] = supplied.pop("output_directory")
        if "level" in supplied:
            if self.config.get("domain") is None:
                raise SimulationConfigException("Refinement level given for a configuration without domain")
            self.config["domain"]["level"] = supplied.pop("level")
        self.config.update(supplied)
        return self

    def get_config(self) -> SimulationConfig:
        """Get the simulation configuration.

        Raises:
            SimulationConfigException: missing sections or violated invariants.
        """
        missing = [key for key in ("mode", "element", "fluid", "bodies", "t_end") if key not in self.config]
        if missing:
            raise SimulationConfigException(f"Invalid simulation configuration: missing {missing}")
        if self.config.get("domain") is None and not self.config.get("mesh_file"):
            raise SimulationConfigException("Either a domain section or a mesh_file is required")
        try:
            partial = PartialConfigFromFile(
                time=TimeConfig(t_end=self.config["t_end"], dt=self.config.get("dt")),
                **{k: v for k, v in self.config.items() if k not in ("t_end", "dt")},
            )
        except ValidationError as ex:
            raise SimulationConfigException("Invalid simulation configuration after overrides", ex) from ex

        dt = partial.time.dt
        if dt is None:
            period = wave_period(partial.bodies)
            dt = period / STEPS_PER_PERIOD if period else partial.time.t_end / DEFAULT_STEPS
            logging.info("Time step defaults to %s", dt)
        if partial.time.t_end < dt * (1.0 - 1e-12):
            raise SimulationConfigException(f"t_end = {partial.time.t_end} is shorter than dt = {dt}")
        return SimulationConfig(
            mode=partial.mode,
            element=partial.element,
            fluid=partial.fluid,
            dt=dt,
            t_end=partial.time.t_end,
            domain=partial.domain,
            mesh_file=partial.mesh_file,
            bodies=partial.bodies,
            solver=partial.solver,
            remesh=partial.remesh,
            output=partial.output,
            scales=partial.scales,
        )
