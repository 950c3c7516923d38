"""Boundary programs: the interface condition of a squirmer as a function of its state and time"""
from abc import ABC, abstractmethod
from typing import Any, Dict, NamedTuple, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from pydantic import ValidationError

from squirm.coupling.conditions import TYPE_I, TYPE_II, Condition, ForceCondition, SlipCondition
from squirm.exceptions import SimulationConfigException
from squirm.fem.spaces import BodyBoundary
from squirm.kinematics import BodyState, rigid_position
from squirm.metachronal import (
    SECOND_ORDER,
    WaveParams,
    drag_coefficient,
    envelope_velocity,
    invert_envelope,
)
from squirm.verification.exact import BlakeCoefficients

PASSIVE = "passive"
BLAKE_SLIP = "blake_slip"
BLAKE_FORCE = "blake_force"
METACHRONAL = "metachronal"
PROGRAMS = (PASSIVE, BLAKE_SLIP, BLAKE_FORCE, METACHRONAL)

# coefficient of B2 in the type-II Blake force, (mu / R)(2 B1 + c B2 cos(theta))
SPHERE_FORCE_B2 = 5.0
CIRCLE_FORCE_B2 = 4.0
AXIAL = np.array([0.0, 1.0])


class BoundaryProgram(ABC):
    """Interface data of one squirmer"""

    @property
    @abstractmethod
    def kind(self) -> str:
        """TYPE_I (slip) or TYPE_II (force)"""

    @abstractmethod
    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        """Nodal slip or force data on the boundary at time t"""


class SquirmerSpec(NamedTuple):
    tag: int  # body tag in the mesh
    program: BoundaryProgram
    alpha: Optional[float] = None  # type-II normal-row scale, mean diagonal of A when None

    @property
    def kind(self) -> str:
        return self.program.kind


def swimming_axis(state: BodyState, axis: NDArray[np.float64], axisymmetric: bool) -> NDArray[np.float64]:
    """Body-frame axis carried to the current orientation"""
    if axisymmetric:
        return AXIAL
    return state.rotation() @ axis


def _tangential(vectors: NDArray[np.float64], boundary: BodyBoundary) -> NDArray[np.float64]:
    along = np.einsum("md,md->m", vectors, boundary.tangents)
    return along[:, None] * boundary.tangents


class PassiveProgram(BoundaryProgram):
    """Zero slip: a rigid particle without activity"""

    @property
    def kind(self) -> str:
        return TYPE_I

    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        return SlipCondition(np.zeros_like(boundary.points))


class _BlakeProgram(BoundaryProgram, ABC):
    def __init__(
        self, coefficients: BlakeCoefficients, axisymmetric: bool, axis: Sequence[float] = (1.0, 0.0)
    ) -> None:
        self.coefficients = coefficients
        self.axisymmetric = axisymmetric
        axis_array = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis_array)
        if axis_array.shape != (2,) or norm == 0:
            raise SimulationConfigException(f"Invalid swimming axis {axis}")
        self.axis = axis_array / norm

    def _geometry(self, boundary: BodyBoundary, state: BodyState):  # type: ignore
        """cos(theta) and the tangential part of cos(theta) e_r - e at every node"""
        e = swimming_axis(state, self.axis, self.axisymmetric)
        rel = boundary.points - state.x_c
        e_r = rel / np.linalg.norm(rel, axis=1)[:, None]
        cos = e_r @ e
        return cos, _tangential(cos[:, None] * e_r - e, boundary)


class BlakeSlipProgram(_BlakeProgram):
    """u_s = (B1 + B2 cos(theta)) sin(theta) tau_b"""

    @property
    def kind(self) -> str:
        return TYPE_I

    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        cos, direction = self._geometry(boundary, state)
        c = self.coefficients
        return SlipCondition((c.B1 + c.B2 * cos)[:, None] * direction)


class BlakeForceProgram(_BlakeProgram):
    """f_s = (mu / R)(2 B1 + c B2 cos(theta)) sin(theta) tau_b, reproducing the Blake slip"""

    def __init__(
        self,
        coefficients: BlakeCoefficients,
        mu: float,
        axisymmetric: bool,
        axis: Sequence[float] = (1.0, 0.0),
    ) -> None:
        super().__init__(coefficients, axisymmetric, axis)
        self.mu = mu

    @property
    def kind(self) -> str:
        return TYPE_II

    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        cos, direction = self._geometry(boundary, state)
        c = self.coefficients
        factor = SPHERE_FORCE_B2 if self.axisymmetric else CIRCLE_FORCE_B2
        magnitude = (self.mu / c.R) * (2.0 * c.B1 + factor * c.B2 * cos)
        return ForceCondition(magnitude[:, None] * direction, np.zeros(cos.shape))


class MetachronalProgram(BoundaryProgram):
    """Ciliary envelope driven by a metachronal wave from the origin tip of the body.

    The meridian coordinate runs from the boundary node nearest to the origin along both halves
    of a closed contour (along the chain of an axisymmetric meridian), and the slip or force
    points in its increasing direction.
    """

    def __init__(self, wave: WaveParams, origin: Sequence[float], mu: float) -> None:
        self.wave = wave
        self.origin = np.asarray(origin, dtype=float)
        self.mu = mu

    @property
    def kind(self) -> str:
        return self.wave.mode

    def meridian(self, boundary: BodyBoundary, state: BodyState):  # type: ignore
        """Meridian coordinate, its length and the unit direction of increase at every node"""
        origin = rigid_position(state, self.origin, np.zeros(2))
        anchor = int(np.argmin(np.linalg.norm(boundary.points - origin, axis=1)))
        shift = boundary.arc - boundary.arc[anchor]
        if boundary.closed:
            ccw = np.mod(shift, boundary.perimeter)
            lower = ccw > 0.5 * boundary.perimeter
            sigma = np.where(lower, boundary.perimeter - ccw, ccw)
            sense = np.where(lower, -1.0, 1.0)
            length = 0.5 * boundary.perimeter
        else:
            sigma = np.abs(shift)
            sense = np.where(shift < 0, -1.0, 1.0)
            length = boundary.perimeter
        return sigma, length, sense[:, None] * boundary.tangents

    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        sigma, length, direction = self.meridian(boundary, state)
        wave = self.wave
        if wave.envelope_length is None:
            wave = wave.copy(update={"envelope_length": length})
        material = invert_envelope(sigma, t, wave) if wave.order == SECOND_ORDER else sigma
        u_env = envelope_velocity(material, t, wave)
        if wave.mode == TYPE_I:
            return SlipCondition(u_env[:, None] * direction)
        factor = drag_coefficient(wave, self.mu)
        return ForceCondition(factor * u_env[:, None] * direction, np.full(sigma.shape, factor))


def create_program(name: str, params: Dict[str, Any], axisymmetric: bool, mu: float) -> BoundaryProgram:
    """Build a boundary program from its configuration section.

    Args:
        name: one of passive, blake_slip, blake_force, metachronal
        params: program parameters; Blake programs take B1, B2, R and axis, metachronal programs
            take the wave parameters and origin
        axisymmetric: meridian mode
        mu: fluid viscosity in the units of params
    Raises:
        SimulationConfigException: unknown program or invalid parameters.
    """
    params = dict(params)
    try:
        if name == PASSIVE:
            return PassiveProgram()
        if name in (BLAKE_SLIP, BLAKE_FORCE):
            axis = params.pop("axis", (1.0, 0.0))
            coefficients = BlakeCoefficients(**params)
            if name == BLAKE_SLIP:
                return BlakeSlipProgram(coefficients, axisymmetric, axis)
            return BlakeForceProgram(coefficients, mu, axisymmetric, axis)
        if name == METACHRONAL:
            origin = params.pop("origin", None)
            if origin is None:
                raise SimulationConfigException("Metachronal program needs the wave origin")
            return MetachronalProgram(WaveParams(**params), origin, mu)
    except ValidationError as ex:
        raise SimulationConfigException(f"Invalid parameters of program '{name}'", ex) from ex
    raise SimulationConfigException(f"Unknown boundary program '{name}', expected one of {PROGRAMS}")
