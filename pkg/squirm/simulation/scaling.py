"""
Nondimensionalization of a simulation configuration.

Inputs are given in physical units. Lengths are scaled by L_ref (radius or semi-major axis of the
first body), velocities by U_ref (B1 of a Blake program, omega K of a metachronal wave) and
stresses by mu U_ref / L_ref, so the scaled viscosity is 1 and the scaled density is the
Reynolds number rho U_ref L_ref / mu.
"""
from typing import Any, Dict, NamedTuple
import logging

import numpy as np

from squirm.config_builder import BodyConfig, SimulationConfig
from squirm.coupling.programs import BLAKE_FORCE, BLAKE_SLIP, METACHRONAL
from squirm.geometry.mesh import Mesh

# wave parameters with the dimension of a length, and of an inverse length
WAVE_LENGTHS = ("K", "L", "envelope_length")
WAVE_WAVENUMBERS = ("k",)


class Scales(NamedTuple):
    length: float  # L_ref
    velocity: float  # U_ref
    viscosity: float  # mu
    axisymmetric: bool

    @property
    def time(self) -> float:
        return self.length / self.velocity

    @property
    def stress(self) -> float:
        """Scale of pressure and force density"""
        return self.viscosity * self.velocity / self.length

    @property
    def power(self) -> float:
        """mu U^2 per unit depth in the plane, mu U^2 L for the axisymmetric body"""
        exponent = 1 if self.axisymmetric else 0
        return self.viscosity * self.velocity**2 * self.length**exponent

    def reynolds(self, density: float) -> float:
        return density * self.velocity * self.length / self.viscosity


def characteristic_velocity(body: BodyConfig) -> float:
    """U_ref of a body: |B1| (|B2| when B1 = 0) for Blake programs, omega K for waves, else 1"""
    params = body.params
    if body.program in (BLAKE_SLIP, BLAKE_FORCE):
        velocity = abs(float(params.get("B1", 0.0))) or abs(float(params.get("B2", 0.0)))
    elif body.program == METACHRONAL:
        velocity = abs(float(params.get("omega", 0.0)) * float(params.get("K", 0.0)))
    else:
        velocity = 0.0
    if velocity == 0.0:
        logging.warning("Body %d has no characteristic velocity, U_ref defaults to 1", body.tag)
        return 1.0
    return velocity


def reference_scales(config: SimulationConfig) -> Scales:
    """Scales from the scales section, falling back to the first body"""
    first = config.bodies[0]
    length = config.scales.length or first.shape.size
    velocity = config.scales.velocity or characteristic_velocity(first)
    return Scales(float(length), float(velocity), float(config.fluid.mu), config.axisymmetric)


def scale_params(program: str, params: Dict[str, Any], scales: Scales) -> Dict[str, Any]:
    """Program parameters in scaled units"""
    scaled = dict(params)
    if program in (BLAKE_SLIP, BLAKE_FORCE):
        for name in ("B1", "B2"):
            if name in scaled:
                scaled[name] = float(scaled[name]) / scales.velocity
        if "R" in scaled:
            scaled["R"] = float(scaled["R"]) / scales.length
    elif program == METACHRONAL:
        for name in WAVE_LENGTHS:
            if scaled.get(name) is not None:
                scaled[name] = float(scaled[name]) / scales.length
        for name in WAVE_WAVENUMBERS:
            if name in scaled:
                scaled[name] = float(scaled[name]) * scales.length
        if "omega" in scaled:
            scaled["omega"] = float(scaled["omega"]) * scales.time
        if "origin" in scaled:
            scaled["origin"] = [float(v) / scales.length for v in scaled["origin"]]
    return scaled


def _scaled_body(body: BodyConfig, scales: Scales) -> BodyConfig:
    shape_update = {
        name: getattr(body.shape, name) / scales.length
        for name in ("radius", "a", "b", "eps")
        if getattr(body.shape, name) is not None
    }
    return body.copy(
        update={
            "shape": body.shape.copy(update=shape_update),
            "params": scale_params(body.program, body.params, scales),
            "x_c": [v / scales.length for v in body.x_c],
        }
    )


def nondimensional_config(config: SimulationConfig, scales: Scales) -> SimulationConfig:
    """The configuration in scaled units; the mesh file, if any, is scaled when read"""
    domain = config.domain
    if domain is not None:
        update: Dict[str, Any] = {"h_near": domain.h_near / scales.length, "h_far": domain.h_far / scales.length}
        if domain.extent is not None:
            update["extent"] = [v / scales.length for v in domain.extent]
        if domain.outer_radius is not None:
            update["outer_radius"] = domain.outer_radius / scales.length
        domain = domain.copy(update=update)
    reynolds = scales.reynolds(config.fluid.rho)
    logging.info(
        "Scales: L = %s, U = %s, T = %s, Re = %s", scales.length, scales.velocity, scales.time, reynolds
    )
    return config._replace(
        fluid=config.fluid.copy(update={"mu": 1.0, "rho": reynolds}),
        dt=config.dt / scales.time,
        t_end=config.t_end / scales.time,
        domain=domain,
        bodies=[_scaled_body(body, scales) for body in config.bodies],
    )


def scale_mesh(mesh: Mesh, scales: Scales) -> Mesh:
    """Mesh given in physical units to scaled units"""
    return mesh._replace(
        nodes=np.asarray(mesh.nodes, dtype=float) / scales.length,
        mesh_velocity=np.asarray(mesh.mesh_velocity, dtype=float) / scales.velocity,
    )
