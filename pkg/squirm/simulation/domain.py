"""Fluid mesh and initial body states of a (scaled) configuration"""
from typing import List
import logging

import numpy as np
from numpy.typing import NDArray

from squirm.config_builder import CIRCLE, OPALINA, SPHERE, BodyConfig, SimulationConfig
from squirm.exceptions import SimulationConfigException
from squirm.geometry.generators import axisymmetric_domain, circle_outline, planar_domain, sphere_meridian
from squirm.geometry.mesh import Mesh, read_mesh
from squirm.kinematics import BodyState, body_state, rotation_2d
from squirm.metachronal import OpalinaShape, opalina_outline
from squirm.simulation.scaling import Scales, scale_mesh


def body_outline(body: BodyConfig, h: float) -> NDArray[np.float64]:
    """Closed counter-clockwise outline of a planar body in its initial configuration"""
    shape = body.shape
    if shape.kind == CIRCLE:
        return circle_outline(body.x_c, float(shape.radius), h)  # type: ignore[arg-type]
    if shape.kind == OPALINA:
        outline = opalina_outline(OpalinaShape(a=shape.a, b=shape.b, eps=shape.eps), h)
        return outline @ rotation_2d(body.orientation).T + np.asarray(body.x_c)
    raise SimulationConfigException(f"Shape {shape.kind} of body {body.tag} has no planar outline")


def check_tags(mesh: Mesh, bodies: List[BodyConfig]) -> None:
    """Raises SimulationConfigException when a body tag is absent from the mesh"""
    present = set(mesh.body_tags())
    missing = [body.tag for body in bodies if body.tag not in present]
    if missing:
        raise SimulationConfigException(f"Body tags {missing} do not exist in the mesh, found {sorted(present)}")


def build_mesh(config: SimulationConfig, scales: Scales) -> Mesh:
    """Read the mesh file or generate the domain of a scaled configuration.

    Generated domains number the bodies 1..k in the order of their tags; h_near is divided by
    2^level.

    Raises:
        SimulationConfigException: missing domain sizes or tags absent from the mesh.
    """
    if config.mesh_file:
        mesh = scale_mesh(read_mesh(config.mesh_file), scales)
        check_tags(mesh, config.bodies)
        return mesh
    domain = config.domain
    if domain is None:
        raise SimulationConfigException("Either a domain section or a mesh_file is required")
    bodies = sorted(config.bodies, key=lambda body: body.tag)
    if [body.tag for body in bodies] != list(range(1, len(bodies) + 1)):
        raise SimulationConfigException("Generated domains need body tags 1..k")
    h_near = domain.h_near / 2**domain.level
    logging.info("Generating %s domain at level %d, h_near = %s", config.mode, domain.level, h_near)
    if config.axisymmetric:
        if domain.outer_radius is None:
            raise SimulationConfigException("An axisymmetric domain needs outer_radius")
        body = bodies[0]
        if body.shape.kind != SPHERE:
            raise SimulationConfigException("The axisymmetric domain is generated around a sphere")
        radius = float(body.shape.radius)  # type: ignore[arg-type]
        meridian = sphere_meridian(radius, h_near) + np.array([0.0, body.x_c[1]])
        meridian[[0, -1], 0] = 0.0
        mesh = axisymmetric_domain(
            float(body.shape.radius),  # type: ignore[arg-type]
            domain.outer_radius,
            h_near,
            domain.h_far,
            domain.growth,
            meridian=meridian,
        )
    else:
        if domain.extent is None:
            raise SimulationConfigException("A planar domain needs the box extent")
        outlines = [body_outline(body, h_near) for body in bodies]
        mesh = planar_domain(domain.extent, outlines, h_near, domain.h_far, domain.growth)
    check_tags(mesh, config.bodies)
    return mesh


def initial_bodies(config: SimulationConfig) -> List[BodyState]:
    """Initial configurations at rest, in the order of config.bodies"""
    return [body_state(body.x_c, body.orientation) for body in config.bodies]
