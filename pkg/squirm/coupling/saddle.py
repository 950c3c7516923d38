"""The coupled saddle-point system in (s | U | P | lambda) and its solution"""
from typing import List, NamedTuple

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp

from squirm.coupling.surgery import CoupledSystem
from squirm.exceptions import CouplingException
from squirm.linalg import DEFAULT_RESIDUAL_TOLERANCE, solve_direct


class SaddleSystem(NamedTuple):
    matrix: sp.csr_matrix
    rhs: NDArray[np.float64]
    n_s: int
    n_u: int
    n_p: int


class SaddleSolution(NamedTuple):
    s: List[NDArray[np.float64]]  # velocity array of every body
    U: NDArray[np.float64]  # (n_u,) interleaved nodal velocities
    P: NDArray[np.float64]  # (n_p,) vertex pressures
    multiplier: float  # Lagrange multiplier of the pressure mean


def _check_shape(name: str, block: sp.spmatrix, shape) -> None:  # type: ignore
    if block.shape != shape:
        raise CouplingException(f"Block {name} has shape {block.shape}, expected {shape}")


def assemble_saddle(coupled: CoupledSystem) -> SaddleSystem:
    """Stack the surgered blocks into one square sparse system.

    Row blocks: momentum (-H | A | G | 0), body balance (0 | S | T | 0),
    continuity (0 | D | E | m), pressure mean (0 | 0 | m^T | 0).

    Raises:
        CouplingException: inconsistent block dimensions.
    """
    n_u, n_p = coupled.G.shape
    n_s = coupled.H.shape[1]
    _check_shape("A", coupled.A, (n_u, n_u))
    _check_shape("H", coupled.H, (n_u, n_s))
    _check_shape("S", coupled.S, (n_s, n_u))
    _check_shape("T", coupled.T, (n_s, n_p))
    _check_shape("D", coupled.D, (n_p, n_u))
    _check_shape("E", coupled.E, (n_p, n_p))
    loads = (("F", coupled.F, n_u), ("B", coupled.B, n_s), ("G_rhs", coupled.G_rhs, n_p), ("mean", coupled.mean, n_p))
    for name, vector, size in loads:
        if np.shape(vector) != (size,):
            raise CouplingException(f"Vector {name} has shape {np.shape(vector)}, expected ({size},)")

    mean_col = sp.csr_matrix(coupled.mean.reshape(-1, 1))
    rows = [
        [coupled.A, coupled.G, None],
        [coupled.D, coupled.E, mean_col],
        [None, mean_col.T, sp.csr_matrix((1, 1))],
    ]
    if n_s:
        rows = [
            [-coupled.H, coupled.A, coupled.G, None],
            [sp.csr_matrix((n_s, n_s)), coupled.S, coupled.T, None],
            [None, coupled.D, coupled.E, mean_col],
            [None, None, mean_col.T, sp.csr_matrix((1, 1))],
        ]
    matrix = sp.bmat(rows, format="csr")
    rhs = np.concatenate([coupled.F, coupled.B, coupled.G_rhs, [0.0]])
    return SaddleSystem(matrix=matrix, rhs=rhs, n_s=n_s, n_u=n_u, n_p=n_p)


def split_solution(system: SaddleSystem, coupled: CoupledSystem, x: NDArray[np.float64]) -> SaddleSolution:
    """Cut the solution vector of assemble_saddle into its unknowns"""
    if x.shape != (system.matrix.shape[0],):
        raise CouplingException(f"Solution of shape {x.shape} for a system of size {system.matrix.shape[0]}")
    s_all = x[: system.n_s]
    U = x[system.n_s : system.n_s + system.n_u]
    P = x[system.n_s + system.n_u : system.n_s + system.n_u + system.n_p]
    return SaddleSolution(
        s=[s_all[start:stop].copy() for start, stop in coupled.column_ranges],
        U=U.copy(),
        P=P.copy(),
        multiplier=float(x[-1]),
    )


def solve_coupled(coupled: CoupledSystem, tolerance: float = DEFAULT_RESIDUAL_TOLERANCE) -> SaddleSolution:
    """Assemble and solve the coupled system.

    Raises:
        CouplingException: inconsistent blocks.
        LinearSolverException: factorization or residual failure.
    """
    system = assemble_saddle(coupled)
    return split_solution(system, coupled, solve_direct(system.matrix, system.rhs, tolerance))
