"""Sparse matrix building and the direct solver of the coupled saddle-point system"""
from typing import List, Tuple
import logging
import time

import numpy as np
from numpy.typing import ArrayLike, NDArray
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from squirm.exceptions import LinearSolverException

DEFAULT_RESIDUAL_TOLERANCE = 1e-10
REFINEMENT_STEPS = 3


class SparseMatrix:
    """Sparse matrix accumulated in triplet form and finalized to CSR.

    Duplicate (row, col) entries are summed on finalization, in insertion order.
    """

    def __init__(self, n_rows: int, n_cols: int) -> None:
        self.shape: Tuple[int, int] = (int(n_rows), int(n_cols))
        self._rows: List[NDArray[np.int64]] = []
        self._cols: List[NDArray[np.int64]] = []
        self._vals: List[NDArray[np.float64]] = []

    def add(self, rows: ArrayLike, cols: ArrayLike, vals: ArrayLike) -> None:
        """Append triplets; rows, cols and vals broadcast to one shape"""
        rows, cols, vals = np.broadcast_arrays(
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=float),
        )
        if not np.all(np.isfinite(vals)):
            raise LinearSolverException("Non-finite entry added to sparse matrix")
        self._rows.append(rows.ravel())
        self._cols.append(cols.ravel())
        self._vals.append(vals.ravel())

    def add_local(self, dofs: NDArray[np.int64], local: NDArray[np.float64]) -> None:
        """Scatter a stack of square element matrices local[e] onto dofs[e]"""
        n_loc = dofs.shape[1]
        rows = np.repeat(dofs, n_loc, axis=1)
        cols = np.tile(dofs, (1, n_loc))
        self.add(rows, cols, local.reshape(dofs.shape[0], n_loc * n_loc))

    def tocsr(self) -> sp.csr_matrix:
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        matrix = sp.coo_matrix((vals, (rows, cols)), shape=self.shape).tocsr()
        matrix.sum_duplicates()
        return matrix


def solve_direct(
    system: sp.spmatrix,
    rhs: ArrayLike,
    tolerance: float = DEFAULT_RESIDUAL_TOLERANCE,
) -> NDArray[np.float64]:
    """Solve system x = rhs by sparse LU with partial pivoting and COLAMD ordering.

    Rows are equilibrated before factorization and the solution is polished by a few steps of
    iterative refinement.

    Args:
        system: square sparse matrix
        rhs: right-hand side
        tolerance: admissible relative residual |A x - b| / |b|
    Returns:
        The solution vector.
    Raises:
        LinearSolverException: non-square system, singular pivot or residual failure.
    """
    matrix = sp.csr_matrix(system, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n_rows, n_cols = matrix.shape
    if n_rows != n_cols or b.shape != (n_rows,):
        raise LinearSolverException(
            f"Cannot solve a {n_rows}x{n_cols} system with a right-hand side of shape {b.shape}"
        )
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n_rows)

    row_scale = abs(matrix).max(axis=1).toarray().ravel()
    if np.any(row_scale == 0.0):
        raise LinearSolverException(
            f"System has {int(np.sum(row_scale == 0.0))} empty rows, structurally singular"
        )
    scaling = sp.diags(1.0 / row_scale)
    scaled = (scaling @ matrix).tocsc()
    scaled_b = b / row_scale

    start = time.perf_counter()
    try:
        factor = spla.splu(scaled, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as ex:
        raise LinearSolverException("Sparse LU factorization failed", ex) from ex
    x = factor.solve(scaled_b)
    for _ in range(REFINEMENT_STEPS):
        correction = factor.solve(scaled_b - scaled @ x)
        x = x + correction
    logging.debug(
        "Solved %d unknowns (%d nonzeros) in %.3f s",
        n_rows,
        matrix.nnz,
        time.perf_counter() - start,
    )

    if not np.all(np.isfinite(x)):
        raise LinearSolverException("Sparse LU produced non-finite values, singular pivot")
    residual = float(np.linalg.norm(matrix @ x - b)) / b_norm
    if residual > tolerance:
        raise LinearSolverException(
            f"Relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}"
        )
    return x
