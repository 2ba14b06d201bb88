"""Sparse solver wrappers with verified residuals and per-solve reports.

Storage is scipy CSR/CSC.  CG handles the SPD real systems (Poisson and
heat steps); the complex system is solved by a direct sparse factorization
with a BiCGSTAB fallback.  Every solve recomputes its relative residual
independently of the backend and reports it.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class LinearSolveReport:
    iterations: int
    relative_residual: float
    method: str
    converged: bool = True


class SolverFailure(RuntimeError):
    """A linear solve did not reach its tolerance; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def relative_residual(A, x, b) -> float:
    """||Ax - b|| / ||b||, with the convention 0/0 = 0."""
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return float(np.linalg.norm(A @ x))
    return float(np.linalg.norm(A @ x - b) / nb)


def _check_finite(A, b):
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix contains non-finite entries")
    if not np.all(np.isfinite(np.asarray(b).view(float))):
        raise ValueError("right-hand side contains non-finite entries")


def cg_solve(A, b, tol: float = 1e-10, maxiter=None, x0=None):
    """Conjugate gradients for SPD systems.

    Returns (x, LinearSolveReport); raises SolverFailure when the
    iteration cap is exceeded.  A zero right-hand side returns the zero
    vector in zero iterations.
    """
    A = A.tocsr() if not sp.issparse(A) else A
    b = np.asarray(b, dtype=float)
    _check_finite(A, b)
    if not np.any(b):
        return np.zeros_like(b), LinearSolveReport(0, 0.0, "cg")

    iters = 0

    def _count(_):
        nonlocal iters
        iters += 1

    x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter,
                      callback=_count)
    res = relative_residual(A, x, b)
    report = LinearSolveReport(iters, res, "cg", converged=(info == 0))
    if info != 0 or res > tol:
        raise SolverFailure(
            f"CG failed to reach tol={tol} (info={info}, residual={res:.3e} "
            f"after {iters} iterations)", report)
    return x, report


def complex_symmetric_solve(A, b, tol: float = 1e-10):
    """Solve the complex system arising from the order-parameter step.

    Direct sparse LU at desk scale, with BiCGSTAB as fallback if the
    factorization fails or leaves a residual above tol.  Also valid for
    general complex and real matrices; on real SPD input it reproduces
    cg_solve results to solver tolerance.
    """
    A = A.tocsc() if not sp.issparse(A) else A.tocsc()
    b = np.asarray(b, dtype=complex)
    _check_finite(A, b)
    if not np.any(b):
        return np.zeros_like(b), LinearSolveReport(0, 0.0, "splu")

    Ac = A.astype(complex)
    try:
        lu = spla.splu(Ac)
        x = lu.solve(b)
        res = relative_residual(Ac, x, b)
        if res <= tol:
            return x, LinearSolveReport(1, res, "splu")
    except RuntimeError:
        x = None

    iters = 0

    def _count(_):
        nonlocal iters
        iters += 1

    x, info = spla.bicgstab(Ac, b, x0=x, rtol=tol, atol=0.0, callback=_count)
    res = relative_residual(Ac, x, b)
    report = LinearSolveReport(iters, res, "bicgstab", converged=(info == 0))
    if info != 0 or res > tol:
        raise SolverFailure(
            f"complex solve failed to reach tol={tol} (residual={res:.3e}); "
            "the system may be near-singular (tau too large?) or corrupted",
            report)
    return x, report


@dataclass
class ReducedSystem:
    """A Dirichlet-eliminated system plus the data to undo the reduction."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    size: int
    nodes: np.ndarray
    values: np.ndarray

    def extend(self, x_free) -> np.ndarray:
        """Embed a reduced solution into the full DOF vector."""
        x = np.zeros(self.size, dtype=np.result_type(x_free, self.values))
        x[self.free] = x_free
        x[self.nodes] = self.values
        return x

    def reduce_rhs(self, b) -> np.ndarray:
        """Reduce a new right-hand side against the same constraints."""
        b = np.asarray(b)
        r = b[self.free]
        if np.any(self.values):
            r = r - self._coupling @ self.values
        return r


def apply_dirichlet(A, b, nodes, values=0.0) -> ReducedSystem:
    """Eliminate Dirichlet rows/columns symmetrically.

    The solution of the reduced system, extended by the prescribed values,
    equals the constrained solution of the original system.
    """
    A = A.tocsr()
    n = A.shape[0]
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= n):
        raise ValueError("constraint node index out of range")
    values = np.broadcast_to(np.asarray(values), nodes.shape).astype(
        np.result_type(np.asarray(values), A.dtype), copy=True)
    mask = np.ones(n, dtype=bool)
    mask[nodes] = False
    free = np.flatnonzero(mask)
    Aff = A[free][:, free].tocsr()
    coupling = A[free][:, nodes].tocsr()
    b = np.asarray(b)
    rhs = b[free] - coupling @ values
    sys = ReducedSystem(Aff, rhs, free, n, nodes, values)
    sys._coupling = coupling
    return sys


def export_matrix_market(path, A) -> None:
    """Dump an assembled system for debugging."""
    from scipy.io import mmwrite

    mmwrite(str(path), A)
