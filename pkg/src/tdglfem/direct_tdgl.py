"""Direct FEM baseline: nodal P1 magnetic potential, linearized backward
Euler.

This discretizes the original equations without the Hodge reformulation,
to reproduce the non-convergence of the potential near the reentrant
corner.  The order-parameter subsystem reuses the Hodge scheme's assembly
verbatim, fed with the per-element interpolant of the nodal potential, so
the only difference under test is how the potential is computed.  The
supercurrent linearization mirrors the Hodge scheme (cutoff of the old
order parameter against the freshly solved one, potential explicit); both
vector components are zeroed at every corner node.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem
from .fem import FeField, chi
from .hodge_tdgl import SchemeConfig, StepDiagnostics
from .mesh import Mesh, classify_boundary
from .sparse_linalg import (
    SolverFailure,
    apply_dirichlet,
    cg_solve,
    complex_symmetric_solve,
)


@dataclass
class DirectState:
    """Order parameter plus nodal vector potential with A.n = 0 applied."""

    t: float
    psi: FeField
    A: np.ndarray  # (nv, 2) nodal coefficients


def element_average(mesh: Mesh, A_nodal: np.ndarray) -> np.ndarray:
    """Per-element interpolant (centroid value) of a nodal vector field."""
    return A_nodal[mesh.triangles].mean(axis=1)


def constrained_dofs(mesh: Mesh) -> np.ndarray:
    """Flattened (component*nv + vertex) indices pinned by A.n = 0."""
    tables = classify_boundary(mesh)
    nv = mesh.num_vertices
    out = []
    for v, comps in tables.normal_components.items():
        for c in comps:
            out.append(c * nv + v)
    return np.array(sorted(out), dtype=np.int64)


def assemble_vector_system(mesh: Mesh, tau: float):
    """(1/tau)*Mass_vec + CurlCurl + DivDiv on the 2n nodal DOFs.

    The curl-curl plus div-div blocks reduce to the scalar stiffness on
    the diagonal and skew gradient couplings off the diagonal.
    """
    space = fem.as_space(mesh)
    nv = mesh.num_vertices
    area = space.area
    gx = space.grads[..., 0]
    gy = space.grads[..., 1]
    mass_elem = area[:, None, None] * fem._MASS_TEMPLATE
    diag_elem = (
        np.einsum("ti,tj->tij", gx, gx) + np.einsum("ti,tj->tij", gy, gy)
    ) * area[:, None, None] + mass_elem / tau
    # (curl A, curl a) + (div A, div a) cross block, row test-1 x col trial-2
    e12 = (
        np.einsum("ti,tj->tji", gy, gx) - np.einsum("ti,tj->tji", gx, gy)
    ) * area[:, None, None]

    tri = space.tri
    rows1 = np.repeat(tri, 3, axis=1).ravel()
    cols1 = np.tile(tri, (1, 3)).ravel()
    rows = np.concatenate([rows1, rows1 + nv, rows1, rows1 + nv])
    cols = np.concatenate([cols1, cols1 + nv, cols1 + nv, cols1])
    data = np.concatenate(
        [diag_elem.ravel(), diag_elem.ravel(), e12.ravel(),
         np.transpose(e12, (0, 2, 1)).ravel()]
    )
    A = sp.coo_matrix((data, (rows, cols)), shape=(2 * nv, 2 * nv)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


class _DirectContext:
    def __init__(self, mesh: Mesh, config: SchemeConfig):
        self.mesh = mesh
        self.config = config
        self.space = fem.as_space(mesh)
        self.M = fem.assemble_mass(self.space)
        nv = mesh.num_vertices
        sys2n = assemble_vector_system(mesh, config.tau)
        self.a_sys = apply_dirichlet(
            sys2n, np.zeros(2 * nv), constrained_dofs(mesh), 0.0
        )
        self.rule4 = fem.triangle_rule(4)
        self._warm = None

    def psi_l2(self, psi) -> float:
        return float(np.sqrt(np.real(np.conj(psi) @ (self.M @ psi))))


def _vector_loads(ctx, psi_n, psi1, A_nodal, case, t_next, kappa):
    """Right-hand side loads of the potential equation at t_next."""
    space = ctx.space
    rule = ctx.rule4
    nv = ctx.mesh.num_vertices
    pts = space.quad_points(rule)
    w, area, lam = rule.weights, space.area, rule.points

    def nodal_load(vals):
        """(vals, a) componentwise: vals (nt, nq, 2) -> (2nv,)"""
        elem = np.einsum("q,t,tqd,qi->tid", w, area, vals, lam)
        out = np.zeros(2 * nv)
        np.add.at(out, space.tri.ravel(), elem[..., 0].ravel())
        np.add.at(out, nv + space.tri.ravel(), elem[..., 1].ravel())
        return out

    rhs = np.zeros(2 * nv)
    f = getattr(case, "f", None)
    if f is not None:
        fq = np.einsum("q,t,tq->t", w, area, np.asarray(f(pts, t_next)))
        elem1 = -np.einsum("t,ti->ti", fq, space.grads[..., 1])
        elem2 = np.einsum("t,ti->ti", fq, space.grads[..., 0])
        np.add.at(rhs, space.tri.ravel(), elem1.ravel())
        np.add.at(rhs, nv + space.tri.ravel(), elem2.ravel())
    gvec = getattr(case, "gvec", None)
    if gvec is not None:
        rhs += nodal_load(np.asarray(gvec(pts, t_next), dtype=float))

    # supercurrent with the nodal potential interpolated at the points
    chi_q = chi(space.at_quad(psi_n, rule))
    psi1_q = space.at_quad(psi1, rule)
    grad1 = space.element_gradient(psi1)
    A_q = np.stack(
        [space.at_quad(A_nodal[:, 0], rule), space.at_quad(A_nodal[:, 1], rule)],
        axis=-1,
    )
    cov = (1j / kappa) * grad1[:, None, :] + A_q * psi1_q[..., None]
    G = (np.conj(chi_q)[..., None] * cov).real
    rhs -= nodal_load(G)
    return rhs


def direct_step(state: DirectState, case, config: SchemeConfig,
                ctx: _DirectContext = None):
    """One linearized backward-Euler step of the direct scheme."""
    if ctx is None:
        ctx = _DirectContext(state.psi.mesh, config)
    mesh, space = ctx.mesh, ctx.space
    tau, tol = config.tau, config.tol
    t_next = state.t + tau
    nv = mesh.num_vertices

    A_elem = element_average(mesh, state.A)
    A_sys, rhs = fem.assemble_psi_system(
        space, state.psi, A_elem, config.eta, config.kappa, tau,
        g_load=getattr(case, "g", None), t_next=t_next,
    )
    try:
        psi1, rep_psi = complex_symmetric_solve(A_sys, rhs, tol=tol)
    except SolverFailure as exc:
        raise SolverFailure(f"psi-solve failed at t={t_next}: {exc}",
                            exc.report) from exc

    rhs_vec = _vector_loads(ctx, state.psi.coeffs, psi1, state.A, case,
                            t_next, config.kappa)
    rhs_vec += (1.0 / tau) * np.concatenate(
        [ctx.M @ state.A[:, 0], ctx.M @ state.A[:, 1]]
    )
    try:
        x, rep_A = cg_solve(ctx.a_sys.matrix, ctx.a_sys.reduce_rhs(rhs_vec),
                            tol=tol, x0=ctx._warm)
    except SolverFailure as exc:
        raise SolverFailure(f"A-solve failed at t={t_next}: {exc}",
                            exc.report) from exc
    ctx._warm = x.copy()
    full = ctx.a_sys.extend(x)
    A1 = np.column_stack([full[:nv], full[nv:]])

    new_state = DirectState(t=t_next, psi=FeField(mesh, psi1, "psi"), A=A1)
    return new_state, rep_psi, rep_A


def direct_run(config: SchemeConfig, case, mesh: Mesh = None):
    """Run the direct baseline to T; returns (DirectState, diagnostics)."""
    from .mesh import build_l_shape_mesh

    if mesh is None:
        mesh = build_l_shape_mesh(config.M)
    nv = mesh.num_vertices
    psi = np.asarray(
        case.psi0(mesh.vertices) if callable(case.psi0) else case.psi0,
        dtype=complex,
    )
    A0 = getattr(case, "A0", None)
    A = (np.zeros((nv, 2)) if A0 is None
         else np.asarray(A0(mesh.vertices), dtype=float))
    # enforce the normal constraints on the initial data
    for dof in constrained_dofs(mesh):
        A[dof % nv, dof // nv] = 0.0
    state = DirectState(t=0.0, psi=FeField(mesh, psi, "psi"), A=A)

    ctx = _DirectContext(mesh, config)
    diagnostics = []
    for n in range(config.num_steps):
        state, rep_psi, rep_A = direct_step(state, case, config, ctx)
        diagnostics.append(
            StepDiagnostics(
                step=n + 1,
                t=state.t,
                psi_L2=ctx.psi_l2(state.psi.coeffs),
                # no u, v unknowns in the direct scheme
                grad_u_L2=0.0,
                grad_v_L2=0.0,
                solver_iters_psi=rep_psi.iterations,
                solver_iters_p=0,
                solver_iters_q=0,
                solver_iters_u=rep_A.iterations,
                solver_iters_v=0,
            )
        )
    return state, diagnostics
