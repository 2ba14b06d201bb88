"""Decoupled linearized backward-Euler scheme for the reformulated system.

Each step performs, in order: one complex solve for the order parameter
(using the previous potential), two Poisson solves projecting the
supercurrent onto its rotated-gradient and gradient parts (p Dirichlet,
q Neumann with zero-mean normalization), two heat-step solves for the
stream and potential scalars (u Dirichlet, v unconstrained), and the
reconstruction A = curl(u) + grad(v) as a per-element vector field.

A forcing provider ("case") supplies g(points, t), gvec(points, t) and
f(points, t); any of them may be None/zero-valued.  The zero case is a
fixed point of the scheme: with zero initial data and zero forcing every
iterate is exactly zero.
"""

from dataclasses import dataclass, field

import numpy as np

from . import fem
from .fem import ElementVectorField, FeField, chi, curl_field, gradient_field
from .mesh import Mesh, classify_boundary
from .sparse_linalg import (
    SolverFailure,
    apply_dirichlet,
    cg_solve,
    complex_symmetric_solve,
)

__all__ = [
    "SchemeConfig",
    "TdglState",
    "StepDiagnostics",
    "ZeroCase",
    "chi",
    "init_state",
    "step",
    "run",
]


@dataclass
class SchemeConfig:
    """Scheme constants and resolution; validated on construction.

    tau < eta/4 is enforced (the solvability condition); set
    allow_large_tau=True only for experiments.  T/tau must be an integer
    number of steps.
    """

    eta: float
    kappa: float
    tau: float
    T: float
    M: int
    tol: float = 1e-10
    allow_large_tau: bool = False

    def __post_init__(self):
        if self.eta <= 0 or self.kappa <= 0 or self.tau <= 0:
            raise ValueError("eta, kappa and tau must be positive")
        if self.T < 0:
            raise ValueError("final time T must be nonnegative")
        if self.tau >= self.eta / 4 and not self.allow_large_tau:
            raise ValueError(
                f"tau={self.tau} violates the solvability condition "
                f"tau < eta/4 = {self.eta / 4}"
            )
        n = self.T / self.tau
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(
                f"T={self.T} is not an integer multiple of tau={self.tau}"
            )

    @property
    def num_steps(self) -> int:
        return int(round(self.T / self.tau))


@dataclass
class TdglState:
    """The quintuple (psi, p, q, u, v) plus the reconstructed potential."""

    t: float
    psi: FeField
    p: FeField
    q: FeField
    u: FeField
    v: FeField
    A: ElementVectorField


@dataclass
class StepDiagnostics:
    step: int
    t: float
    psi_L2: float
    grad_u_L2: float
    grad_v_L2: float
    solver_iters_psi: int
    solver_iters_p: int
    solver_iters_q: int
    solver_iters_u: int
    solver_iters_v: int


class ZeroCase:
    """Unforced problem with zero initial data (fixed point of the scheme)."""

    g = None
    gvec = None
    f = None

    def psi0(self, points):
        return np.zeros(np.asarray(points).shape[:-1], dtype=complex)

    def A0(self, points):
        return np.zeros(np.asarray(points).shape[:-1] + (2,))


class _RunContext:
    """Per-run assembled systems; matrices are constant over the run."""

    def __init__(self, mesh: Mesh, config: SchemeConfig):
        self.mesh = mesh
        self.config = config
        self.space = fem.as_space(mesh)
        self.tables = classify_boundary(mesh)
        self.M = fem.assemble_mass(self.space)
        self.K = fem.assemble_stiffness(self.space)
        nv = mesh.num_vertices
        zeros = np.zeros(nv)
        bnodes = self.tables.dirichlet_nodes
        self.p_sys = apply_dirichlet(self.K, zeros, bnodes, 0.0)
        self.q_sys = apply_dirichlet(self.K, zeros, np.array([0]), 0.0)
        heat = self.M.multiply(1.0 / config.tau) + self.K
        self.u_sys = apply_dirichlet(heat.tocsr(), zeros, bnodes, 0.0)
        self.v_mat = heat.tocsr()
        self.lumped = np.asarray(self.M.sum(axis=1)).ravel()
        self.area_total = self.lumped.sum()
        self.rule4 = fem.triangle_rule(4)
        self._warm = {}

    def _cg(self, name, A, b, tol):
        x0 = self._warm.get(name)
        try:
            x, rep = cg_solve(A, b, tol=tol, x0=x0)
        except SolverFailure as exc:
            raise SolverFailure(
                f"{name}-solve failed: {exc}", exc.report
            ) from exc
        self._warm[name] = x.copy()
        return x, rep

    def demean(self, q: np.ndarray) -> np.ndarray:
        """Subtract the mass-weighted mean (zero-mean normalization)."""
        return q - (self.lumped @ q) / self.area_total

    def load_scalar(self, func, t):
        if func is None:
            return 0.0
        vals = np.asarray(func(self.space.quad_points(self.rule4), t))
        return fem.load_vector(self.space, vals, self.rule4)

    def psi_l2(self, psi) -> float:
        return float(np.sqrt(np.real(np.conj(psi) @ (self.M @ psi))))

    def grad_l2(self, w) -> float:
        return float(np.sqrt(max(w @ (self.K @ w), 0.0)))


def init_state(mesh: Mesh, psi0, A0, tol: float = 1e-10) -> TdglState:
    """Initial quintuple: u0 and v0 solve the two Poisson problems driven
    by the initial potential, psi0 is the nodal interpolant.

    psi0 may be nodal data or a callable on points; A0 is a vector-valued
    callable (or None for zero initial potential).
    """
    space = fem.as_space(mesh)
    tables = classify_boundary(mesh)
    nv = mesh.num_vertices
    K = fem.assemble_stiffness(space)
    rule4 = fem.triangle_rule(4)

    if A0 is None:
        rhs_u = np.zeros(nv)
        rhs_v = np.zeros(nv)
    else:
        A0_q = np.asarray(A0(space.quad_points(rule4)), dtype=float)
        rhs_u = fem.load_vector_curl(space, A0_q, rule4)
        rhs_v = fem.load_vector_grad(space, A0_q, rule4)

    u_sys = apply_dirichlet(K, rhs_u, tables.dirichlet_nodes, 0.0)
    xu, _ = cg_solve(u_sys.matrix, u_sys.rhs, tol=tol)
    u = u_sys.extend(xu)

    v_sys = apply_dirichlet(K, rhs_v, np.array([0]), 0.0)
    xv, _ = cg_solve(v_sys.matrix, v_sys.rhs, tol=tol)
    v = v_sys.extend(xv)
    M = fem.assemble_mass(space)
    lumped = np.asarray(M.sum(axis=1)).ravel()
    v = v - (lumped @ v) / lumped.sum()

    psi = np.asarray(
        psi0(mesh.vertices) if callable(psi0) else psi0, dtype=complex
    )
    if psi.shape != (nv,):
        raise ValueError("psi0 must provide one nodal value per vertex")

    u_f = FeField(mesh, u, "u")
    v_f = FeField(mesh, v, "v")
    A = ElementVectorField(
        mesh, curl_field(u_f).values + gradient_field(v_f).values
    )
    zero = np.zeros(nv)
    return TdglState(
        t=0.0,
        psi=FeField(mesh, psi, "psi"),
        p=FeField(mesh, zero.copy(), "p"),
        q=FeField(mesh, zero.copy(), "q"),
        u=u_f,
        v=v_f,
        A=A,
    )


def _step(state: TdglState, case, config: SchemeConfig, ctx: _RunContext,
          step_index: int = 0):
    mesh = ctx.mesh
    space = ctx.space
    tau, tol = config.tau, config.tol
    t_next = state.t + tau

    # (a) order parameter
    A_sys, rhs = fem.assemble_psi_system(
        space, state.psi, state.A, config.eta, config.kappa, tau,
        g_load=getattr(case, "g", None), t_next=t_next,
    )
    try:
        psi1, rep_psi = complex_symmetric_solve(A_sys, rhs, tol=tol)
    except SolverFailure as exc:
        raise SolverFailure(f"psi-solve failed at t={t_next}: {exc}",
                            exc.report) from exc

    # (b), (c) supercurrent projections
    rhs_p, rhs_q = fem.assemble_supercurrent(
        space, state.psi, psi1, state.A, config.kappa,
        g_vec=getattr(case, "gvec", None), t_next=t_next,
    )
    xp, rep_p = ctx._cg("p", ctx.p_sys.matrix, ctx.p_sys.reduce_rhs(rhs_p), tol)
    p1 = ctx.p_sys.extend(xp)
    xq, rep_q = ctx._cg("q", ctx.q_sys.matrix, ctx.q_sys.reduce_rhs(rhs_q), tol)
    q1 = ctx.demean(ctx.q_sys.extend(xq))

    # (d) stream function u
    rhs_u = (1.0 / tau) * (ctx.M @ state.u.coeffs) - ctx.M @ p1
    rhs_u = rhs_u + ctx.load_scalar(getattr(case, "f", None), t_next)
    xu, rep_u = ctx._cg("u", ctx.u_sys.matrix, ctx.u_sys.reduce_rhs(rhs_u), tol)
    u1 = ctx.u_sys.extend(xu)

    # (e) potential scalar v (mass term keeps the system nonsingular)
    rhs_v = (1.0 / tau) * (ctx.M @ state.v.coeffs) - ctx.M @ q1
    xv, rep_v = ctx._cg("v", ctx.v_mat, rhs_v, tol)

    # (f) reconstruction
    u_f = FeField(mesh, u1, "u")
    v_f = FeField(mesh, xv, "v")
    A1 = ElementVectorField(
        mesh, curl_field(u_f).values + gradient_field(v_f).values
    )
    new_state = TdglState(
        t=t_next,
        psi=FeField(mesh, psi1, "psi"),
        p=FeField(mesh, p1, "p"),
        q=FeField(mesh, q1, "q"),
        u=u_f,
        v=v_f,
        A=A1,
    )
    diag = StepDiagnostics(
        step=step_index,
        t=t_next,
        psi_L2=ctx.psi_l2(psi1),
        grad_u_L2=ctx.grad_l2(u1),
        grad_v_L2=ctx.grad_l2(xv),
        solver_iters_psi=rep_psi.iterations,
        solver_iters_p=rep_p.iterations,
        solver_iters_q=rep_q.iterations,
        solver_iters_u=rep_u.iterations,
        solver_iters_v=rep_v.iterations,
    )
    return new_state, diag


def step(state: TdglState, case, config: SchemeConfig) -> TdglState:
    """Advance one time step (standalone variant; run() reuses assembled
    systems across steps)."""
    ctx = _RunContext(state.psi.mesh, config)
    new_state, _ = _step(state, case, config, ctx)
    return new_state


def run(config: SchemeConfig, case, mesh: Mesh = None):
    """Execute N = T/tau steps from the case's initial data.

    Returns (final TdglState, list of StepDiagnostics).
    """
    from .mesh import build_l_shape_mesh

    if mesh is None:
        mesh = build_l_shape_mesh(config.M)
    state = init_state(mesh, case.psi0, getattr(case, "A0", None),
                       tol=config.tol)
    ctx = _RunContext(mesh, config)
    diagnostics = []
    for n in range(config.num_steps):
        state, diag = _step(state, case, config, ctx, step_index=n + 1)
        diagnostics.append(diag)
    return state, diagnostics
