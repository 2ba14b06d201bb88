"""P1 elements, triangle quadrature, and assembly of the discrete forms.

All element loops are vectorized over triangles; global matrices are built
from (row, col, data) triplets and returned as CSR with sorted indices.
Complex arithmetic is carried natively in matrix entries.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

_MASS_TEMPLATE = np.array(
    [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]
) / 12.0


@dataclass
class QuadratureRule:
    """Barycentric points and weights on the reference triangle.

    Weights sum to one; integrals are approximated as
    area * sum_q w_q f(x_q).
    """

    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,)
    degree: int


def triangle_rule(degree: int) -> QuadratureRule:
    """Symmetric Gauss rules: the 3-point edge-midpoint rule (degree 2)
    and the 6-point rule (degree 4)."""
    if degree <= 2:
        pts = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        w = np.full(3, 1.0 / 3.0)
        return QuadratureRule(pts, w, 2)
    if degree <= 4:
        a1, b1, w1 = 0.816847572980459, 0.091576213509771, 0.109951743655322
        a2, b2, w2 = 0.108103018168070, 0.445948490915965, 0.223381589678011
        pts = np.array(
            [
                [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
                [a2, b2, b2], [b2, a2, b2], [b2, b2, a2],
            ]
        )
        w = np.array([w1, w1, w1, w2, w2, w2])
        return QuadratureRule(pts, w, 4)
    raise ValueError(f"no rule of degree {degree} available")


@dataclass
class FeField:
    """Nodal P1 coefficient vector over a mesh.

    kind tags the role in the scheme: psi (complex), p/u (Dirichlet),
    q (zero-mean), v, or generic.
    """

    mesh: Mesh
    coeffs: np.ndarray
    kind: str = "generic"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (self.mesh.num_vertices,):
            raise ValueError(
                f"coefficient length {self.coeffs.shape} does not match "
                f"vertex count {self.mesh.num_vertices}"
            )


@dataclass
class ElementVectorField:
    """Per-triangle constant 2-vector field (e.g. the reconstructed A)."""

    mesh: Mesh
    values: np.ndarray  # (nt, 2)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.num_triangles, 2):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"triangle count {self.mesh.num_triangles}"
            )


def chi(z):
    """Modulus cutoff z / max(|z|, 1); the identity inside the unit disc."""
    z = np.asarray(z, dtype=complex)
    return z / np.maximum(np.abs(z), 1.0)


class P1Space:
    """Precomputed P1 geometry: areas, basis gradients, quadrature maps."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.tri = mesh.triangles
        p = mesh.vertices[self.tri]  # (nt, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(self.area <= 0):
            raise ValueError("mesh contains non-CCW or degenerate triangles")
        x, y = p[..., 0], p[..., 1]
        inv2a = 1.0 / (2.0 * self.area)
        # grad of barycentric i: (y_{i+1} - y_{i+2}, x_{i+2} - x_{i+1}) / (2A)
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        self.grads = np.stack([gx, gy], axis=2) * inv2a[:, None, None]  # (nt,3,2)
        self._corners = p
        self._qp_cache = {}

    @property
    def num_vertices(self) -> int:
        return self.mesh.num_vertices

    @property
    def num_triangles(self) -> int:
        return self.mesh.num_triangles

    def quad_points(self, rule: QuadratureRule) -> np.ndarray:
        """Physical quadrature points, shape (nt, nq, 2)."""
        key = rule.degree
        if key not in self._qp_cache:
            self._qp_cache[key] = np.einsum(
                "qi,tid->tqd", rule.points, self._corners
            )
        return self._qp_cache[key]

    def at_quad(self, coeffs, rule: QuadratureRule) -> np.ndarray:
        """Interpolate a nodal field at the rule's points, shape (nt, nq)."""
        vals = np.asarray(coeffs)[self.tri]  # (nt, 3)
        return np.einsum("qi,ti->tq", rule.points, vals)

    def element_gradient(self, coeffs) -> np.ndarray:
        """Per-triangle constant gradient of a nodal field, shape (nt, 2)."""
        vals = np.asarray(coeffs)[self.tri]
        return np.einsum("ti,tid->td", vals, self.grads)

    def scatter(self, elem_rhs) -> np.ndarray:
        """Accumulate per-element nodal contributions (nt, 3) into (nv,)."""
        out = np.zeros(self.num_vertices, dtype=elem_rhs.dtype)
        np.add.at(out, self.tri.ravel(), elem_rhs.ravel())
        return out

    def _to_csr(self, elem, dtype=float):
        """Assemble (nt, 3, 3) element matrices into global CSR."""
        nt = self.num_triangles
        rows = np.repeat(self.tri, 3, axis=1).ravel()
        cols = np.tile(self.tri, (1, 3)).ravel()
        A = sp.coo_matrix(
            (elem.astype(dtype, copy=False).ravel(), (rows, cols)),
            shape=(self.num_vertices, self.num_vertices),
        ).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        return A


def as_space(mesh_or_space) -> P1Space:
    if isinstance(mesh_or_space, P1Space):
        return mesh_or_space
    return P1Space(mesh_or_space)


def assemble_mass(mesh) -> sp.csr_matrix:
    """Exact P1 mass matrix (element integrals of degree 2 done in closed
    form)."""
    space = as_space(mesh)
    elem = space.area[:, None, None] * _MASS_TEMPLATE
    return space._to_csr(elem)


def assemble_stiffness(mesh) -> sp.csr_matrix:
    """P1 stiffness matrix; constants lie in the nullspace (no constraints
    applied here)."""
    space = as_space(mesh)
    elem = np.einsum("tid,tjd->tij", space.grads, space.grads)
    elem *= space.area[:, None, None]
    return space._to_csr(elem)


def assemble_weighted_mass(space: P1Space, wvals, rule: QuadratureRule):
    """Mass matrix weighted by values wvals (nt, nq) at the rule's points."""
    lam = rule.points  # (nq, 3)
    elem = np.einsum(
        "q,t,tq,qi,qj->tij", rule.weights, space.area, wvals, lam, lam
    )
    return space._to_csr(elem, dtype=wvals.dtype)


def load_vector(space: P1Space, fvals, rule: QuadratureRule) -> np.ndarray:
    """Load vector (f, phi_j) from values fvals (nt, nq) at the rule's
    points."""
    elem = np.einsum("q,t,tq,qi->ti", rule.weights, space.area, fvals, rule.points)
    return space.scatter(elem)


def load_vector_grad(space: P1Space, gvals, rule: QuadratureRule) -> np.ndarray:
    """Load vector (G, grad phi_j) from vector values gvals (nt, nq, 2)."""
    gq = np.einsum("q,t,tqd->td", rule.weights, space.area, gvals)
    elem = np.einsum("td,tid->ti", gq, space.grads)
    return space.scatter(elem)


def load_vector_curl(space: P1Space, gvals, rule: QuadratureRule) -> np.ndarray:
    """Load vector (G, curl phi_j) with curl phi = (d2 phi, -d1 phi)."""
    gq = np.einsum("q,t,tqd->td", rule.weights, space.area, gvals)
    curls = np.stack([space.grads[..., 1], -space.grads[..., 0]], axis=2)
    elem = np.einsum("td,tid->ti", gq, curls)
    return space.scatter(elem)


def gradient_field(f: FeField) -> ElementVectorField:
    """Per-triangle constant gradient of a real nodal field."""
    space = as_space(f.mesh)
    return ElementVectorField(f.mesh, space.element_gradient(f.coeffs))


def curl_field(f: FeField) -> ElementVectorField:
    """Rotated gradient (d f/dx2, -d f/dx1) of a real nodal field."""
    g = as_space(f.mesh).element_gradient(f.coeffs)
    return ElementVectorField(f.mesh, np.column_stack([g[:, 1], -g[:, 0]]))


def _field_coeffs(f, n):
    c = f.coeffs if isinstance(f, FeField) else np.asarray(f)
    if c.shape != (n,):
        raise ValueError(f"expected coefficient vector of length {n}")
    return c


def _element_vectors(A, nt):
    v = A.values if isinstance(A, ElementVectorField) else np.asarray(A)
    if v.shape != (nt, 2):
        raise ValueError(f"expected ({nt}, 2) element vector data")
    return v


def assemble_psi_system(
    mesh, psi_n, A_n, eta, kappa, tau, g_load=None, t_next=None
):
    """Assemble the linearized backward-Euler system for the order parameter.

    The matrix is (eta/tau)*Mass + covariant form + ((|psi^n|^2 - 1) .,.)
    + the gauge coupling i*eta*kappa*int A.grad(psi phi*); the right-hand
    side is (eta/tau)*Mass*psi^n plus the load from g_load(points, t_next)
    when a forcing is supplied.  The covariant form is Hermitian and the
    gauge term symmetric pure-imaginary, so the result is close to but not
    exactly complex-symmetric (the cross term i/kappa*A.(phi_j grad phi_k -
    phi_k grad phi_j) is antisymmetric).

    Parameters
    ----------
    psi_n : FeField or complex array, previous order parameter
    A_n : ElementVectorField or (nt, 2) array, previous magnetic potential
    g_load : optional callable (points, t) -> complex, evaluated with the
        degree-4 rule at t_next

    Returns
    -------
    (csr_matrix complex, rhs complex)
    """
    import warnings

    space = as_space(mesh)
    psi = _field_coeffs(psi_n, space.num_vertices).astype(complex)
    A = _element_vectors(A_n, space.num_triangles)
    if not (np.all(np.isfinite(psi.view(float))) and np.all(np.isfinite(A))):
        raise ValueError("non-finite coefficients in psi_n or A_n")
    if not (eta > 0 and kappa > 0 and tau > 0) or not np.isfinite(eta * kappa * tau):
        raise ValueError(f"invalid scheme constants eta={eta}, kappa={kappa}, tau={tau}")
    if tau >= eta / 4:
        warnings.warn(
            f"tau={tau} >= eta/4={eta / 4}: unique solvability is only "
            "guaranteed for tau < eta/4",
            stacklevel=2,
        )

    kh = 1.0 / kappa
    area = space.area
    mass_elem = area[:, None, None] * _MASS_TEMPLATE
    stiff_elem = np.einsum("tid,tjd->tij", space.grads, space.grads) * area[:, None, None]

    adg = np.einsum("td,tid->ti", A, space.grads)  # (nt,3): A . grad(phi_i)
    asq = np.einsum("td,td->t", A, A)
    third = area / 3.0
    # imaginary part: (1/k)(B - B^T) + eta*k*(B + B^T), with
    # B-element[j,k] = (area/3) * A.grad(phi_k) constant in j
    imag_elem = (kh + eta * kappa) * third[:, None, None] * adg[:, None, :] \
        + (eta * kappa - kh) * third[:, None, None] * adg[:, :, None]

    rule4 = triangle_rule(4)
    psi_q = space.at_quad(psi, rule4)
    s_wvals = (psi_q.real**2 + psi_q.imag**2) - 1.0
    lam = rule4.points
    s_elem = np.einsum(
        "q,t,tq,qi,qj->tij", rule4.weights, area, s_wvals, lam, lam
    )

    elem = (
        (eta / tau) * mass_elem
        + kh**2 * stiff_elem
        + asq[:, None, None] * mass_elem
        + s_elem
        + 1j * imag_elem
    )
    A_sys = space._to_csr(elem, dtype=complex)

    rhs_elem = (eta / tau) * np.einsum("tij,tj->ti", mass_elem, psi[space.tri])
    rhs = space.scatter(rhs_elem)
    if g_load is not None:
        gq = np.asarray(g_load(space.quad_points(rule4), t_next), dtype=complex)
        rhs = rhs + load_vector(space, gq, rule4)
    return A_sys, rhs


def assemble_supercurrent(
    mesh, psi_n, psi_np1, A_n, kappa, g_vec=None, t_next=None
):
    """Right-hand sides of the p- and q-equations.

    Evaluates G = Re[chi(psi^n)^* (i/kappa grad psi^{n+1} + A^n psi^{n+1})]
    minus the forcing g_vec(points, t_next) at degree-4 quadrature points,
    and returns (G, curl phi_j) and (G, grad phi_j).
    """
    space = as_space(mesh)
    psin = _field_coeffs(psi_n, space.num_vertices).astype(complex)
    psi1 = _field_coeffs(psi_np1, space.num_vertices).astype(complex)
    A = _element_vectors(A_n, space.num_triangles)

    rule4 = triangle_rule(4)
    chi_q = chi(space.at_quad(psin, rule4))  # (nt, nq)
    psi1_q = space.at_quad(psi1, rule4)
    grad1 = space.element_gradient(psi1)  # (nt, 2) complex
    cov = (1j / kappa) * grad1[:, None, :] + A[:, None, :] * psi1_q[..., None]
    G = (np.conj(chi_q)[..., None] * cov).real  # (nt, nq, 2)
    if g_vec is not None:
        G = G - np.asarray(g_vec(space.quad_points(rule4), t_next), dtype=float)
    rhs_p = load_vector_curl(space, G, rule4)
    rhs_q = load_vector_grad(space, G, rule4)
    return rhs_p, rhs_q
