"""Error norms against exact fields and convergence-rate computation.

All norms integrate with the degree-4 triangle rule; the localized
quadrature error near the corner decays faster than the scheme error and
is accepted.  The vector error handles both discrete representations of
the potential: the per-element constant field of the Hodge scheme and the
nodal P1 field of the direct baseline.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fem
from .fem import ElementVectorField, FeField

_RULE = fem.triangle_rule(4)


@dataclass
class ErrorRow:
    """One line of a convergence table (final-time errors for one run)."""

    h: float
    tau: float
    scheme: str
    e_psi_L2: float
    e_mod_psi_L2: float
    e_A_L2: float
    e_u_H1: float
    e_v_H1: float

    def __post_init__(self):
        for name in ("e_psi_L2", "e_mod_psi_L2", "e_A_L2", "e_u_H1", "e_v_H1"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise ValueError(f"{name}={val} must be nonnegative and finite")


def _sq_quad(space, sq_vals):
    """Integrate nonnegative values (nt, nq) with the degree-4 rule."""
    return float(
        np.einsum("q,t,tq->", _RULE.weights, space.area, sq_vals)
    )


def l2_error_scalar(field: FeField, exact, t, modulus: bool = False) -> float:
    """L2 distance between a nodal field and exact(points, t).

    With modulus=True both sides are passed through abs() first (the
    physically observable density error).
    """
    space = fem.as_space(field.mesh)
    fh = space.at_quad(field.coeffs, _RULE)
    fx = np.asarray(exact(space.quad_points(_RULE), t))
    if modulus:
        diff = np.abs(fh) - np.abs(fx)
        return math.sqrt(_sq_quad(space, diff * diff))
    diff = fh - fx
    return math.sqrt(_sq_quad(space, np.abs(diff) ** 2))


def l2_error_vector(field, exact, t) -> float:
    """L2 distance between a discrete vector field and exact(points, t).

    field is either an ElementVectorField (per-element constant) or an
    (nv, 2) nodal array paired with a mesh via a (mesh, array) tuple.
    """
    if isinstance(field, ElementVectorField):
        space = fem.as_space(field.mesh)
        fh = field.values[:, None, :]
    else:
        mesh, nodal = field
        space = fem.as_space(mesh)
        fh = np.stack(
            [space.at_quad(nodal[:, 0], _RULE), space.at_quad(nodal[:, 1], _RULE)],
            axis=-1,
        )
    fx = np.asarray(exact(space.quad_points(_RULE), t))
    diff = fh - fx
    sq = diff[..., 0] ** 2 + diff[..., 1] ** 2
    return math.sqrt(_sq_quad(space, sq))


def h1_error_scalar(field: FeField, exact, exact_grad, t) -> float:
    """Full H1 error sqrt(L2^2 + |grad|^2) for a real nodal field."""
    space = fem.as_space(field.mesh)
    l2sq = l2_error_scalar(field, exact, t) ** 2
    gh = space.element_gradient(field.coeffs)[:, None, :]
    gx = np.asarray(exact_grad(space.quad_points(_RULE), t))
    diff = gh - gx
    semisq = _sq_quad(space, diff[..., 0] ** 2 + diff[..., 1] ** 2)
    return math.sqrt(l2sq + semisq)


def convergence_rate(e_h: float, e_half: float) -> float:
    """log2 of the error ratio between mesh size h and h/2.

    Nonpositive errors make the rate undefined; NaN is returned as the
    flagged value.
    """
    if not (e_h > 0 and e_half > 0):
        return float("nan")
    return math.log(e_h / e_half) / math.log(2.0)
