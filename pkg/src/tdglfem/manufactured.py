"""Exact corner-singular solution and forcing terms for verification runs.

The exact fields, in polar coordinates (r, theta) with theta in [0, 3*pi/2]
measured from the boundary arm on the positive x1-axis:

    psi = t^2 Phi(r) r^(2/3) cos(2 theta/3)
    A   = t^2 [ (4/3) Phi(r) r^(-1/3) + Phi'(r) r^(2/3) ]
              (cos(theta/3), sin(theta/3))

where Phi is 0.1 for r < 0.1, the degree-7 Hermite blend Upsilon on
[0.1, 0.4], and 0 beyond.  A splits as curl(u) + grad(v) with

    u = t^2 Phi r^(2/3) sin(2 theta/3),   v = t^2 Phi r^(2/3) cos(2 theta/3),

u vanishing on the whole boundary and v satisfying the natural Neumann
condition with zero mean.  Both psi(.,0) and A(.,0) vanish.

All derivatives used by the forcing terms are hand-derived in polar form
and chain-ruled to Cartesian vectors; tests cross-check every one against
finite differences and an independent second-order automatic-differentiation
oracle.  Useful cancellations: the Laplacian of the radial profile and the
divergence profile coincide,

    lap(psi) = div(A) = t^2 D(r) cos(2 theta/3),
    curl(A)  = f      = -t^2 D(r) sin(2 theta/3),
    D(r) = Phi'' r^(2/3) + (7/3) Phi' r^(-1/3),

so f and div A vanish identically near the corner (Phi is constant there)
and outside r = 0.4.

Evaluators accept arrays of points of shape (..., 2) plus a scalar time and
reject points strictly inside the removed quadrant.  At r = 0 the potential
A is genuinely unbounded (r^(-1/3)); evaluators are only ever sampled at
quadrature points with r > 0.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly

THETA_MAX = 1.5 * np.pi
_R_LO, _R_HI = 0.1, 0.4
_SCALE = _R_HI - _R_LO


@lru_cache(maxsize=1)
def upsilon_coeffs() -> np.ndarray:
    """Coefficients of the degree-7 cutoff polynomial.

    Solved from the 8x8 Vandermonde-derivative system expressed in the
    shifted variable s = (r - 0.1)/0.3 (conditions at s = 0 and s = 1),
    which keeps the system well conditioned; returned coefficients are in
    powers of s, lowest order first.
    """
    def falling(i, d):
        out = 1.0
        for k in range(d):
            out *= i - k
        return out

    # the four conditions at s=0 are diagonal and pin c0..c3 exactly;
    # eliminating them leaves a well-conditioned 4x4 system at s=1
    head = np.array([0.1, 0.0, 0.0, 0.0])
    A = np.array([[falling(i, d) for i in range(4, 8)] for d in range(4)])
    b = np.array([-head[0], 0.0, 0.0, 0.0])
    tail = np.linalg.solve(A, b)
    tail += np.linalg.solve(A, b - A @ tail)  # one refinement step
    c = np.concatenate([head, tail])
    if not np.all(np.isfinite(c)):
        raise ArithmeticError("Hermite system for the cutoff polynomial is singular")
    return c


@lru_cache(maxsize=8)
def _upsilon_deriv_coeffs(order: int) -> np.ndarray:
    c = upsilon_coeffs()
    return npoly.polyder(c, m=order) / _SCALE**order if order else c


def upsilon(r, deriv: int = 0):
    """Evaluate the cutoff polynomial branch (and r-derivatives) at r."""
    s = (np.asarray(r, dtype=float) - _R_LO) / _SCALE
    return npoly.polyval(s, _upsilon_deriv_coeffs(deriv))


def _phi_branches(r, deriv):
    r = np.asarray(r, dtype=float)
    s = np.clip((r - _R_LO) / _SCALE, 0.0, 1.0)
    mid = npoly.polyval(s, _upsilon_deriv_coeffs(deriv))
    inner = 0.1 if deriv == 0 else 0.0
    return np.where(r < _R_LO, inner, np.where(r <= _R_HI, mid, 0.0))


def phi(r):
    """Radial cutoff: 0.1 inside r<0.1, Upsilon(r) on [0.1, 0.4], 0 outside."""
    return _phi_branches(r, 0)


def dphi(r):
    return _phi_branches(r, 1)


def d2phi(r):
    return _phi_branches(r, 2)


def d3phi(r):
    return _phi_branches(r, 3)


def to_polar(points):
    """(r, theta) with theta in [0, 3*pi/2]; rejects the removed quadrant."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    if np.any((x > 1e-14) & (y < -1e-14)):
        raise ValueError("point lies inside the removed quadrant of the L-shape")
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0, theta + 2.0 * np.pi, theta)
    theta = np.minimum(theta, THETA_MAX)  # clamp roundoff on the lower arm
    return r, theta


def _profiles(r):
    """Radial building blocks; r must be positive where singular powers occur."""
    with np.errstate(divide="ignore", invalid="ignore"):
        cbrt = np.cbrt(r)
        r23 = cbrt * cbrt
        rm13 = 1.0 / cbrt
        p0, p1, p2 = phi(r), dphi(r), d2phi(r)
        R = p0 * r23
        dR = p1 * r23 + (2.0 / 3.0) * p0 * rm13
        S = (4.0 / 3.0) * p0 * rm13 + p1 * r23
        D = p2 * r23 + (7.0 / 3.0) * p1 * rm13
    return R, dR, S, D, r23, rm13


def exact_psi(points, t):
    """Order parameter (real-valued here; returned as complex)."""
    r, theta = to_polar(points)
    R = phi(r) * np.cbrt(r) ** 2
    return (t * t * R * np.cos(2.0 * theta / 3.0)).astype(complex)


def _radial_vec(fr, ftheta, theta):
    """Assemble fr*e_r + ftheta*e_theta into Cartesian components."""
    ct, st = np.cos(theta), np.sin(theta)
    return np.stack([fr * ct - ftheta * st, fr * st + ftheta * ct], axis=-1)


def exact_A(points, t):
    """Magnetic potential; unbounded like r^(-1/3) at the corner."""
    r, theta = to_polar(points)
    _, _, S, _, _, _ = _profiles(r)
    amp = t * t * S
    return np.stack(
        [amp * np.cos(theta / 3.0), amp * np.sin(theta / 3.0)], axis=-1
    )


def exact_u(points, t):
    r, theta = to_polar(points)
    return t * t * phi(r) * np.cbrt(r) ** 2 * np.sin(2.0 * theta / 3.0)


def exact_v(points, t):
    r, theta = to_polar(points)
    return t * t * phi(r) * np.cbrt(r) ** 2 * np.cos(2.0 * theta / 3.0)


def exact_grad_u(points, t):
    r, theta = to_polar(points)
    R, dR, _, _, _, rm13 = _profiles(r)
    two3 = 2.0 * theta / 3.0
    fr = t * t * dR * np.sin(two3)
    fth = t * t * (2.0 / 3.0) * phi(r) * rm13 * np.cos(two3)
    return _radial_vec(fr, fth, theta)


def exact_grad_v(points, t):
    r, theta = to_polar(points)
    R, dR, _, _, _, rm13 = _profiles(r)
    two3 = 2.0 * theta / 3.0
    fr = t * t * dR * np.cos(two3)
    fth = -t * t * (2.0 / 3.0) * phi(r) * rm13 * np.sin(two3)
    return _radial_vec(fr, fth, theta)


def exact_f(points, t):
    """External field f = curl A = -t^2 D(r) sin(2 theta/3)."""
    r, theta = to_polar(points)
    _, _, _, D, _, _ = _profiles(r)
    return -t * t * D * np.sin(2.0 * theta / 3.0)


def exact_div_A(points, t):
    r, theta = to_polar(points)
    _, _, _, D, _, _ = _profiles(r)
    return t * t * D * np.cos(2.0 * theta / 3.0)


def forcing_g(points, t, eta: float = 1.0, kappa: float = 10.0):
    """Scalar forcing of the order-parameter equation.

    g = eta d_t psi + (i/kappa grad + A)^2 psi + (|psi|^2 - 1) psi
        - i eta kappa psi div A,  evaluated in closed form.
    """
    r, theta = to_polar(points)
    R, dR, S, D, _, rm13 = _profiles(r)
    c = np.cos(2.0 * theta / 3.0)
    s = np.sin(2.0 * theta / 3.0)
    kh = 1.0 / kappa
    t2, t4, t6 = t * t, t**4, t**6

    psi_s = R * c
    lap_s = D * c
    # A.grad(psi) (spatial factor; full term carries t^4)
    adg_s = S * (dR * c * c + (2.0 / 3.0) * phi(r) * rm13 * s * s)
    div_s = D * c

    real = (
        eta * 2.0 * t * psi_s
        - t2 * kh * kh * lap_s
        - t2 * psi_s
        + t6 * psi_s**3
        + t6 * S * S * psi_s
    )
    imag = t4 * ((kh - eta * kappa) * psi_s * div_s + 2.0 * kh * adg_s)
    return real + 1j * imag


def forcing_gvec(points, t, eta: float = 1.0, kappa: float = 10.0):
    """Vector forcing of the momentum equation.

    With f = curl A the curl-curl term cancels against curl f identically,
    leaving gvec = d_t A - grad(div A) + Re[psi^* (i/kappa grad + A) psi];
    the supercurrent reduces to |psi|^2 A for the real-valued psi here.
    """
    r, theta = to_polar(points)
    R, dR, S, D, r23, rm13 = _profiles(r)
    c = np.cos(2.0 * theta / 3.0)
    s = np.sin(2.0 * theta / 3.0)
    t2, t6 = t * t, t**6

    p1, p2, p3 = dphi(r), d2phi(r), d3phi(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        rm43 = rm13 / r
        dD = p3 * r23 + 3.0 * p2 * rm13 - (7.0 / 9.0) * p1 * rm43
        # D vanishes identically near the corner, so D/r -> 0 there
        D_over_r = np.where(r > 0, D / np.where(r > 0, r, 1.0), 0.0)
        grad_div = _radial_vec(t2 * dD * c, -t2 * (2.0 / 3.0) * D_over_r * s, theta)

    e13 = np.stack([np.cos(theta / 3.0), np.sin(theta / 3.0)], axis=-1)
    dt_A = (2.0 * t * S)[..., None] * e13
    supercurrent = (t6 * R * R * c * c * S)[..., None] * e13
    return dt_A - grad_div + supercurrent


@dataclass
class ManufacturedCase:
    """Forcing provider for the corner-singular verification problem.

    eta and kappa are fixed by the experiment (1 and 10); the same object
    serves both schemes and the error metrics.
    """

    eta: float = 1.0
    kappa: float = 10.0

    def g(self, points, t):
        return forcing_g(points, t, self.eta, self.kappa)

    def gvec(self, points, t):
        return forcing_gvec(points, t, self.eta, self.kappa)

    def f(self, points, t):
        return exact_f(points, t)

    def psi0(self, points):
        pts = np.asarray(points)
        return np.zeros(pts.shape[:-1], dtype=complex)

    def A0(self, points):
        pts = np.asarray(points)
        return np.zeros(pts.shape[:-1] + (2,))

    # exact fields for error measurement
    psi = staticmethod(exact_psi)
    A = staticmethod(exact_A)
    u = staticmethod(exact_u)
    v = staticmethod(exact_v)
    grad_u = staticmethod(exact_grad_u)
    grad_v = staticmethod(exact_grad_v)
