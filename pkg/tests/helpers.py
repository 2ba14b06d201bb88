"""Shared oracles for the verification suite.

Everything here is independent of the production evaluation paths: the
cutoff polynomial is the closed-form C3 smoothstep (not the linear solve),
spatial derivatives come from jets or finite differences, and the PDE
operators are applied literally.
"""

import math

import numpy as np

from hyperdual import Jet2, polar, polyval

ETA, KAPPA = 1.0, 10.0

# 0.1 * (1 - 35 s^4 + 84 s^5 - 70 s^6 + 20 s^7), s = (r - 0.1)/0.3
SMOOTH = [0.1, 0.0, 0.0, 0.0, -3.5, 8.4, -7.0, 2.0]
SMOOTH_D1 = [i * c for i, c in enumerate(SMOOTH)][1:]


def phi_jet(r):
    if r.v < 0.1 or r.v > 0.4:
        return Jet2.const(0.1 if r.v < 0.1 else 0.0)
    s = (r - 0.1) * (1.0 / 0.3)
    return polyval(s, SMOOTH)


def dphi_jet(r):
    if r.v < 0.1 or r.v > 0.4:
        return Jet2.const(0.0)
    s = (r - 0.1) * (1.0 / 0.3)
    return polyval(s, SMOOTH_D1) * (1.0 / 0.3)


def psi_jet(x, y, t):
    r, theta = polar(x, y)
    return (t * t) * phi_jet(r) * r.powf(2.0 / 3.0) * ((2.0 / 3.0) * theta).cos()


def A_jets(x, y, t):
    r, theta = polar(x, y)
    S = (4.0 / 3.0) * phi_jet(r) * r.powf(-1.0 / 3.0) \
        + dphi_jet(r) * r.powf(2.0 / 3.0)
    amp = (t * t) * S
    third = theta * (1.0 / 3.0)
    return amp * third.cos(), amp * third.sin()


def oracle_g(x, y, t, eta=ETA, kappa=KAPPA):
    """PDE left side of the order-parameter equation via jets (+ exact
    central time difference, the fields being quadratic in t)."""
    ht = 1e-3
    psi = psi_jet(x, y, t)
    dpsi_dt = (psi_jet(x, y, t + ht).v - psi_jet(x, y, t - ht).v) / (2 * ht)
    A1, A2 = A_jets(x, y, t)
    div_A = A1.gx + A2.gy
    asq = A1.v * A1.v + A2.v * A2.v
    kh = 1.0 / kappa
    real = (eta * dpsi_dt - kh * kh * psi.lap + asq * psi.v
            + (psi.v**2 - 1.0) * psi.v)
    imag = kh * (psi.v * div_A + 2.0 * (A1.v * psi.gx + A2.v * psi.gy)) \
        - eta * kappa * psi.v * div_A
    return real + 1j * imag


def oracle_gvec(x, y, t, kappa=KAPPA):
    """PDE left side of the momentum equation via jets, including the
    curl-curl term and minus curl f with f = curl A."""
    ht = 1e-3
    A1, A2 = A_jets(x, y, t)
    A1p, A2p = A_jets(x, y, t + ht)
    A1m, A2m = A_jets(x, y, t - ht)
    dt_A = np.array([(A1p.v - A1m.v) / (2 * ht), (A2p.v - A2m.v) / (2 * ht)])
    # curl A = dA2/dx - dA1/dy; vector curl of it: (d/dy, -d/dx)
    curlcurl = np.array([A2.hxy - A1.hyy, -(A2.hxx - A1.hxy)])
    graddiv = np.array([A1.hxx + A2.hxy, A1.hxy + A2.hyy])
    psi = psi_jet(x, y, t)
    J = np.array([psi.v**2 * A1.v, psi.v**2 * A2.v])
    curl_f = curlcurl  # f = curl A identically, so curl f = curl curl A
    return dt_A + curlcurl - graddiv + J - curl_f


def sample_domain_points(n, seed, margin=2e-3, r_range=(0.02, 0.47)):
    """Random points inside the L-shape, away from the cutoff radii and
    the boundary by `margin`."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        r = rng.uniform(*r_range)
        th = rng.uniform(margin, 1.5 * math.pi - margin)
        x, y = r * math.cos(th), r * math.sin(th)
        if abs(x) > 0.5 - margin or abs(y) > 0.5 - margin:
            continue
        if x > -margin and y < margin:
            continue
        if min(abs(r - 0.1), abs(r - 0.4)) < margin:
            continue
        pts.append((x, y))
    return np.array(pts)


def fd_gradient(f, p, h=1e-4):
    """Fourth-order central gradient of a scalar callable on points."""
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    gx = (-f(p + 2 * ex) + 8 * f(p + ex) - 8 * f(p - ex) + f(p - 2 * ex)) / (12 * h)
    gy = (-f(p + 2 * ey) + 8 * f(p + ey) - 8 * f(p - ey) + f(p - 2 * ey)) / (12 * h)
    return np.array([gx, gy])


def fd_laplacian(f, p, h=2.5e-4):
    """Fourth-order central Laplacian of a scalar callable."""
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])

    def second(e):
        return (-f(p + 2 * e) + 16 * f(p + e) - 30 * f(p)
                + 16 * f(p - e) - f(p - 2 * e)) / (12 * h * h)

    return second(ex) + second(ey)


def poisson_l2_error(M):
    """Smooth Dirichlet Poisson oracle on the unit square.

    Solves -lap(u) = 2 pi^2 sin(pi x) sin(pi y), u = 0 on the boundary,
    and returns the L2 error of the P1 solution (expected O(h^2)).
    """
    from tdglfem import fem, metrics
    from tdglfem.mesh import build_square_mesh
    from tdglfem.sparse_linalg import apply_dirichlet, cg_solve

    mesh = build_square_mesh(M)
    space = fem.as_space(mesh)
    K = fem.assemble_stiffness(space)
    rule = fem.triangle_rule(4)
    pts = space.quad_points(rule)
    load = 2 * np.pi**2 * np.sin(np.pi * pts[..., 0]) * np.sin(np.pi * pts[..., 1])
    b = fem.load_vector(space, load, rule)
    sys = apply_dirichlet(K, b, mesh.boundary_vertices, 0.0)
    x, _ = cg_solve(sys.matrix, sys.rhs, tol=1e-12)
    uh = fem.FeField(mesh, sys.extend(x))
    exact = lambda p, t: np.sin(np.pi * p[..., 0]) * np.sin(np.pi * p[..., 1])
    return metrics.l2_error_scalar(uh, exact, 0.0)
