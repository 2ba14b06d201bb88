import math

import numpy as np
import pytest

import helpers
from helpers import (
    fd_gradient,
    fd_laplacian,
    oracle_g,
    oracle_gvec,
    sample_domain_points,
)
from hyperdual import polar as polar_jets
from tdglfem import manufactured as mf


def test_upsilon_hermite_conditions():
    errs = [
        abs(mf.upsilon(0.1) - 0.1),
        abs(mf.upsilon(0.1, 1)),
        abs(mf.upsilon(0.1, 2)),
        abs(mf.upsilon(0.1, 3)),
        abs(mf.upsilon(0.4)),
        abs(mf.upsilon(0.4, 1)),
        abs(mf.upsilon(0.4, 2)),
        abs(mf.upsilon(0.4, 3)),
    ]
    assert max(errs) <= 1e-11


def test_upsilon_midpoint_fixture():
    # independent oracle: dense solve of the raw r-monomial Vandermonde
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for row, (r0, d) in enumerate(
        [(0.1, 0), (0.1, 1), (0.1, 2), (0.1, 3),
         (0.4, 0), (0.4, 1), (0.4, 2), (0.4, 3)]
    ):
        for i in range(d, 8):
            fall = 1.0
            for k in range(d):
                fall *= i - k
            A[row, i] = fall * r0 ** (i - d)
    b[0] = 0.1
    coeffs = np.linalg.solve(A, b)
    oracle_val = sum(c * 0.25**i for i, c in enumerate(coeffs))
    assert abs(mf.upsilon(0.25) - oracle_val) <= 1e-8
    assert abs(mf.upsilon(0.25) - 0.05) <= 1e-12  # frozen fixture
    # closed-form smoothstep cross-check
    assert np.allclose(mf.upsilon_coeffs(),
                       [0.1, 0, 0, 0, -3.5, 8.4, -7.0, 2.0], atol=1e-12)


def test_phi_piecewise_values():
    assert mf.phi(0.05) == 0.1
    assert mf.dphi(0.05) == 0.0
    assert mf.phi(0.5) == 0.0
    assert mf.dphi(0.5) == 0.0
    # C3 matching across the interface radii; the probe tolerance allows
    # for the jump of the (discontinuous) fourth derivative, |d4 Upsilon|
    # being of order 1e4 near the knots
    for r0 in (0.1, 0.4):
        for f in (mf.phi, mf.dphi, mf.d2phi, mf.d3phi):
            delta = 1e-12
            assert abs(f(r0 - delta) - f(r0 + delta)) <= 1e-10 + 2e4 * delta


def test_phi_vectorized():
    r = np.array([0.0, 0.05, 0.1, 0.25, 0.4, 0.45])
    vals = mf.phi(r)
    assert vals[0] == 0.1 and vals[1] == 0.1
    assert abs(vals[2] - 0.1) <= 1e-12
    assert abs(vals[3] - 0.05) <= 1e-12
    assert abs(vals[4]) <= 1e-12 and vals[5] == 0.0


def test_exact_solution_zero_cases():
    p = np.array([[0.05, 0.0], [0.3, 0.4], [-0.2, -0.3]])
    assert np.all(mf.exact_psi(p, 0.0) == 0)
    assert np.all(mf.exact_A(p, 0.0) == 0)
    assert np.all(mf.exact_f(p, 0.0) == 0)
    # outside the cutoff support (r = 0.5)
    far = np.array([0.3, 0.4])
    assert mf.exact_psi(far, 1.0) == 0
    assert np.all(mf.exact_A(far, 1.0) == 0)
    assert np.all(mf.forcing_g(far, 1.0) == 0)
    assert np.all(mf.forcing_gvec(far, 1.0) == 0)


def test_exact_solution_plugin_point():
    # r = 0.05 on the theta = 0 arm: Phi = 0.1, Phi' = 0
    p = np.array([0.05, 0.0])
    assert abs(mf.exact_psi(p, 1.0) - 0.1 * 0.05 ** (2 / 3)) <= 1e-15
    A = mf.exact_A(p, 1.0)
    assert abs(A[0] - 0.1 * (4 / 3) * 0.05 ** (-1 / 3)) <= 1e-13
    assert abs(A[1]) <= 1e-15


def test_rejects_removed_quadrant():
    with pytest.raises(ValueError, match="removed quadrant"):
        mf.exact_psi(np.array([0.25, -0.25]), 1.0)


def test_theta_convention_on_arms():
    r, th = mf.to_polar(np.array([[0.3, 0.0], [0.0, -0.3], [-0.3, 0.0]]))
    assert np.allclose(th, [0.0, 1.5 * np.pi, np.pi])


def test_gradients_match_finite_differences():
    pts = sample_domain_points(60, seed=2)
    t = 0.8
    for p in pts:
        gu = mf.exact_grad_u(p, t)
        gu_fd = fd_gradient(lambda q: mf.exact_u(q, t), p)
        assert np.abs(gu - gu_fd).max() <= 1e-6 * max(1.0, np.abs(gu).max())
        gv = mf.exact_grad_v(p, t)
        gv_fd = fd_gradient(lambda q: mf.exact_v(q, t), p)
        assert np.abs(gv - gv_fd).max() <= 1e-6 * max(1.0, np.abs(gv).max())


def test_div_and_curl_match_finite_differences():
    pts = sample_domain_points(60, seed=3)
    t = 0.8
    for p in pts:
        div_fd = (fd_gradient(lambda q: mf.exact_A(q, t)[..., 0], p)[0]
                  + fd_gradient(lambda q: mf.exact_A(q, t)[..., 1], p)[1])
        curl_fd = (fd_gradient(lambda q: mf.exact_A(q, t)[..., 1], p)[0]
                   - fd_gradient(lambda q: mf.exact_A(q, t)[..., 0], p)[1])
        assert abs(mf.exact_div_A(p, t) - div_fd) <= 1e-6 * max(1.0, abs(div_fd))
        assert abs(mf.exact_f(p, t) - curl_fd) <= 1e-6 * max(1.0, abs(curl_fd))


def _fd_psi_equation(p, t, eta=1.0, kappa=10.0):
    """PDE left side via finite differences on the base evaluators only."""
    kh = 1.0 / kappa
    ht = 1e-5
    dpsi_dt = (mf.exact_psi(p, t + ht) - mf.exact_psi(p, t - ht)) / (2 * ht)
    lap = fd_laplacian(lambda q: mf.exact_psi(q, t).real, p)
    grad = fd_gradient(lambda q: mf.exact_psi(q, t).real, p)
    A = mf.exact_A(p, t)
    div_A = (fd_gradient(lambda q: mf.exact_A(q, t)[..., 0], p)[0]
             + fd_gradient(lambda q: mf.exact_A(q, t)[..., 1], p)[1])
    psi = mf.exact_psi(p, t)
    cov = -kh**2 * lap + 1j * kh * (psi * div_A + 2 * (A @ grad)) + (A @ A) * psi
    return (eta * dpsi_dt + cov + (abs(psi) ** 2 - 1) * psi
            - 1j * eta * kappa * psi * div_A)


def _fd_momentum_equation(p, t):
    """Momentum-equation left side with nested finite differences."""
    ht = 1e-5
    dt_A = (mf.exact_A(p, t + ht) - mf.exact_A(p, t - ht)) / (2 * ht)

    def div_A(q):
        return (fd_gradient(lambda z: mf.exact_A(z, t)[..., 0], q)[0]
                + fd_gradient(lambda z: mf.exact_A(z, t)[..., 1], q)[1])

    def curl_A(q):
        return (fd_gradient(lambda z: mf.exact_A(z, t)[..., 1], q)[0]
                - fd_gradient(lambda z: mf.exact_A(z, t)[..., 0], q)[1])

    g_curl = fd_gradient(curl_A, p, h=2.5e-4)
    curlcurl = np.array([g_curl[1], -g_curl[0]])
    graddiv = fd_gradient(div_A, p, h=2.5e-4)
    g_f = fd_gradient(lambda q: mf.exact_f(q, t), p)
    curl_f = np.array([g_f[1], -g_f[0]])
    psi = mf.exact_psi(p, t)
    grad = fd_gradient(lambda q: mf.exact_psi(q, t).real, p)
    J = (np.conj(psi) * (1j / 10.0 * grad + mf.exact_A(p, t) * psi)).real
    return dt_A + curlcurl - graddiv + J - curl_f


def test_forcing_oracle_finite_differences():
    """Acceptance criterion: closed-form g and gvec match the FD evaluation
    of the PDE operators at 200 random points, relative tolerance 1e-6
    (unit floor for near-zero values)."""
    pts = sample_domain_points(200, seed=123)
    t = 0.7
    worst_g = worst_gv = 0.0
    for p in pts:
        g = mf.forcing_g(p, t)
        g_fd = _fd_psi_equation(p, t)
        worst_g = max(worst_g, abs(g - g_fd) / max(1.0, abs(g)))
        gv = mf.forcing_gvec(p, t)
        gv_fd = _fd_momentum_equation(p, t)
        worst_gv = max(worst_gv,
                       np.abs(gv - gv_fd).max() / max(1.0, np.abs(gv).max()))
    assert worst_g <= 1e-6, f"g mismatch {worst_g:.2e}"
    assert worst_gv <= 1e-6, f"gvec mismatch {worst_gv:.2e}"


def test_forcing_against_jet_oracle():
    """Machine-precision check with the independent second-order jets."""
    pts = sample_domain_points(80, seed=9)
    t = 0.6
    for x, y in pts:
        g = mf.forcing_g(np.array([x, y]), t)
        g_jet = oracle_g(x, y, t)
        assert abs(g - g_jet) <= 1e-9 * max(1.0, abs(g_jet))
        gv = mf.forcing_gvec(np.array([x, y]), t)
        gv_jet = oracle_gvec(x, y, t)
        assert np.abs(gv - gv_jet).max() <= 1e-9 * max(1.0, np.abs(gv_jet).max())


def test_exact_f_is_curl_of_A_via_jets():
    pts = sample_domain_points(60, seed=14)
    t = 0.9
    for x, y in pts:
        A1, A2 = helpers.A_jets(x, y, t)
        assert abs(mf.exact_f(np.array([x, y]), t) - (A2.gx - A1.gy)) <= 1e-10


def test_curl_identity():
    """curl(curl A) - curl f vanishes: jets give curl(curl A) exactly and
    f's gradient comes from fourth-order differences of the closed form."""
    pts = sample_domain_points(60, seed=21)
    t = 0.9
    for x, y in pts:
        A1, A2 = helpers.A_jets(x, y, t)
        curlcurl = np.array([A2.hxy - A1.hyy, -(A2.hxx - A1.hxy)])
        g_f = fd_gradient(lambda q: mf.exact_f(q, t), np.array([x, y]))
        curl_f = np.array([g_f[1], -g_f[0]])
        assert np.abs(curlcurl - curl_f).max() <= 1e-8 * max(1.0, np.abs(curl_f).max())


def test_boundary_compatibility():
    """grad(psi).n and A.n vanish on the boundary (psi equals v here, so
    its gradient evaluator is exact_grad_v)."""
    t = 1.0
    rs = np.linspace(0.013, 0.47, 50)
    # arm along theta = 0 (positive x1-axis), outward normal (0, -1)
    for r in rs:
        p = np.array([r, 0.0])
        assert abs(mf.exact_grad_v(p, t)[1]) <= 1e-10
        assert abs(mf.exact_A(p, t)[1]) <= 1e-10
    # arm along theta = 3*pi/2 (negative x2-axis), outward normal (1, 0)
    for r in rs:
        p = np.array([0.0, -r])
        assert abs(mf.exact_grad_v(p, t)[0]) <= 1e-10
        assert abs(mf.exact_A(p, t)[0]) <= 1e-10
    # outer boundary: everything sits outside the cutoff support
    outer = np.array([[0.5, 0.2], [-0.5, -0.3], [0.2, 0.5], [-0.2, -0.5]])
    assert np.abs(mf.exact_A(outer, t)).max() == 0.0
    assert np.abs(mf.exact_grad_v(outer, t)).max() == 0.0


def test_derivative_consistency_batch():
    """Every closed-form derivative consumed by the forcings agrees with
    central differences at 200 random points (spec invariant)."""
    pts = sample_domain_points(200, seed=77)
    t = 0.7
    worst = 0.0
    for p in pts:
        pairs = [
            (mf.exact_grad_u(p, t),
             fd_gradient(lambda q: mf.exact_u(q, t), p)),
            (mf.exact_grad_v(p, t),
             fd_gradient(lambda q: mf.exact_v(q, t), p)),
            (mf.exact_div_A(p, t),
             fd_gradient(lambda q: mf.exact_A(q, t)[..., 0], p)[0]
             + fd_gradient(lambda q: mf.exact_A(q, t)[..., 1], p)[1]),
        ]
        for closed, fd in pairs:
            err = np.max(np.abs(np.asarray(closed) - np.asarray(fd)))
            worst = max(worst, err / max(1.0, np.max(np.abs(fd))))
    assert worst <= 1e-6


def test_manufactured_case_initial_data():
    case = mf.ManufacturedCase()
    pts = np.array([[0.1, 0.2], [-0.3, -0.1]])
    assert np.all(case.psi0(pts) == 0)
    assert np.all(case.A0(pts) == 0)
    assert case.eta == 1.0 and case.kappa == 10.0
