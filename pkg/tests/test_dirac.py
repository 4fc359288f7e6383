import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfadjoint import dirac as dr
from selfadjoint.boundary import random_unitary
from selfadjoint.errors import BracketTooCoarse, NonUnitary, NotAdditive

from oracles import dirac_box_scheme, fourier_derivative_matrix


@pytest.mark.parametrize("n", [0, 1, 2, 5, 12])
def test_circle_spectrum_is_integer_lattice(n):
    res = dr.circle_dirac_spectrum(n)
    np.testing.assert_allclose(res.eigenvalues, np.arange(-n, n + 1), atol=1e-12)
    assert res.residuals.max() <= 1e-12


def test_circle_lichnerowicz_square():
    D = dr.momentum_matrix(9)
    sq = np.sort(np.linalg.eigvalsh(D @ D))
    np.testing.assert_allclose(sq, np.sort(np.arange(-4, 5) ** 2), atol=1e-11)
    # D^2 is the circle Laplacian -d^2/dtheta^2
    Dfd = fourier_derivative_matrix(9)
    np.testing.assert_allclose(D @ D, -Dfd @ Dfd, atol=1e-11)


def test_setup_invariants():
    s = dr.interval_setup(random_unitary(2, np.random.default_rng(0)))
    J = s.j_matrix
    np.testing.assert_allclose(J @ J, -np.eye(4), atol=1e-12)
    np.testing.assert_allclose(J @ s.h_plus_basis, 1j * s.h_plus_basis, atol=1e-10)
    np.testing.assert_allclose(J @ s.h_minus_basis, -1j * s.h_minus_basis, atol=1e-10)
    H = np.hstack([s.h_plus_basis, s.h_minus_basis])
    np.testing.assert_allclose(H.conj().T @ H, np.eye(4), atol=1e-12)
    # normalized with positive first nonzero component
    for v in np.hstack([s.h_plus_basis, s.h_minus_basis]).T:
        first = v[np.flatnonzero(np.abs(v) > 0)[0]]
        assert first.real > 0 and first.imag == 0


def test_setup_rejects_bad_inputs():
    with pytest.raises(NonUnitary):
        dr.interval_setup(np.array([[1, 0], [0, 2]]))
    s = dr.interval_setup(np.eye(2))
    with pytest.raises(ValueError):
        dr.DiracBoundarySetup(np.eye(4), s.h_plus_basis, s.h_minus_basis, np.eye(2))


def test_setup_json_round_trip():
    s = dr.interval_setup(random_unitary(2, np.random.default_rng(3)))
    back = dr.DiracBoundarySetup.from_dict(json.loads(s.to_json()))
    np.testing.assert_array_equal(back.u_map, s.u_map)
    np.testing.assert_array_equal(back.h_plus_basis, s.h_plus_basis)
    with pytest.raises(ValueError):
        dr.DiracBoundarySetup.from_dict({**s.to_dict(), "extra": 1})


def test_boundary_form_antisymmetry():
    s = dr.interval_setup(np.eye(2))
    rng = np.random.default_rng(5)
    for _ in range(100):
        phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert abs(s.boundary_form(phi, psi) + np.conj(s.boundary_form(psi, phi))) <= 1e-14
        # the form vanishes on the U-domain
        a, b = s.domain_vector(phi[:2]), s.domain_vector(psi[:2])
        assert abs(s.boundary_form(a, b)) <= 1e-14


def smooth_field(rng, L, n_modes=4):
    """Random trigonometric spinor field with its exact derivative."""
    c = rng.standard_normal((n_modes, 2)) + 1j * rng.standard_normal((n_modes, 2))
    k = np.arange(1, n_modes + 1) * np.pi / L

    def f(x):
        return np.sin(np.outer(x, k)) @ c + np.cos(np.outer(x, k)) @ (c / 2)

    def df(x):
        return (np.cos(np.outer(x, k)) * k) @ c - (np.sin(np.outer(x, k)) * k) @ (c / 2)

    return f, df


def domain_field(setup, L, rng):
    """Smooth field plus a linear correction that installs admissible boundary values."""
    f, df = smooth_field(rng, L)
    phi = setup.domain_vector(rng.standard_normal(2) + 1j * rng.standard_normal(2))
    d0 = phi[:2] - f(np.array([0.0]))[0]
    dL = phi[2:] - f(np.array([L]))[0]

    def xi(x):
        t = (x / L)[:, None]
        return f(x) + (1 - t) * d0 + t * dL

    def dxi(x):
        return df(x) + (dL - d0) / L

    return xi, dxi


def test_dirac_symmetric_on_u_domain():
    L = 1.7
    x, w = np.polynomial.legendre.leggauss(80)
    x = 0.5 * L * (x + 1)
    w = 0.5 * L * w
    rng = np.random.default_rng(8)
    for _ in range(20):
        setup = dr.interval_setup(random_unitary(2, rng))
        xi, dxi = domain_field(setup, L, rng)
        ze, dze = domain_field(setup, L, rng)
        Dxi = 1j * dxi(x) @ dr.SIGMA1.T
        Dze = 1j * dze(x) @ dr.SIGMA1.T
        ip = lambda a, b: np.sum(w * np.sum(np.conj(a) * b, axis=1))
        defect = abs(ip(Dxi, ze(x)) - ip(xi(x), Dze))
        scale = math.sqrt(ip(xi(x), xi(x)).real * ip(ze(x), ze(x)).real)
        assert defect <= 1e-8 * scale
        # without the condition the boundary term survives
        f, df = smooth_field(rng, L)
        Df = 1j * df(x) @ dr.SIGMA1.T
        assert abs(ip(Df, ze(x)) - ip(f(x), Dze)) > 1e-3


def test_green_formula_matches_boundary_form():
    L = 1.0
    x, w = np.polynomial.legendre.leggauss(60)
    x, w = 0.5 * L * (x + 1), 0.5 * L * w
    rng = np.random.default_rng(9)
    setup = dr.interval_setup(np.eye(2))
    f, df = smooth_field(rng, L)
    g, dg = smooth_field(rng, L)
    ip = lambda a, b: np.sum(w * np.sum(np.conj(a) * b, axis=1))
    lhs = ip(1j * df(x) @ dr.SIGMA1.T, g(x)) - ip(f(x), 1j * dg(x) @ dr.SIGMA1.T)
    ends = np.array([0.0, L])
    rhs = setup.boundary_form(f(ends).ravel(), g(ends).ravel())
    assert abs(lhs - rhs) <= 1e-10


@pytest.mark.parametrize("tau0, tau_l, L", [(0.3, 0.9, 1.0), (-1.2, 2.0, 2.5), (0.0, 0.0, 1.0)])
def test_decoupled_lattice(tau0, tau_l, L):
    res = dr.interval_dirac_spectrum(L, dr.decoupled_setup(tau0, tau_l), bracket=(-15, 15))
    ks = np.arange(-30, 31)
    lattice = dr.decoupled_lattice(tau0, tau_l, L, ks)
    lattice = lattice[(lattice >= -15) & (lattice <= 15)]
    np.testing.assert_allclose(res.eigenvalues, lattice, atol=1e-10)
    np.testing.assert_allclose(np.diff(res.eigenvalues), math.pi / L, atol=1e-9)


def test_decoupled_lattice_against_fd():
    setup = dr.decoupled_setup(0.4, -1.1)
    fd = dirac_box_scheme(1.0, setup.condition)
    ex = dr.interval_dirac_spectrum(1.0, setup, 10, bracket=(-40, 40)).eigenvalues
    np.testing.assert_allclose(fd, ex, rtol=1e-4)


def test_random_unitaries_against_fd_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        setup = dr.interval_setup(random_unitary(2, rng))
        res = dr.interval_dirac_spectrum(1.0, setup, 10, bracket=(-40, 40))
        fd = dirac_box_scheme(1.0, setup.condition)
        np.testing.assert_allclose(res.eigenvalues, fd, rtol=1e-4)
        np.testing.assert_allclose(res.eigenvalues, dirac_box_scheme(
            1.0, setup.condition, unwarp=True), rtol=1e-9)


def test_eigenfunctions_satisfy_condition():
    rng = np.random.default_rng(4)
    setup = dr.interval_setup(random_unitary(2, rng))
    L = 1.3
    res = dr.interval_dirac_spectrum(L, setup, 6)
    for E, xi0 in zip(res.eigenvalues, res.eigenvectors.T):
        ends = dr.eigenfunction(E, xi0, np.array([0.0, L])).ravel()
        assert np.linalg.norm(setup.condition @ ends) <= 1e-9
    assert res.residuals.max() <= 1e-9


def test_bracket_too_coarse():
    # roots 0 and pi share the single scan cell [-0.5, 3.5]
    setup = dr.decoupled_setup(0.0, 0.0)
    with pytest.raises(BracketTooCoarse):
        dr.interval_dirac_spectrum(1.0, setup, bracket=(-0.5, 3.5), scan_cells=1, max_halvings=0)
    # one halving separates them
    res = dr.interval_dirac_spectrum(1.0, setup, bracket=(-0.5, 3.5), scan_cells=1, max_halvings=1)
    np.testing.assert_allclose(res.eigenvalues, [0, math.pi], atol=1e-10)


def test_position_split_example():
    s = dr.build_sector_split("position", grid=[-1, -0.5, 0.5, 1])
    np.testing.assert_array_equal(s.p_plus, np.diag([0.0, 0, 1, 1]))
    np.testing.assert_array_equal(s.t_minus, np.diag([-1, -0.5]))
    np.testing.assert_array_equal(s.t_plus, np.diag([0.5, 1]))
    lp, lm = s.sector_bounds()
    assert lp >= 0 and lm <= 0


def test_position_zero_goes_to_minus_sector():
    s = dr.build_sector_split("position", grid=np.linspace(-1, 1, 5))
    assert s.p_minus[2, 2] == 1 and s.p_plus[2, 2] == 0
    with pytest.raises(ValueError):
        dr.build_sector_split("position", grid=[-1, 0.5])


def test_momentum_split_example():
    s = dr.build_sector_split("momentum", n_fourier=5)
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(s.t_plus)), [1, 2], atol=1e-12)
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(s.t_minus)), [-2, -1, 0], atol=1e-12)
    lp, lm = s.sector_bounds()
    assert lp >= 0 and lm <= 0


@pytest.mark.parametrize("split", [
    dr.build_sector_split("position", grid=np.linspace(-2, 2, 41)),
    dr.build_sector_split("position", grid=np.linspace(-2, 2, 40), weights=np.full(40, 0.1)),
    dr.build_sector_split("momentum", n_fourier=15),
])
def test_split_projector_invariants(split):
    P, M = split.p_plus, split.p_minus
    I = np.eye(split.dim)
    for A, B in ((P @ P, P), (M @ M, M), (P @ M, 0 * I), (P + M, I)):
        assert np.abs(A - B).max() <= 1e-12
    assert np.linalg.norm(P @ split.q_matrix @ M) <= 1e-10
    assert dr.additivity_defect(split, 100, rng=0) <= 1e-12


def test_reconstruct_position_is_exact():
    x = np.linspace(-3, 3, 31)
    T = dr.reconstruct_operator(dr.build_sector_split("position", grid=x), rng=1)
    assert np.array_equal(T, np.diag(x))


def test_reconstruct_momentum_matches_fourier_derivative():
    n = 11
    T = dr.reconstruct_operator(dr.build_sector_split("momentum", n_fourier=n), rng=2)
    np.testing.assert_allclose(T, 1j * fourier_derivative_matrix(n), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["position", "momentum"]))
def test_graph_norm_positive(seed, kind):
    split = (dr.build_sector_split("position", grid=np.linspace(-1, 1, 20)) if kind == "position"
             else dr.build_sector_split("momentum", n_fourier=9))
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(split.dim) + 1j * rng.standard_normal(split.dim)
    assert split.graph_norm_sq(phi) > 0
    assert split.graph_norm_sq(phi) >= split.inner(phi, phi).real - 1e-12


def test_custom_split():
    rng = np.random.default_rng(6)
    V = random_unitary(6, rng)
    lam = np.array([3.0, 1.0, 0.5, -0.2, -1.0, -4.0])
    Q = (V * lam) @ V.conj().T
    P = V[:, :3] @ V[:, :3].conj().T
    s = dr.build_sector_split("custom", q_matrix=Q, p_plus=P)
    np.testing.assert_allclose(np.linalg.eigvalsh(s.t_plus), [0.5, 1, 3], atol=1e-12)
    assert dr.additivity_defect(s, 100, rng=0) <= 1e-12
    T = dr.reconstruct_operator(s, rng=3)
    np.testing.assert_allclose(T, Q, atol=1e-12)
    mixed = V[:, :1] + V[:, 4:5]
    bad = mixed @ mixed.conj().T / 2
    with pytest.raises(NotAdditive):
        dr.build_sector_split("custom", q_matrix=Q, p_plus=bad)
