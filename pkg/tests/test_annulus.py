import math

import numpy as np
import pytest

from lefsolve.annulus import (angular_variance, build_annulus_grid, is_m_matrix,
                              laplacian_matrix, monotone_iterate, poisson_solve,
                              radial_supersolution, residual_annulus, supersolution_defect)
from lefsolve.coeff import parse_field
from lefsolve.errors import NoConvergence, VerificationFailure

from conftest import R4, make_spec


def test_grid_nodes_log_uniform():
    g = build_annulus_grid(2.0, 32.0, 5, 4)
    np.testing.assert_allclose(g.r, [2, 4, 8, 16, 32], rtol=1e-14)
    np.testing.assert_allclose(g.theta, [0, math.pi / 2, math.pi, 3 * math.pi / 2])


@pytest.mark.parametrize("args", [(2.0, 2.0, 17, 16), (2.0, 1.0, 17, 16), (2.0, 8.0, 2, 16),
                                  (2.0, 8.0, 17, 15), (0.0, 8.0, 17, 16)])
def test_invalid_grids(args):
    with pytest.raises(ValueError):
        build_annulus_grid(*args)


def test_solvers_need_full_size_grid():
    with pytest.raises(ValueError):
        poisson_solve(build_annulus_grid(2.0, 32.0, 5, 4), np.zeros((5, 4)), 1.0, 1.0)


def test_operator_is_m_matrix():
    A = laplacian_matrix(build_annulus_grid(2.0, 64.0, 33, 16))
    assert is_m_matrix(A)
    assert abs(A - A.T).max() == 0


def test_constant_boundary_data():
    g = build_annulus_grid(2.0, 64.0, 65, 32)
    w = poisson_solve(g, np.zeros((65, 32)), 1.0, 1.0)
    np.testing.assert_allclose(w, 1.0, atol=1e-9)


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_log_harmonic_profile(backend):
    g = build_annulus_grid(2.0, 64.0, 257, 64)
    a, b = 0.5, 2.0
    w = poisson_solve(g, np.zeros((257, 64)), a, b, lin_tol=1e-12, backend=backend)
    exact = a + (b - a) * np.log(g.r / 2.0) / math.log(32.0)
    assert np.max(np.abs(w - exact[:, None])) <= 1e-6


def _radial_source_error(n_r):
    # -Lap w = r^-4 with zero data: w = -e^{-2s}/4 + A s + B in s = ln r
    g = build_annulus_grid(2.0, 64.0, n_r, 16)
    R, _ = g.mesh()
    w = poisson_solve(g, R ** -4.0, 0.0, 0.0, lin_tol=1e-13)
    s0, s1 = g.s[0], g.s[-1]
    f = lambda s: -np.exp(-2 * s) / 4
    slope = (f(s0) - f(s1)) / (s1 - s0)
    exact = f(g.s) + slope * (g.s - s0) - f(s0)
    return np.max(np.abs(w - exact[:, None]))


def test_radial_source_against_closed_form():
    coarse, fine = _radial_source_error(129), _radial_source_error(257)
    assert fine <= 5e-6
    assert coarse / fine == pytest.approx(4.0, rel=0.05)


def test_zero_problem_converges_in_one_step(zero_spec):
    g = build_annulus_grid(2.0, 64.0, 65, 16)
    sol = monotone_iterate(zero_spec, g, np.ones((65, 16)), np.ones((65, 16)))
    assert sol.outer_iterations == 1
    np.testing.assert_allclose(sol.u, 1.0, atol=1e-9)
    assert max(residual_annulus(sol, zero_spec)) <= 1e-8


def test_radial_data_matches_radial_solver(radial_annulus, coupled_spec):
    sup, sol = radial_annulus
    assert sol.monotonicity_defect >= -1e-10
    assert sol.super_violation <= 1e-10
    ref = sup.u[:, :1]
    rel = np.max(np.abs(sol.u - ref) / ref)
    assert rel <= 5e-3
    assert angular_variance(sol.u) <= 1e-16
    assert np.all(sol.u > 0) and np.all(sol.v > 0)
    assert max(residual_annulus(sol, coupled_spec)) <= 1e-3


def test_supersolution_is_valid(radial_annulus, coupled_spec):
    sup, _ = radial_annulus
    assert supersolution_defect(coupled_spec, sup.grid, sup.u, sup.v) >= -1e-8
    np.testing.assert_allclose(sup.grid.r[0], 2.0)


def test_non_radial_sandwich(angular_annulus):
    spec, sup, sol = angular_annulus
    assert sol.monotonicity_defect >= -1e-10
    assert np.all(sol.u > 0) and np.all(sol.v > 0)
    assert np.all(sol.u <= sup.u + 1e-10) and np.all(sol.v <= sup.v + 1e-10)
    assert angular_variance(sol.u) > 0
    assert max(residual_annulus(sol, spec)) <= 1e-3


def test_residual_second_order_under_refinement(coupled_spec):
    res = []
    for n_r in (65, 129):
        sup = radial_supersolution(coupled_spec, n_r=n_r, n_theta=16, r_outer=64.0)
        sol = monotone_iterate(coupled_spec, sup.grid, sup.u, sup.v)
        res.append(residual_annulus(sol, coupled_spec)[0])
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.3)


def test_rejects_non_supersolution(coupled_spec):
    g = build_annulus_grid(2.0, 64.0, 33, 16)
    with pytest.raises(VerificationFailure):
        monotone_iterate(coupled_spec, g, np.ones((33, 16)), np.ones((33, 16)))


def test_outer_iteration_cap(coupled_spec):
    sup = radial_supersolution(coupled_spec, n_r=33, n_theta=16, r_outer=64.0)
    with pytest.raises(NoConvergence):
        monotone_iterate(coupled_spec, sup.grid, sup.u, sup.v, max_outer=2)


def test_backends_agree_on_poisson():
    g = build_annulus_grid(2.0, 64.0, 65, 32)
    R, TH = g.mesh()
    rhs = (2 + np.cos(TH)) * R ** -4.0
    a = poisson_solve(g, rhs, 1.0, 0.5, lin_tol=1e-12, backend="numba")
    b = poisson_solve(g, rhs, 1.0, 0.5, lin_tol=1e-12, backend="numpy")
    np.testing.assert_allclose(a, b, atol=1e-11)
