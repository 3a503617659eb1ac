import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.acceptance import BOUNDARY_DATA, anharmonic_model, jacobi_green_error
from pathint.classical_jacobi import (ShootingError, backward_blocks, check_nondegenerate, free_action,
                                      harmonic_action, jacobi_blocks, jacobi_green, second_variation_matrix,
                                      solve_classical, ConjugatePointError)
from pathint.greens import discretize_kernel
from pathint.grid_paths import BoundaryFamily, TimeGrid

G1000 = TimeGrid(0.0, 1.0, 1000)


def test_free_particle_straight_line():
    sol = solve_classical(free_action(2), "PP", G1000, x_a=[0, 0], x_b=[1, 0])
    np.testing.assert_allclose(sol.x[:, 0], G1000.times, atol=1e-12)
    assert sol.action == pytest.approx(0.5, abs=1e-12)


def test_oscillator_rest_solution():
    sol = solve_classical(harmonic_action(1, 1.0), "PP", G1000, x_a=[0.0], x_b=[0.0])
    assert np.abs(sol.x).max() == 0.0 and sol.action == 0.0


def test_oscillator_action():
    sol = solve_classical(harmonic_action(1, 1.0), "PP", G1000, x_a=[0.0], x_b=[1.0])
    assert sol.action == pytest.approx(0.5 / np.tan(1.0), rel=1e-9)
    # central-difference EL residual is second order in dt
    assert sol.el_residual < 10 * G1000.dt**2


def test_free_blocks():
    model = free_action(1)
    b = jacobi_blocks(model, solve_classical(model, "PP", G1000, x_a=[0.0], x_b=[1.0]))
    np.testing.assert_allclose(b.J[:, 0, 0], G1000.times, atol=1e-13)
    assert np.all(b.K == 1.0) and np.all(b.L == 0.0)


def test_harmonic_blocks():
    model = harmonic_action(1, 1.0)
    b = jacobi_blocks(model, solve_classical(model, "PP", G1000, x_a=[0.0], x_b=[1.0]))
    np.testing.assert_allclose(b.K[:, 0, 0], np.cos(G1000.times), atol=1e-12)
    np.testing.assert_allclose(b.J[:, 0, 0], np.sin(G1000.times), atol=1e-12)


def test_initial_blocks_and_transposition():
    model = anharmonic_model()
    sol = solve_classical(model, "PP", G1000, **BOUNDARY_DATA["PP"])
    b = jacobi_blocks(model, sol)
    assert np.array_equal(b.phi[0], np.eye(4))
    for idx in (100, 500, 1000):
        assert np.abs(backward_blocks(model, sol, idx)[:2, :2].T - b.Kt[idx]).max() < 1e-8
    assert np.abs(b.wronskian() - b.wronskian()[0]).max() < 1e-12


def test_van_vleck_hessian_by_finite_differences():
    model = harmonic_action(1, 1.0)
    S = lambda a, c: solve_classical(model, "PP", G1000, x_a=[a], x_b=[c]).action
    e = 1e-3
    fd = (S(e, 1 + e) - S(e, 1 - e) - S(-e, 1 + e) + S(-e, 1 - e)) / (4 * e * e)
    b = jacobi_blocks(model, solve_classical(model, "PP", G1000, x_a=[0.0], x_b=[1.0]))
    assert b.action_hessian_ab[0, 0] == pytest.approx(fd, rel=1e-4)
    assert fd == pytest.approx(-1 / np.sin(1.0), rel=1e-6)


def test_free_green_matches_bridge_and_end_pinned():
    model = free_action(1)
    g = TimeGrid(0, 1, 100)
    b = jacobi_blocks(model, solve_classical(model, "PP", g, x_a=[0.0], x_b=[0.0]))
    assert jacobi_green(b, "PP", 0.25, 0.5)[0, 0] == pytest.approx(0.125, abs=1e-12)
    assert jacobi_green(b, "MP", 0.3, 0.7)[0, 0] == pytest.approx(0.3, abs=1e-12)


def test_harmonic_green_value():
    model = harmonic_action(1, 1.0)
    g = TimeGrid(0, 1, 2000)
    sol = solve_classical(model, "PP", g, x_a=[0.0], x_b=[0.0])
    exact = np.sin(0.25) * np.sin(0.5) / np.sin(1.0)
    assert jacobi_green(jacobi_blocks(model, sol), "PP", 0.25, 0.5)[0, 0] == pytest.approx(exact, rel=1e-9)
    inv = np.linalg.inv(second_variation_matrix(model, sol, "PP").matrix)
    assert inv[499, 999] == pytest.approx(exact, abs=5 * g.dt)


@pytest.mark.parametrize("kind", ["PP", "MP", "PM", "MM"])
def test_green_matches_second_variation_inverse(kind):
    g = TimeGrid(0, 1, 200)
    assert jacobi_green_error(anharmonic_model(), kind, g) < 5 * g.dt


def test_second_variation_reduces_to_kinetic_kernel():
    model = free_action(1)
    g = TimeGrid(0, 1, 50)
    sol = solve_classical(model, "PP", g, x_a=[0.0], x_b=[0.0])
    m = second_variation_matrix(model, sol, "PP").matrix
    np.testing.assert_array_equal(m, discretize_kernel(BoundaryFamily("ab"), g).matrix)


def test_second_variation_symmetric():
    model = anharmonic_model()
    g = TimeGrid(0, 1, 100)
    m = second_variation_matrix(model, solve_classical(model, "MM", g, **BOUNDARY_DATA["MM"]), "MM").matrix
    assert np.abs(m - m.T).max() < 1e-14 * np.abs(m).max()


def test_conjugate_point_detected():
    model = harmonic_action(1, np.pi)
    sol = solve_classical(model, "MP", G1000, p_a=[0.0], x_b=[0.0])
    with pytest.raises(ConjugatePointError):
        check_nondegenerate(jacobi_blocks(model, sol), "PP")


def test_boundary_data_checked():
    with pytest.raises((ValueError, ShootingError)):
        solve_classical(free_action(1), "PP", G1000, x_a=[0.0])


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2.5))
def test_oscillator_action_closed_form(xa, xb, T):
    model = harmonic_action(1, 1.0)
    sol = solve_classical(model, "PP", TimeGrid(0, T, 400), x_a=[xa], x_b=[xb])
    exact = ((xa**2 + xb**2) * np.cos(T) - 2 * xa * xb) / (2 * np.sin(T))
    assert sol.action == pytest.approx(exact, rel=1e-8, abs=1e-10)


@given(st.floats(0.1, 3.0))
def test_wronskian_is_conserved(omega):
    model = harmonic_action(2, omega)
    sol = solve_classical(model, "PP", TimeGrid(0, 1, 200), x_a=[0.1, 0.0], x_b=[0.0, 0.2])
    w = jacobi_blocks(model, sol).wronskian()
    assert np.abs(w - w[0]).max() < 1e-10
