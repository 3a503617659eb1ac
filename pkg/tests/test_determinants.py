import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.classical_jacobi import ConjugatePointError, free_action, harmonic_action, jacobi_blocks, solve_classical
from pathint.determinants import det_by_jacobi, det_by_limit, det_by_log_derivative, morse_index
from pathint.grid_paths import BoundaryFamily, MetricMatrix, TimeGrid

ZAB, ZB = BoundaryFamily("ab"), BoundaryFamily("b")
G2000 = TimeGrid(0.0, 1.0, 2000)


def _pp(omega, n=1000, kind="PP", T=1.0):
    model = harmonic_action(1, omega)
    g = TimeGrid(0.0, T, n)
    if kind == "PP":
        return model, solve_classical(model, "PP", g, x_a=[0.0], x_b=[0.0])
    return model, solve_classical(model, "MP", g, p_a=[0.0], x_b=[0.0])


def test_zero_perturbation():
    r = det_by_limit(lambda t: 1.0, ZAB, TimeGrid(0, 1, 50), nu=0.0)
    assert r.value == pytest.approx(1.0, abs=1e-12) and r.morse_index == 0


def test_diffusive_sign_gives_sinh():
    assert det_by_limit(lambda t: 1.0, ZAB, G2000).value == pytest.approx(np.sinh(1.0), rel=1e-3)


def test_oscillatory_sign_gives_sin():
    r = det_by_limit(lambda t: -1.0, ZAB, G2000)
    assert r.value == pytest.approx(np.sin(1.0), rel=1e-3) and r.morse_index == 0


def test_index_three_at_three_and_a_half_pi():
    w = 3.5 * np.pi
    r = det_by_limit(lambda t: -w**2, ZAB, TimeGrid(0, 1, 1000))
    assert r.morse_index == 3
    assert r.value == pytest.approx(np.sin(w) / w, rel=1e-3)


@pytest.mark.parametrize("wt,index", [(0.5 * np.pi, 0), (1.5 * np.pi, 1), (3.5 * np.pi, 3)])
def test_morse_index(wt, index):
    assert morse_index(lambda t: -wt**2, ZAB, TimeGrid(0, 1, 1000)) == index
    model, sol = _pp(wt, 2000)
    assert det_by_jacobi(jacobi_blocks(model, sol), "PP").morse_index == index


def test_isotropic_two_dimensional_index_counts_multiplicity():
    w = 3.5 * np.pi
    model = harmonic_action(2, w)
    sol = solve_classical(model, "PP", TimeGrid(0, 1, 2000), x_a=[0.0, 0.0], x_b=[0.0, 0.0])
    r = det_by_jacobi(jacobi_blocks(model, sol), "PP")
    assert r.morse_index == 6
    assert r.value == pytest.approx((np.sin(w) / w) ** 2, rel=1e-6)


def test_free_particle_momentum_position():
    model = free_action(1)
    sol = solve_classical(model, "MP", TimeGrid(0, 1, 100), p_a=[0.3], x_b=[1.0])
    assert det_by_jacobi(jacobi_blocks(model, sol), "MP").value == pytest.approx(1.0, abs=1e-14)


def test_momentum_position_gives_cos():
    model, sol = _pp(1.0, kind="MP")
    assert det_by_jacobi(jacobi_blocks(model, sol), "MP").value == pytest.approx(np.cos(1.0), rel=1e-9)
    # the eigenvalue route with a free end at t_a agrees
    assert det_by_limit(lambda t: -1.0, ZB, TimeGrid(0, 1, 500)).value == pytest.approx(np.cos(1.0), rel=1e-3)


@pytest.mark.parametrize("wt", [0.5, 1.0, 2.0])
def test_three_routes_agree(wt):
    model, sol = _pp(wt)
    a = det_by_limit(lambda t: -wt**2, ZAB, TimeGrid(0, 1, 500)).value
    b = det_by_jacobi(jacobi_blocks(model, sol), "PP").value
    c = det_by_log_derivative(model, sol, "PP", n_nu=50).value
    for x, y in ((a, b), (b, c), (a, c)):
        assert x == pytest.approx(y, rel=5e-3)


def test_log_derivative_trivial_and_linear():
    model, sol = _pp(1.0, 400)
    assert det_by_log_derivative(model, sol, "PP", nu_max=0.0).value == 1.0
    # ln Det ~ nu Tr(Q/Q0) = -nu omega^2 int t(1-t) dt = -nu/6
    nu = 1e-3
    val = np.log(det_by_log_derivative(model, sol, "PP", nu_max=nu).value)
    assert abs(val + nu / 6) < 10 * nu**2


def test_log_derivative_refuses_sign_change():
    model, sol = _pp(2.0, 400, kind="MP")
    with pytest.raises(ConjugatePointError):
        det_by_log_derivative(model, sol, "MP")


def test_singular_form_detected():
    with pytest.raises(ConjugatePointError):
        model, sol = _pp(np.pi, 1000)
        det_by_jacobi(jacobi_blocks(model, sol), "PP")


def test_matrix_metric_limit():
    h = MetricMatrix(np.diag([1.0, 4.0]))
    r = det_by_limit(lambda t: -np.eye(2), ZAB, TimeGrid(0, 1, 1000), h)
    assert r.value == pytest.approx(np.sin(1.0) * np.sin(0.5) / 0.5, rel=1e-4)


@given(st.floats(0.05, 2.5))
def test_limit_matches_eigenvalue_product(w):
    r = det_by_limit(lambda t: -w**2, ZAB, TimeGrid(0, 1, 400))
    assert r.value == pytest.approx(np.sin(w) / w, rel=1e-4)


@given(st.floats(0.05, 1.5))
def test_diffusive_limit_positive_and_index_free(w):
    r = det_by_limit(lambda t: w**2, ZAB, TimeGrid(0, 1, 400))
    assert r.morse_index == 0
    assert r.value == pytest.approx(np.sinh(w) / w, rel=1e-4)
