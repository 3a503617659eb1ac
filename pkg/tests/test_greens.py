import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.greens import (GreenFunction, decomposition_identity_error, discretize_kernel, green_closed_form,
                            projector_green, verify_inverse)
from pathint.grid_paths import BoundaryFamily, MetricMatrix, TimeGrid

UNIT = TimeGrid(0.0, 1.0, 200)
unit_time = st.floats(0.0, 1.0)


def test_closed_form_examples():
    assert green_closed_form(BoundaryFamily("a"), TimeGrid(0, 3, 3), 1.0, 2.0) == 1.0
    assert green_closed_form(BoundaryFamily("b"), UNIT, 0.3, 0.7) == pytest.approx(0.3, abs=1e-15)
    assert green_closed_form(BoundaryFamily("ab"), UNIT, 0.25, 0.5) == 0.125
    assert green_closed_form(BoundaryFamily("0", 0.5), UNIT, 0.2, 0.8) == 0.0


def test_outside_interval_rejected():
    with pytest.raises(ValueError):
        green_closed_form(BoundaryFamily("a"), UNIT, 1.5, 0.2)


def test_one_free_node_kernel():
    g = TimeGrid(0, 1, 2)
    ker = discretize_kernel(BoundaryFamily("ab"), g)
    np.testing.assert_allclose(ker.matrix, [[4.0]])
    assert np.linalg.inv(ker.matrix)[0, 0] == pytest.approx(0.25)


def test_two_free_node_kernel():
    g = TimeGrid(0, 1, 2)
    ker = discretize_kernel(BoundaryFamily("a"), g)
    np.testing.assert_allclose(ker.matrix, [[4, -2], [-2, 2]])
    np.testing.assert_allclose(np.linalg.inv(ker.matrix), [[0.5, 0.5], [0.5, 1.0]])


def test_metric_scaling_is_linear():
    g = TimeGrid(0, 1, 10)
    fam = BoundaryFamily("ab")
    k1 = discretize_kernel(fam, g).matrix
    k2 = discretize_kernel(fam, g, MetricMatrix.identity(1, 2.0)).matrix
    np.testing.assert_allclose(k2, 2 * k1)
    np.testing.assert_allclose(np.linalg.inv(k2), np.linalg.inv(k1) / 2)


@pytest.mark.parametrize("kind", ["a", "b", "ab", "0"])
@pytest.mark.parametrize("d", [1, 2])
def test_discrete_inverse_matches_closed_form(kind, d):
    fam = BoundaryFamily(kind, 0.5 if kind == "0" else None)
    metric = MetricMatrix.identity(1) if d == 1 else MetricMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]))
    err = verify_inverse(discretize_kernel(fam, UNIT, metric), GreenFunction(fam, UNIT, metric))
    assert err < (1e-10 if kind == "ab" else 5 * UNIT.dt)


def test_interior_pin_decouples_sides():
    fam = BoundaryFamily("0", 0.5)
    g = TimeGrid(0, 1, 10)
    inv = np.linalg.inv(discretize_kernel(fam, g).matrix)
    left = fam.free(g) < 5
    assert np.all(inv[np.ix_(left, ~left)] == 0.0)


def test_decomposition_identity():
    assert decomposition_identity_error(UNIT, 50) < 1e-12


def test_projector_double_sum_reproduces_bridge_green():
    g = TimeGrid(0, 1, 40)
    t = g.times
    exact = green_closed_form(BoundaryFamily("ab"), g, t[:, None], t[None, :])
    assert np.abs(projector_green(g) - exact).max() < 1e-12


@given(st.sampled_from(["a", "b", "ab", "0"]), unit_time, unit_time)
def test_green_is_symmetric(kind, t, u):
    fam = BoundaryFamily(kind, 0.4 if kind == "0" else None)
    assert green_closed_form(fam, UNIT, t, u) == pytest.approx(green_closed_form(fam, UNIT, u, t), abs=1e-15)


@given(st.sampled_from(["a", "b", "ab"]), unit_time)
def test_green_vanishes_at_pins(kind, u):
    fam = BoundaryFamily(kind)
    for node in fam.pinned(UNIT):
        assert green_closed_form(fam, UNIT, UNIT.times[node], u) == 0.0


@given(st.sampled_from(["a", "b", "ab", "0"]), st.lists(unit_time, min_size=2, max_size=6, unique=True))
def test_green_matrix_is_positive_semidefinite(kind, ts):
    fam = BoundaryFamily(kind, 0.4 if kind == "0" else None)
    ts = np.array(ts)
    g = green_closed_form(fam, UNIT, ts[:, None], ts[None, :])
    assert np.linalg.eigvalsh(g).min() > -1e-12
