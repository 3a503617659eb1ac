import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pathint.driven_flow import (DomainError, DrivenSystem, abelian_gauge, chain_rule_check, develop,
                                 flat_translations, frame_bundle_s2, integrate, multistep_sigma, polar_plane,
                                 sphere_action, sphere_points)
from pathint.grid_paths import BoundaryFamily, DiscretePath, TimeGrid, quadratic_variation
from pathint.propagators import gauge_phase_along

ZA, ZB = BoundaryFamily("a"), BoundaryFamily("b")
E = np.eye(3)
FRAME0 = np.concatenate([E[2], E[0], E[1]])
small = st.floats(-0.3, 0.3, allow_nan=False)


def _random_path(seed, n=200, d=2, scale=0.05):
    rng = np.random.default_rng(seed)
    z = np.cumsum(rng.normal(0, scale, (n + 1, d)), axis=0)
    z -= z[0]
    return DiscretePath(TimeGrid(0, 1, n), ZA, z)


def test_flat_translation_is_exact():
    z = _random_path(0)
    res = integrate(flat_translations(2), z, [1.0, -2.0])
    np.testing.assert_allclose(res.trajectory, z.samples + [1.0, -2.0], atol=1e-14)


def test_polar_plane_matches_cartesian():
    g = TimeGrid(0, 1, 1000)
    z = DiscretePath.from_function(g, ZA, lambda t: [np.sin(2 * t), 0.5 * t])
    x0 = np.array([1.0, 0.3])
    res = integrate(polar_plane(), z, x0)
    r, th = res.trajectory[:, 0], res.trajectory[:, 1]
    cart = np.c_[r * np.cos(th), r * np.sin(th)]
    exact = np.array([np.cos(0.3), np.sin(0.3)]) + z.samples
    assert np.abs(cart - exact).max() < 1e-5


def test_polar_plane_backward_from_tb():
    g = TimeGrid(0, 1, 1000)
    z = DiscretePath.from_function(g, ZB, lambda t: [0.4 * (t - 1), 0.2 * (1 - t)])
    res = integrate(polar_plane(), z, [2.0, 0.0], direction="backward")
    start = res.start
    cart = start[0] * np.array([np.cos(start[1]), np.sin(start[1])])
    np.testing.assert_allclose(cart, [2.0 - 0.4, 0.2], atol=1e-6)


def test_leaving_chart_raises():
    g = TimeGrid(0, 1, 100)
    z = DiscretePath.from_function(g, ZA, lambda t: [-2 * t, 0.0])
    with pytest.raises(DomainError):
        integrate(polar_plane(r_min=0.05), z, [1.0, 0.0])


def test_gauge_phase_equals_c_times_winding():
    g = TimeGrid(0, 1, 2000)
    t = g.times
    th = 0.2 + 3 * np.pi * t
    rad = 1 + 0.3 * np.sin(3 * t)
    phase, expected = gauge_phase_along(0.37, np.c_[rad * np.cos(th), rad * np.sin(th)], g)
    assert phase == pytest.approx(expected, rel=1e-5)


def test_commuting_scalar_flow():
    # dx = x dz, so x(t) = x0 exp(z(t))
    sys = DrivenSystem(1, 1, lambda x: x[..., :, None], flows=[lambda x, r: x * np.exp(r)])
    z = DiscretePath.from_function(TimeGrid(0, 1, 4000), ZA, lambda t: np.sin(3 * t) - 0.5 * t)
    res = integrate(sys, z, [2.0])
    np.testing.assert_allclose(res.endpoint, 2.0 * np.exp(z.samples[-1]), rtol=1e-6)
    assert np.allclose(multistep_sigma(sys, z, [2.0], 3), 2.0 * np.exp(z.samples[-1]), rtol=1e-12)


def test_multistep_flat_is_exact_for_any_n():
    z = _random_path(2)
    for n in (1, 3, 17):
        np.testing.assert_allclose(multistep_sigma(flat_translations(2), z, [0.0, 0.0], n), z.samples[-1],
                                   atol=1e-14)


def test_multistep_single_field_matches_euler():
    sys = DrivenSystem(1, 1, lambda x: x[..., :, None], flows=[lambda x, r: x + x * r])
    z = _random_path(3, n=50, d=1)
    euler = integrate(sys, z, [1.0], method="euler").endpoint
    np.testing.assert_allclose(multistep_sigma(sys, z, [1.0], 50), euler, rtol=1e-13)


def test_multistep_self_convergence_order():
    z = DiscretePath.from_function(TimeGrid(0, 1, 4096), ZA, lambda t: [0.8 * t, 0.6 * t])
    sys = frame_bundle_s2()
    ks = np.array([16, 32, 64, 128, 256])
    pts = [multistep_sigma(sys, z, FRAME0, k)[:3] for k in ks]
    diffs = [np.linalg.norm(pts[i] - pts[i + 1]) for i in range(len(ks) - 1)]
    order = -np.polyfit(np.log(ks[:-1]), np.log(diffs), 1)[0]
    assert abs(order - 1.0) <= 0.2


def test_great_circle_development():
    g = TimeGrid(0, np.pi, 10_000)
    z = DiscretePath.from_function(g, ZB, lambda t: [t - np.pi, 0.0])
    res = develop(z, E[2], (E[0], E[1]))
    s = g.times - np.pi
    exact = np.outer(np.cos(s), E[2]) + np.outer(np.sin(s), E[0])
    assert np.abs(sphere_points(res) - exact).max() < 1e-6
    np.testing.assert_allclose(sphere_points(res)[0], -E[2], atol=1e-6)
    assert sphere_action(res) == pytest.approx(quadratic_variation(z), rel=1e-6)


def test_zero_path_develops_to_constant():
    g = TimeGrid(0, 1, 10)
    res = develop(DiscretePath(g, ZB, np.zeros((11, 2))), E[0], (E[1], E[2]))
    assert np.all(sphere_points(res) == E[0])


def test_develop_rejects_bad_frame():
    g = TimeGrid(0, 1, 10)
    with pytest.raises(ValueError):
        develop(DiscretePath(g, ZB, np.zeros((11, 2))), E[0], (E[0], E[2]))


@pytest.mark.parametrize("system,x0", [(flat_translations(2), [0.0, 0.0]), (polar_plane(), [1.0, 0.0]),
                                       (abelian_gauge(0.3), [1.0, 0.5, 0.0]), (frame_bundle_s2(), FRAME0)])
def test_chain_rule_bitwise(system, x0):
    assert chain_rule_check(system, _random_path(4), x0, 0.35) == 0.0


def test_batched_integration_matches_single():
    zs = np.stack([_random_path(s).samples for s in range(3)])
    g = TimeGrid(0, 1, 200)
    batch = integrate(frame_bundle_s2(), zs, FRAME0, grid=g).endpoint
    for k in range(3):
        np.testing.assert_array_equal(batch[k], integrate(frame_bundle_s2(), zs[k], FRAME0, grid=g).endpoint)


@given(arrays(float, (30, 2), elements=small))
def test_development_stays_orthonormal(steps):
    z = np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    z -= z[-1]
    res = develop(DiscretePath(TimeGrid(0, 1, 30), ZB, z), E[2], (E[0], E[1]))
    fr = res.endpoint.reshape(3, 3)
    assert np.abs(fr @ fr.T - np.eye(3)).max() < 1e-10


@given(arrays(float, (20, 2), elements=small), st.integers(1, 19))
def test_chain_rule_property(steps, k):
    z = np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    g = TimeGrid(0, 1, 20)
    assert chain_rule_check(frame_bundle_s2(), z, FRAME0, g.times[k], grid=g) < 1e-14
