import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.gaussian_mc import (PathFunctional, PathSampler, characteristic_functional, constant_functional,
                                 covariance_oracle, endpoint_fixing_check, expectation, feynman_kac,
                                 heat_oracle_cn, product_functional, sample_paths)
from pathint.grid_paths import OSCILLATORY, BoundaryFamily, MetricMatrix, TimeGrid

G20 = TimeGrid(0.0, 1.0, 20)
N = 100_000


def test_count_zero_rejected():
    with pytest.raises(ValueError):
        sample_paths(PathSampler(BoundaryFamily("a"), G20), 0)


def test_oscillatory_regime_rejected():
    with pytest.raises(ValueError):
        PathSampler(BoundaryFamily("a"), G20, regime=OSCILLATORY)


def test_indefinite_metric_rejected():
    with pytest.raises(ValueError):
        PathSampler(BoundaryFamily("a"), G20, MetricMatrix(np.diag([1.0, -1.0])))


def test_samples_respect_pins():
    for kind, t0 in (("a", None), ("b", None), ("ab", None), ("0", 0.3)):
        fam = BoundaryFamily(kind, t0)
        z = sample_paths(PathSampler(fam, G20, rng_seed=3), 50)
        assert z.shape == (50, 21, 1)
        assert np.all(z[:, fam.pinned(G20)] == 0.0)


def test_variance_at_endpoint_za():
    s = PathSampler(BoundaryFamily("a"), G20, rng_seed=11)
    mean, err = expectation(s, product_functional(20, 20), N)
    assert abs(mean - 1 / (2 * np.pi)) < 3 * err


def test_bridge_covariance_example():
    s = PathSampler(BoundaryFamily("ab"), G20, rng_seed=12)
    mean, err = expectation(s, product_functional(5, 10), N)
    assert covariance_oracle(BoundaryFamily("ab"), G20, 5, 10) == pytest.approx(0.125 / (2 * np.pi))
    assert abs(mean - 0.125 / (2 * np.pi)) < 3 * err


def test_matrix_metric_covariance():
    h = MetricMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]))
    s = PathSampler(BoundaryFamily("a"), G20, h, rng_seed=13)
    mean, err = expectation(s, product_functional(20, 20, 0, 1), N)
    assert abs(mean - covariance_oracle(BoundaryFamily("a"), G20, 20, 20, h, 0, 1)) < 3 * err


def test_constant_functional_exact():
    mean, err = expectation(PathSampler(BoundaryFamily("ab"), G20), constant_functional(), 1000)
    assert mean == 1.0 and err == 0.0


@pytest.mark.parametrize("rho", [0.5, 1.0])
def test_characteristic_functional(rho):
    s = PathSampler(BoundaryFamily("0", 0.0), G20, rng_seed=14)
    mean, err = expectation(s, characteristic_functional(rho), N)
    assert abs(mean - np.exp(-np.pi * rho**2)) < 3 * err


def test_chunking_is_deterministic():
    s = PathSampler(BoundaryFamily("ab"), G20, rng_seed=5, chunk_size=64)
    a = sample_paths(s, 300)
    b = sample_paths(PathSampler(BoundaryFamily("ab"), G20, rng_seed=5, chunk_size=64), 300)
    assert np.array_equal(a, b)


def test_non_finite_functional_raises():
    bad = PathFunctional(lambda z, g: np.full(z.shape[0], np.inf))
    with pytest.raises(FloatingPointError):
        expectation(PathSampler(BoundaryFamily("a"), G20), bad, 10)


def test_feynman_kac_normalization():
    mean, err = feynman_kac(lambda x: 0 * x[..., 0], lambda x: np.ones(x.shape[:-1]), 0.5, [0.0], 1000)
    assert mean == pytest.approx(1.0, abs=1e-14)


def test_crank_nicolson_oracle_free_case():
    # second-order in dx = 16/1999, so a few 1e-5 of discretization error
    # exact heat-kernel convolution of exp(-x^2) with variance T/(2 pi)
    var = 0.5 / (2 * np.pi)
    exact = 1 / np.sqrt(1 + 2 * var)
    assert heat_oracle_cn(lambda x: 0 * x[..., 0], lambda x: np.exp(-x[..., 0] ** 2), 0.5, 0.0) == \
        pytest.approx(exact, abs=3e-5)


@pytest.mark.parametrize("pot", ["zero", "neg-x2"])
def test_feynman_kac_matches_pde(pot):
    V = (lambda x: 0 * x[..., 0]) if pot == "zero" else (lambda x: -x[..., 0] ** 2)
    phi = lambda x: np.exp(-x[..., 0] ** 2)
    mean, err = feynman_kac(V, phi, 0.5, [0.5], N, n_steps=100, seed=4)
    assert abs(mean - heat_oracle_cn(V, phi, 0.5, 0.5)) < 3 * err + 1e-3


def test_endpoint_fixing_unit_case():
    r = endpoint_fixing_check(TimeGrid(0.0, 1.0, 50), 1, N, seed=21)
    assert r["C"] == 1.0
    assert r["rhs"] == 1.0
    assert abs(r["lhs"] - r["rhs"]) < 3 * r["lhs_err"]


def test_endpoint_fixing_midpoint_functional():
    g = TimeGrid(0.0, 1.0, 50)
    r = endpoint_fixing_check(g, 1, 200_000, product_functional(25, 25), seed=22)
    assert r["rhs"] == pytest.approx(0.25 / (2 * np.pi), rel=0.05)
    assert r["lhs"] / r["rhs"] == pytest.approx(1.0, rel=0.05)


def test_endpoint_constant_in_two_dimensions():
    r = endpoint_fixing_check(TimeGrid(0.0, 2.0, 20), 2, 1000, seed=1)
    assert r["C"] == pytest.approx(2.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 300))
def test_same_seed_same_samples(seed, count):
    fam = BoundaryFamily("b")
    a = sample_paths(PathSampler(fam, G20, rng_seed=seed, chunk_size=128), count)
    b = sample_paths(PathSampler(fam, G20, rng_seed=seed, chunk_size=128), count)
    assert a.shape[0] == count and np.array_equal(a, b)


@given(st.integers(1, 19), st.integers(1, 19))
def test_covariance_oracle_symmetric(i, j):
    fam = BoundaryFamily("ab")
    assert covariance_oracle(fam, G20, i, j) == covariance_oracle(fam, G20, j, i)
