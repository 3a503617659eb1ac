"""Monte Carlo sampling of the diffusive Gaussian integrator.

Paths are drawn with covariance (1/2pi) h^{-1} G(t, u), i.e. the Gaussian
measure with density proportional to exp(-pi Q0(z)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .grid_paths import DIFFUSIVE, BoundaryFamily, MetricMatrix, Regime, TimeGrid
from .greens import green_closed_form

CHUNK = 8192


@dataclass(frozen=True)
class PathSampler:
    """Sampler for a pinned path family; deterministic given ``rng_seed``.

    Draws are organised in fixed-size chunks, each with its own child seed,
    so results do not depend on how the chunks are scheduled.
    """

    family: BoundaryFamily
    grid: TimeGrid
    metric: MetricMatrix = field(default_factory=lambda: MetricMatrix.identity(1))
    rng_seed: int = 0
    regime: Regime = DIFFUSIVE
    chunk_size: int = CHUNK

    def __post_init__(self):
        if self.regime != DIFFUSIVE:
            raise ValueError("only the diffusive regime (s = 1) can be sampled")
        if not self.metric.positive_definite:
            raise ValueError("sampling needs a positive-definite metric")
        if self.family.kind == "free":
            raise ValueError("an unpinned family has no normalizable measure")

    @property
    def d(self) -> int:
        return self.metric.d

    def _chunk_sizes(self, count):
        full, rest = divmod(count, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])

    def chunks(self, count: int):
        """Yield successive sample blocks of shape (m, n_steps + 1, d)."""
        if count < 1:
            raise ValueError("count must be >= 1")
        sizes = self._chunk_sizes(count)
        seeds = np.random.SeedSequence(self.rng_seed).spawn(len(sizes))
        for m, ss in zip(sizes, seeds):
            yield self._draw(np.random.default_rng(ss), m)

    def _draw(self, rng, m):
        g, d = self.grid, self.d
        chol = np.linalg.cholesky(self.metric.h_inv)
        xi = rng.standard_normal((m, g.n_steps, d)) @ chol.T
        xi *= np.sqrt(g.dt / (2 * np.pi))
        z = np.zeros((m, g.n_steps + 1, d))
        kind = self.family.kind
        if kind == "a":
            z[:, 1:] = np.cumsum(xi, axis=1)
        elif kind == "b":
            z[:, :-1] = -np.cumsum(xi[:, ::-1], axis=1)[:, ::-1]
        elif kind == "ab":
            xi = xi - xi.mean(axis=1, keepdims=True)
            z[:, 1:] = np.cumsum(xi, axis=1)
            z[:, -1] = 0.0
        else:
            k = g.index_of(self.family.t0)
            z[:, k + 1:] = np.cumsum(xi[:, k:], axis=1)
            if k > 0:
                z[:, :k] = -np.cumsum(xi[:, :k][:, ::-1], axis=1)[:, ::-1]
        return z


def sample_paths(sampler: PathSampler, count: int) -> np.ndarray:
    """Array of ``count`` sampled paths, shape (count, n_steps + 1, d)."""
    return np.concatenate(list(sampler.chunks(count)), axis=0)


@dataclass(frozen=True)
class PathFunctional:
    """Vectorized functional: ``rule(z, grid)`` maps (m, n+1, d) samples to (m,) values."""

    rule: Callable[[np.ndarray, TimeGrid], np.ndarray]
    tag: str = ""

    def __call__(self, z, grid):
        return np.asarray(self.rule(z, grid))


def constant_functional(value=1.0) -> PathFunctional:
    return PathFunctional(lambda z, g: np.full(z.shape[0], value), tag=f"const({value})")


def product_functional(i: int, j: int, a: int = 0, b: int = 0) -> PathFunctional:
    """F(z) = z^a(t_i) z^b(t_j) at node indices i, j."""
    return PathFunctional(lambda z, g: z[:, i, a] * z[:, j, b], tag=f"z{a}({i})z{b}({j})")


def characteristic_functional(rho: float, node: int = -1, comp: int = 0) -> PathFunctional:
    return PathFunctional(lambda z, g: np.exp(2j * np.pi * rho * z[:, node, comp]), tag=f"cf({rho})")


def _mean_and_err(values):
    n = values.size
    mean = values.mean()
    if n < 2:
        return mean, float("inf")
    dev = values - mean
    err = np.sqrt(np.sum(np.abs(dev) ** 2) / (n - 1) / n)
    return mean, float(err)


def functional_values(sampler: PathSampler, functional, count: int) -> np.ndarray:
    out = []
    for z in sampler.chunks(count):
        v = np.asarray(functional(z, sampler.grid))
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("functional returned non-finite values")
        out.append(v)
    return np.concatenate(out)


def expectation(sampler: PathSampler, functional, count: int):
    """Monte Carlo mean and standard error of a path functional."""
    return _mean_and_err(functional_values(sampler, functional, count))


def feynman_kac(potential, phi, T: float, x0, count: int, n_steps: int = 200,
                seed: int = 0, system=None, metric: MetricMatrix | None = None):
    """Estimate Psi(T, x0) = E[exp(int_0^T V(x(t)) dt) phi(x(T))].

    ``x(t)`` is the flow of ``system`` (default: flat translations) driven by a
    path pinned at t = 0. With flat translations Psi solves
    dPsi/dT = (1/4pi) h^{ab} d_a d_b Psi + V Psi.

    Returns (mean, std_err).
    """
    from .driven_flow import flat_translations, integrate

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size if system is None else system.n_drivers
    metric = metric or MetricMatrix.identity(d)
    sampler = PathSampler(BoundaryFamily("a"), TimeGrid(0.0, T, n_steps), metric, seed)
    system = system or flat_translations(d)
    w = np.full(n_steps + 1, sampler.grid.dt)
    w[0] = w[-1] = sampler.grid.dt / 2
    vals = []
    for z in sampler.chunks(count):
        x = integrate(system, z, x0, grid=sampler.grid).trajectory
        v = np.asarray(potential(x), dtype=float)
        action = v @ w
        vals.append(np.exp(action) * np.asarray(phi(x[:, -1])))
    vals = np.concatenate(vals)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite Feynman-Kac weights")
    return _mean_and_err(vals)


def heat_oracle_cn(potential, phi, T: float, x0: float, L: float = 8.0,
                   n_nodes: int = 2000, n_time: int = 2000, diffusion: float = 1 / (4 * np.pi)) -> float:
    """Crank-Nicolson solution of u_t = D u_xx + V u on [-L, L], zero Dirichlet ends.

    ``potential`` and ``phi`` take arrays of shape (..., 1) like the sampler's
    trajectories, so the same callables serve both routes.
    """
    x = np.linspace(-L, L, n_nodes)
    dx = x[1] - x[0]
    dt = T / n_time
    xi = x[1:-1]
    u = np.asarray(phi(xi[:, None]), dtype=float)
    v = np.asarray(potential(xi[:, None]), dtype=float)
    r = diffusion * dt / dx**2
    m = xi.size
    ab = np.zeros((3, m))
    ab[0, 1:] = -r / 2
    ab[1] = 1 + r - dt * v / 2
    ab[2, :-1] = -r / 2
    for _ in range(n_time):
        rhs = (1 - r + dt * v / 2) * u
        rhs[1:] += r / 2 * u[:-1]
        rhs[:-1] += r / 2 * u[1:]
        u = solve_banded((1, 1), ab, rhs)
    return float(np.interp(x0, xi, u))


def endpoint_fixing_check(grid: TimeGrid, d: int = 1, count: int = 200_000, functional=None,
                          seed: int = 0, metric: MetricMatrix | None = None, eps_scale: float = 0.25):
    """Compare E_a[F delta(z(t_b))] with C^{-1} E_ab[F], C = (det h^{-1})^{1/2} (t_b - t_a)^{d/2}.

    The delta is a Gaussian mollifier of width eps = eps_scale * sigma, where
    sigma^2 is the per-component variance of z(t_b); the widths eps and eps/2
    are Richardson-combined per sample to remove the O(eps^2) bias.

    Returns a dict with lhs, rhs, their standard errors and abs_err.
    """
    metric = metric or MetricMatrix.identity(d)
    functional = functional or constant_functional(1.0)
    fa = PathSampler(BoundaryFamily("a"), grid, metric, seed)
    fab = PathSampler(BoundaryFamily("ab"), grid, metric, seed + 1)
    cov = grid.length * metric.h_inv / (2 * np.pi)
    sigma = np.sqrt(np.diag(cov).min())
    eps = eps_scale * sigma

    def mollified(zb, e):
        # density of N(0, e^2 I) evaluated at z(t_b)
        q = np.sum(zb**2, axis=-1) / e**2
        return np.exp(-q / 2) / (2 * np.pi * e**2) ** (d / 2)

    vals = []
    for z in fa.chunks(count):
        f = np.asarray(functional(z, grid))
        zb = z[:, -1]
        vals.append(f * (4 * mollified(zb, eps / 2) - mollified(zb, eps)) / 3)
    lhs, lhs_err = _mean_and_err(np.concatenate(vals))
    cval = np.sqrt(np.linalg.det(metric.h_inv)) * grid.length ** (d / 2)
    e_ab, e_ab_err = expectation(fab, functional, count)
    rhs, rhs_err = e_ab / cval, e_ab_err / cval
    return {"lhs": lhs, "rhs": rhs, "lhs_err": lhs_err, "rhs_err": rhs_err,
            "C": float(cval), "eps": float(eps), "abs_err": float(abs(lhs - rhs))}


def covariance_oracle(family: BoundaryFamily, grid: TimeGrid, i: int, j: int,
                      metric: MetricMatrix | None = None, a: int = 0, b: int = 0) -> float:
    """(1/2pi) h^{ab} G(t_i, t_j)."""
    metric = metric or MetricMatrix.identity(1)
    t = grid.times
    return float(metric.h_inv[a, b] * green_closed_form(family, grid, t[i], t[j]) / (2 * np.pi))
