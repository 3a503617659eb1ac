"""Green's functions of the kinetic form and their discrete counterparts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_paths import BoundaryFamily, MetricMatrix, TimeGrid


def _theta(x):
    return np.where(x > 0, 1.0, np.where(x < 0, 0.0, 0.5))


def green_closed_form(family: BoundaryFamily, grid: TimeGrid, t, u):
    """Scalar Green's function of Q0 = int zdot^2 dt for a boundary family.

    Vectorized over ``t`` and ``u``. Uses theta(0) = 1/2.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    ta, tb = grid.t_a, grid.t_b
    eps = 1e-12 * max(1.0, abs(ta), abs(tb))
    if np.any((t < ta - eps) | (t > tb + eps) | (u < ta - eps) | (u > tb + eps)):
        raise ValueError("t and u must lie in [t_a, t_b]")
    k = family.kind
    if k == "a":
        return _theta(t - u) * (u - ta) + _theta(u - t) * (t - ta)
    if k == "b":
        return _theta(t - u) * (tb - t) + _theta(u - t) * (tb - u)
    if k == "ab":
        lo, hi = np.minimum(t, u), np.maximum(t, u)
        return (lo - ta) * (tb - hi) / (tb - ta)
    if k == "0":
        t0 = family.t0
        above = (t >= t0) & (u >= t0)
        below = (t <= t0) & (u <= t0)
        return np.where(above, np.minimum(t - t0, u - t0),
                        np.where(below, np.minimum(t0 - t, t0 - u), 0.0))
    raise ValueError("no Green's function for an unpinned family")


@dataclass(frozen=True)
class GreenFunction:
    """Matrix-valued Green's function G^{ab}(t,u) = h^{ab} G(t,u)."""

    family: BoundaryFamily
    grid: TimeGrid
    metric: MetricMatrix

    @property
    def h_inv(self):
        return self.metric.h_inv

    def scalar(self, t, u):
        return green_closed_form(self.family, self.grid, t, u)

    def __call__(self, t, u):
        g = np.asarray(self.scalar(t, u))
        return g[..., None, None] * self.h_inv

    def node_matrix(self, nodes=None) -> np.ndarray:
        """Block matrix over the given nodes (default: free nodes), node-major."""
        if nodes is None:
            nodes = self.family.free(self.grid)
        ts = self.grid.times[nodes]
        g = self.scalar(ts[:, None], ts[None, :])
        return np.kron(g, self.h_inv)


@dataclass(frozen=True)
class DiscreteKernel:
    """Discretized kinetic operator on the free nodes (node-major, d components each)."""

    matrix: np.ndarray
    family: BoundaryFamily
    grid: TimeGrid
    metric: MetricMatrix

    @property
    def nodes(self) -> np.ndarray:
        return self.family.free(self.grid)

    @property
    def d(self) -> int:
        return self.metric.d


def stiffness_matrix(grid: TimeGrid) -> np.ndarray:
    """Second-difference matrix of int zdot^2 on all nodes, with one-sided ends."""
    n = grid.n_steps
    main = np.full(n + 1, 2.0)
    main[0] = main[-1] = 1.0
    a = np.diag(main) - np.diag(np.ones(n), 1) - np.diag(np.ones(n), -1)
    return a / grid.dt


def lumped_weights(grid: TimeGrid) -> np.ndarray:
    """Trapezoid weights, i.e. the lumped mass matrix diagonal."""
    w = np.full(grid.n_steps + 1, grid.dt)
    w[0] = w[-1] = grid.dt / 2
    return w


def discretize_kernel(family: BoundaryFamily, grid: TimeGrid, h: MetricMatrix | None = None) -> DiscreteKernel:
    """Matrix of Q0 restricted to free nodes; pinned nodes are eliminated.

    A pin at an interior node decouples the two sides, since the rows and
    columns of that node are removed.
    """
    if h is None:
        h = MetricMatrix.identity(1)
    free = family.free(grid)
    a = stiffness_matrix(grid)[np.ix_(free, free)]
    return DiscreteKernel(np.kron(a, h.h), family, grid, h)


def verify_inverse(kernel: DiscreteKernel, gf: GreenFunction) -> float:
    """Max |(D^-1)_ij - G(t_i, t_j)| over free node pairs and components."""
    if kernel.family != gf.family or kernel.grid != gf.grid:
        raise ValueError("kernel and Green's function disagree on family or grid")
    inv = np.linalg.solve(kernel.matrix, np.eye(kernel.matrix.shape[0]))
    return float(np.abs(inv - gf.node_matrix(kernel.nodes)).max())


def decomposition_identity_error(grid: TimeGrid, n_lattice: int = 50) -> float:
    """Max deviation of G_ab from G_a(t,u) - G_a(t,tb) G_a(tb,u) / G_a(tb,tb).

    Evaluated on an ``n_lattice`` x ``n_lattice`` lattice of interior points.
    """
    za, zab = BoundaryFamily("a"), BoundaryFamily("ab")
    ts = np.linspace(grid.t_a, grid.t_b, n_lattice)
    t, u = np.meshgrid(ts, ts, indexing="ij")
    tb = grid.t_b
    ga = lambda x, y: green_closed_form(za, grid, x, y)
    rhs = ga(t, u) - ga(t, tb) * ga(tb, u) / ga(tb, tb)
    return float(np.abs(green_closed_form(zab, grid, t, u) - rhs).max())


def projector_green(grid: TimeGrid) -> np.ndarray:
    """Double sum over cells of Pi(v, v') = delta(v - v') - 1/T.

    Entry (i, j) integrates over [t_a, t_i] x [t_a, t_j]; it approximates G_ab
    at the nodes.
    """
    n, dt, T = grid.n_steps, grid.dt, grid.length
    pi_cells = np.eye(n) / dt - 1.0 / T
    c = np.zeros((n + 1, n + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(pi_cells * dt * dt, axis=0), axis=1)
    return c
