"""Classical paths, Jacobi matrices and the Green's functions of the second variation.

The Lagrangian is L = 1/2 h xdot xdot - V(x). Boundary kinds name what is
fixed at (t_a, t_b): "PP" positions at both ends, "MP" momentum at t_a and
position at t_b, "PM" position at t_a and momentum at t_b, "MM" momenta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .grid_paths import BoundaryFamily, MetricMatrix, TimeGrid
from .greens import DiscreteKernel, lumped_weights, stiffness_matrix

KINDS = ("PP", "MP", "PM", "MM")
KIND_FAMILY = {"PP": "ab", "MP": "b", "PM": "a", "MM": "free"}


class ShootingError(RuntimeError):
    pass


class ConjugatePointError(RuntimeError):
    pass


@dataclass(frozen=True)
class ActionModel:
    """Potential and metric of the action, plus an optional initial phase S0."""

    metric: MetricMatrix
    V: Callable
    grad_V: Callable
    hess_V: Callable
    S0: Callable | None = None
    grad_S0: Callable | None = None
    hess_S0: Callable | None = None
    hbar: float = 1.0

    @property
    def d(self) -> int:
        return self.metric.d


def free_action(d: int = 1, m: float = 1.0, **kw) -> ActionModel:
    return ActionModel(MetricMatrix.identity(d, m), lambda x: 0.0, lambda x: np.zeros(d),
                      lambda x: np.zeros((d, d)), **kw)


def harmonic_action(d: int = 1, omega=1.0, m: float = 1.0, **kw) -> ActionModel:
    """V = 1/2 m sum_k omega_k^2 x_k^2; a negative omega^2 gives the inverted oscillator.

    ``omega`` may be a scalar or a length-d sequence of omega^2 signs folded in
    via :func:`quadratic_action` when anisotropy is needed.
    """
    w2 = np.broadcast_to(np.asarray(omega, dtype=float) ** 2, (d,))
    return quadratic_action(m * np.diag(w2), m=m, **kw)


def quadratic_action(k, m: float = 1.0, **kw) -> ActionModel:
    """V = 1/2 x^T k x with a constant symmetric matrix k."""
    k = np.atleast_2d(np.asarray(k, dtype=float))
    d = k.shape[0]
    return ActionModel(MetricMatrix.identity(d, m), lambda x: 0.5 * x @ k @ x, lambda x: k @ x,
                      lambda x: k, **kw)


def plane_wave_phase(p) -> dict:
    """S0(x) = p . x as keyword arguments for ActionModel."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return dict(S0=lambda x: float(p @ x), grad_S0=lambda x: p.copy(),
                hess_S0=lambda x: np.zeros((p.size, p.size)))


# ------------------------------------------------------------ phase flow

def _rk4(model: ActionModel, grid: TimeGrid, x_a, p_a, nu: float = 1.0):
    """RK4 for (x, p) and the tangent map Phi = d(x, p)(t) / d(x, p)(t_a)."""
    d = model.d
    hinv = model.metric.h_inv
    n, dt = grid.n_steps, grid.dt

    def f(x, p, phi):
        a = np.zeros((2 * d, 2 * d))
        a[:d, d:] = hinv
        a[d:, :d] = -nu * np.asarray(model.hess_V(x), dtype=float)
        return hinv @ p, -np.asarray(model.grad_V(x), dtype=float), a @ phi

    xs = np.empty((n + 1, d))
    ps = np.empty((n + 1, d))
    phis = np.empty((n + 1, 2 * d, 2 * d))
    x, p, phi = np.asarray(x_a, float), np.asarray(p_a, float), np.eye(2 * d)
    xs[0], ps[0], phis[0] = x, p, phi
    for i in range(n):
        k1 = f(x, p, phi)
        k2 = f(x + dt / 2 * k1[0], p + dt / 2 * k1[1], phi + dt / 2 * k1[2])
        k3 = f(x + dt / 2 * k2[0], p + dt / 2 * k2[1], phi + dt / 2 * k2[2])
        k4 = f(x + dt * k3[0], p + dt * k3[1], phi + dt * k3[2])
        x = x + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p = p + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        phi = phi + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ShootingError("trajectory left the working region")
        xs[i + 1], ps[i + 1], phis[i + 1] = x, p, phi
    return xs, ps, phis


@dataclass(frozen=True)
class ClassicalSolution:
    grid: TimeGrid
    kind: str
    x: np.ndarray
    p: np.ndarray
    action: float
    el_residual: float
    iterations: int

    @property
    def times(self):
        return self.grid.times


def _hess_S0(model, x):
    if model.hess_S0 is not None:
        return np.asarray(model.hess_S0(x), dtype=float)
    eps = 1e-6
    d = model.d
    out = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = eps
        out[:, k] = (model.grad_S0(x + e) - model.grad_S0(x - e)) / (2 * eps)
    return out


def solve_classical(model: ActionModel, kind: str, grid: TimeGrid, x_a=None, x_b=None,
                    p_a=None, p_b=None, guess=None, tol: float = 1e-12,
                    max_iter: int = 50) -> ClassicalSolution:
    """Newton shooting for the Euler-Lagrange equation h xddot = -grad V.

    PP and PM shoot on the initial momentum; MP and MM shoot on the initial
    position. For MP the initial momentum is ``p_a`` or, if omitted,
    grad S0(x_a). The action is the Simpson quadrature of L plus S0(x_a).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    d = model.d
    vec = lambda v: None if v is None else np.atleast_1d(np.asarray(v, dtype=float))
    x_a, x_b, p_a, p_b = vec(x_a), vec(x_b), vec(p_a), vec(p_b)
    T = grid.length
    if kind in ("PP", "PM") and x_a is None:
        raise ValueError("x_a required")
    if kind in ("PP", "MP") and x_b is None:
        raise ValueError("x_b required")
    if kind == "PM" and p_b is None or kind == "MM" and (p_b is None or p_a is None):
        raise ValueError("momentum boundary data missing")
    if kind == "MP" and p_a is None and model.grad_S0 is None:
        raise ValueError("MP needs p_a or an initial phase S0")

    if kind in ("PP", "PM"):
        u = vec(guess) if guess is not None else (
            model.metric.h @ (x_b - x_a) / T if kind == "PP" else p_b.copy())
    else:
        u = vec(guess) if guess is not None else (
            x_b - T * model.metric.h_inv @ p_a if kind == "MP" and p_a is not None
            else x_b.copy() if kind == "MP" else np.zeros(d))

    def start(u):
        if kind in ("PP", "PM"):
            return x_a, u, None
        if kind == "MM" or p_a is not None:
            return u, p_a, None
        return u, np.asarray(model.grad_S0(u), dtype=float), _hess_S0(model, u)

    def evaluate(u):
        xa, pa, hs = start(u)
        xs, ps, phis = _rk4(model, grid, xa, pa)
        ph = phis[-1]
        K, J, L, Kt = ph[:d, :d], ph[:d, d:], ph[d:, :d], ph[d:, d:]
        if kind == "PP":
            return xs, ps, xs[-1] - x_b, J
        if kind == "PM":
            return xs, ps, ps[-1] - p_b, Kt
        if kind == "MP":
            return xs, ps, xs[-1] - x_b, K + (J @ hs if hs is not None else 0.0)
        return xs, ps, ps[-1] - p_b, L

    scale = 1.0 + np.abs(x_b if kind in ("PP", "MP") else p_b).max()
    xs, ps, res, jac = evaluate(u)
    for it in range(1, max_iter + 1):
        if np.abs(res).max() < tol * scale:
            break
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise ShootingError("singular shooting Jacobian (conjugate or focal point)") from exc
        lam = 1.0
        while True:  # backtracking on the residual norm
            try:
                trial = evaluate(u - lam * step)
                if np.linalg.norm(trial[2]) < np.linalg.norm(res) or lam < 1e-4:
                    break
            except ShootingError:
                if lam < 1e-4:
                    raise
            lam /= 2
        u = u - lam * step
        xs, ps, res, jac = trial
    else:
        raise ShootingError(f"shooting did not converge in {max_iter} iterations")

    hinv = model.metric.h_inv
    xdot = ps @ hinv.T
    lag = 0.5 * np.einsum("ia,ab,ib->i", xdot, model.metric.h, xdot) - np.array([model.V(x) for x in xs])
    action = float(simpson(lag, x=grid.times))
    if kind == "MP" and model.S0 is not None:
        action += float(model.S0(xs[0]))
    pdot = (ps[2:] - ps[:-2]) / (2 * grid.dt)
    el = pdot + np.array([model.grad_V(x) for x in xs[1:-1]])
    return ClassicalSolution(grid, kind, xs, ps, action, float(np.abs(el).max()), it)


# ------------------------------------------------------------ Jacobi blocks

@dataclass(frozen=True)
class JacobiBlocks:
    """Tangent maps Phi_i = d(x, p)(t_i) / d(x, p)(t_a) along a classical path.

    Phi = [[K, J], [L, Kt]] with K = dx/dx_a, J = dx/dp_a, L = dp/dx_a,
    Kt = dp/dp_a. Two-time blocks X(t_i, t_j) come from Phi_i Phi_j^{-1}.
    """

    grid: TimeGrid
    phi: np.ndarray
    metric: MetricMatrix
    nu: float = 1.0

    @property
    def d(self):
        return self.phi.shape[-1] // 2

    def _split(self, ph):
        d = self.d
        return {"K": ph[..., :d, :d], "J": ph[..., :d, d:], "L": ph[..., d:, :d], "Kt": ph[..., d:, d:]}

    @property
    def J(self):
        return self._split(self.phi)["J"]

    @property
    def K(self):
        return self._split(self.phi)["K"]

    @property
    def L(self):
        return self._split(self.phi)["L"]

    @property
    def Kt(self):
        return self._split(self.phi)["Kt"]

    def transfer(self, i, j):
        """Phi(t_i, t_j) = Phi_i Phi_j^{-1} (vectorized over i and j)."""
        return self.phi[i] @ np.linalg.inv(self.phi[j])

    def block(self, name: str, i, j):
        return self._split(self.transfer(i, j))[name]

    def _final(self, name):
        return self._split(self.phi[-1])[name]

    @property
    def M(self):
        """M(t_a, t_b) = J(t_b, t_a)^{-1}."""
        return np.linalg.inv(self._final("J"))

    @property
    def N(self):
        return np.linalg.inv(self._final("K"))

    @property
    def Nt(self):
        return np.linalg.inv(self._final("Kt"))

    @property
    def P(self):
        return np.linalg.inv(self._final("L"))

    @property
    def action_hessian_ab(self):
        """d^2 S / dx_b^beta dx_a^alpha as a [beta, alpha] matrix, equal to -(J^{-1})^T."""
        return -self.M.T

    def wronskian(self):
        """Phi^T Omega Phi at every node; constant (= Omega) for a Hamiltonian flow."""
        d = self.d
        om = np.block([[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]])
        return np.einsum("nji,jk,nkl->nil", self.phi, om, self.phi)


def jacobi_blocks(model: ActionModel, sol: ClassicalSolution, nu: float = 1.0) -> JacobiBlocks:
    """Integrate the Jacobi equation along ``sol`` with the Hessian scaled by ``nu``."""
    _, _, phis = _rk4(model, sol.grid, sol.x[0], sol.p[0], nu=nu)
    return JacobiBlocks(sol.grid, phis, model.metric, nu)


def backward_blocks(model: ActionModel, sol: ClassicalSolution, index: int) -> np.ndarray:
    """d(x, p)(t_a) / d(x, p)(t_index), by integrating back from node ``index``."""
    g = sol.grid
    if index == 0:
        return np.eye(2 * model.d)
    back = TimeGrid(g.t_a, g.t_a + index * g.dt, index) if index >= 2 else None
    if back is None:
        raise ValueError("index must be >= 2")
    rev = TimeGrid(-back.t_b, -back.t_a, index)
    # time reversal: x(t) -> x(-t), p -> -p keeps the Hamiltonian form
    _, _, phis = _rk4(model, rev, sol.x[index], -sol.p[index])
    ph = phis[-1]
    d = model.d
    flip = np.diag(np.r_[np.ones(d), -np.ones(d)])
    return flip @ ph @ flip


def _theta(x):
    return 1.0 if x > 0 else (0.0 if x < 0 else 0.5)


def jacobi_green(blocks: JacobiBlocks, kind: str, t: float, s: float) -> np.ndarray:
    """Green's function of the Jacobi operator for boundary kind ``kind`` at nodes t, s.

    theta(0) = 1/2, so on the diagonal the two branches are averaged.
    """
    g = blocks.grid
    i, j = g.index_of(t), g.index_of(s)
    a, b = 0, g.n_steps
    X = blocks.block
    inv = np.linalg.inv

    def upper():  # s > t
        if kind == "PP":
            return X("J", i, a) @ inv(X("J", b, a)) @ X("J", b, j)
        if kind == "MP":
            return X("K", i, a) @ inv(X("K", b, a)) @ X("J", b, j)
        if kind == "PM":
            return X("J", i, a) @ inv(X("Kt", b, a)) @ X("Kt", b, j)
        return X("K", i, a) @ inv(X("L", b, a)) @ X("Kt", b, j)

    def lower():  # t > s
        if kind == "PP":
            return -X("J", i, b) @ inv(X("J", a, b)) @ X("J", a, j)
        if kind == "MP":
            return -X("J", i, b) @ inv(X("Kt", a, b)) @ X("Kt", a, j)
        if kind == "PM":
            return -X("K", i, b) @ inv(X("K", a, b)) @ X("J", a, j)
        return -X("K", i, b) @ inv(X("L", a, b)) @ X("Kt", a, j)

    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    wu, wl = _theta(s - t), _theta(t - s)
    out = 0.0
    if wu:
        out = out + wu * upper()
    if wl:
        out = out + wl * lower()
    return np.asarray(out)


def check_nondegenerate(blocks: JacobiBlocks, kind: str, rtol: float = 1e-10):
    """Raise ConjugatePointError if the final block governing ``kind`` is singular."""
    name = {"PP": "J", "MP": "K", "PM": "Kt", "MM": "L"}[kind]
    m = blocks._final(name)
    scale = max(1.0, np.abs(blocks.phi[-1]).max()) ** blocks.d
    if abs(np.linalg.det(m)) < rtol * scale:
        raise ConjugatePointError(f"block {name}(t_b, t_a) is singular for kind {kind}")


def hessian_along(model: ActionModel, sol: ClassicalSolution) -> Callable:
    """t -> Hessian of V along the classical path (cubic-spline interpolated)."""
    spl = CubicSpline(sol.times, sol.x, axis=0)
    return lambda t: np.asarray(model.hess_V(spl(t)), dtype=float)


def second_variation_matrix(model: ActionModel, sol: ClassicalSolution, kind: str,
                            grid: TimeGrid | None = None, nu: float = 1.0) -> DiscreteKernel:
    """Discretized Q0 + nu Q with Q(xi) = -int xi^T Hess V(x_cl) xi dt (lumped mass).

    Free endpoints are those whose position is not fixed by ``kind``.
    """
    grid = grid or sol.grid
    fam = BoundaryFamily(KIND_FAMILY[kind])
    free = fam.free(grid)
    hess = hessian_along(model, sol)
    w = lumped_weights(grid)
    d = model.d
    k0 = np.kron(stiffness_matrix(grid), model.metric.h)
    pot = np.zeros_like(k0)
    for i, t in enumerate(grid.times):
        pot[i * d:(i + 1) * d, i * d:(i + 1) * d] = w[i] * hess(t)
    idx = (free[:, None] * d + np.arange(d)[None, :]).ravel()
    mat = (k0 - nu * pot)[np.ix_(idx, idx)]
    return DiscreteKernel(mat, fam, grid, model.metric)
