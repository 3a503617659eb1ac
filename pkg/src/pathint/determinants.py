"""Determinant ratios Det(Q_nu / Q0) by three independent routes, and the Morse index.

Q0(z) = int z'^T h z' dt and Q(z) = int z^T a(t) z dt on a pinned path
family. Q_nu = Q0 + nu Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import simpson
from scipy.linalg import eigvals_banded

from .classical_jacobi import (ActionModel, ClassicalSolution, ConjugatePointError, JacobiBlocks,
                               hessian_along, jacobi_blocks)
from .grid_paths import BoundaryFamily, MetricMatrix, TimeGrid
from .greens import lumped_weights


@dataclass(frozen=True)
class DetResult:
    value: float
    morse_index: int
    method: str
    grid_n: int
    estimated_error: float
    order: float | None = None


def _as_matrix_fn(a, d):
    def f(t):
        v = np.asarray(a(t), dtype=float)
        return v.reshape(d, d) if v.size == d * d else v * np.eye(d)
    return f


def _banded_spectrum(a_fn, family: BoundaryFamily, grid: TimeGrid, metric: MetricMatrix, nu: float):
    """Eigenvalues of the discretized Q0 and Q_nu matrices on the free nodes."""
    d = metric.d
    n = grid.n_steps
    main = np.full(n + 1, 2.0)
    main[0] = main[-1] = 1.0
    lap = sp.diags([-np.ones(n), main, -np.ones(n)], [-1, 0, 1]) / grid.dt
    k0 = sp.kron(lap, sp.csr_matrix(metric.h)).tocsr()
    w = lumped_weights(grid)
    blocks = [w[i] * a_fn(t) for i, t in enumerate(grid.times)]
    pot = sp.block_diag(blocks).tocsr()
    free = family.free(grid)
    idx = (free[:, None] * d + np.arange(d)[None, :]).ravel()
    bw = 2 * d - 1

    def band(mat):
        mat = mat[idx][:, idx].tocsr()
        size = mat.shape[0]
        ab = np.zeros((bw + 1, size))
        for k in range(bw + 1):
            diag = mat.diagonal(-k)
            ab[k, : size - k] = diag
        return ab

    ev0 = eigvals_banded(band(k0), lower=True)
    ev1 = eigvals_banded(band(k0 + nu * pot), lower=True)
    return ev0, ev1


def _limit_once(a_fn, family, grid, metric, nu, zero_tol=1e-10):
    ev0, ev1 = _banded_spectrum(a_fn, family, grid, metric, nu)
    if np.any(ev0 <= 0):
        raise ValueError("discretized Q0 is not positive definite for this family")
    if np.min(np.abs(ev1)) < zero_tol * np.min(ev0):
        raise ConjugatePointError("Q_nu is singular on this grid (eigenvalue at zero)")
    index = int(np.sum(ev1 < 0))
    logratio = np.sum(np.log(np.abs(ev1))) - np.sum(np.log(ev0))
    return (-1.0) ** index * np.exp(logratio), index


def det_by_limit(a: Callable, family: BoundaryFamily, grid: TimeGrid, metric: MetricMatrix | None = None,
                 nu: float = 1.0, richardson: bool = True) -> DetResult:
    """det(M_nu) / det(M_0) of the discretized forms on the same free nodes.

    ``a(t)`` returns the d x d perturbation kernel (a scalar is read as a
    multiple of the identity). With ``richardson`` the ratio is computed on
    n, 2n and 4n steps; the convergence order is estimated from the three
    values and used to extrapolate.
    """
    metric = metric or MetricMatrix.identity(1)
    a_fn = _as_matrix_fn(a, metric.d)
    v0, idx = _limit_once(a_fn, family, grid, metric, nu)
    if not richardson:
        return DetResult(float(v0), idx, "limit", grid.n_steps, float("nan"))
    v1, _ = _limit_once(a_fn, family, grid.refined(2), metric, nu)
    v2, _ = _limit_once(a_fn, family, grid.refined(4), metric, nu)
    d1, d2 = v1 - v0, v2 - v1
    if d1 != 0 and d2 != 0 and d1 * d2 > 0:
        order = float(np.clip(np.log2(d1 / d2), 0.5, 4.0))
    else:
        order = 2.0 if family.kind == "ab" else 1.0
    ext = v2 + d2 / (2**order - 1)
    return DetResult(float(ext), idx, "limit", grid.n_steps, float(abs(ext - v2)), order)


def perturbation_from_solution(model: ActionModel, sol: ClassicalSolution) -> Callable:
    """a(t) = -Hess V(x_cl(t)), so that Q0 + Q is the second variation of the action."""
    hess = hessian_along(model, sol)
    return lambda t: -hess(t)


def morse_index(a: Callable, family: BoundaryFamily, grid: TimeGrid, metric: MetricMatrix | None = None,
                nu: float = 1.0) -> int:
    """Number of negative eigenvalues of the discretized Q_nu."""
    metric = metric or MetricMatrix.identity(1)
    return _limit_once(_as_matrix_fn(a, metric.d), family, grid, metric, nu)[1]


_GOVERNING = {"PP": "J", "MP": "K", "PM": "Kt"}


def _count_crossings(mats):
    """Sign changes of the sorted real eigenvalue parts along a matrix path.

    Counting per eigenvalue slot keeps multiplicity, which a determinant's
    sign alone would miss (e.g. isotropic conjugate points in d = 2).
    """
    ev = np.sort(np.linalg.eigvals(mats).real, axis=-1)
    s = np.sign(ev)
    return int(np.sum((s[1:] * s[:-1]) < 0))


def det_by_jacobi(blocks: JacobiBlocks, kind: str) -> DetResult:
    """Finite-determinant reduction of Det(Q_nu / Q0).

    PP: det(J(nu; t_b, t_a) J(0; t_b, t_a)^{-1}) with J(0) = (t_b - t_a) h^{-1}.
    MP: det K(nu; t_b, t_a), since K(0) is the identity. PM: det Kt(nu; t_b, t_a).
    The Morse index is the number of sign changes of the governing
    determinant along (t_a, t_b].
    """
    if kind not in _GOVERNING:
        raise ValueError("kind must be PP, MP or PM")
    name = _GOVERNING[kind]
    traj = getattr(blocks, name)[1:]
    if kind == "PP":
        j0 = (blocks.grid.times[1:] - blocks.grid.t_a)[:, None, None] * blocks.metric.h_inv
        traj = traj @ np.linalg.inv(j0)
    val = np.linalg.det(traj[-1])
    scale = max(1.0, np.abs(blocks.phi[-1]).max()) ** blocks.d
    if abs(val) < 1e-10 * scale:
        raise ConjugatePointError("governing Jacobi block is singular at t_b")
    return DetResult(float(val), _count_crossings(traj), "jacobi", blocks.grid.n_steps, float("nan"))


def _green_diagonal(blocks: JacobiBlocks, kind: str) -> np.ndarray:
    """G_nu(t_i, t_i) at every node, using the s >= t branch of the Jacobi Green's function."""
    phi = blocks.phi
    inv_phi = np.linalg.inv(phi)
    fb = phi[-1]
    sp_ = blocks._split
    ti_a = sp_(phi)                      # X(t, t_a)
    tb_t = sp_(fb[None] @ inv_phi)       # X(t_b, t)
    fin = sp_(fb)
    if kind == "PP":
        left, mid, right = ti_a["J"], np.linalg.inv(fin["J"]), tb_t["J"]
    elif kind == "MP":
        left, mid, right = ti_a["K"], np.linalg.inv(fin["K"]), tb_t["J"]
    elif kind == "PM":
        left, mid, right = ti_a["J"], np.linalg.inv(fin["Kt"]), tb_t["Kt"]
    else:
        raise ValueError("kind must be PP, MP or PM")
    return left @ mid @ right


def det_by_log_derivative(model: ActionModel, sol: ClassicalSolution, kind: str, nu_max: float = 1.0,
                          n_nu: int = 50) -> DetResult:
    """Integrate d/dnu ln Det(Q_nu / Q0) = Tr(Q_nu^{-1} Q) = int tr(a(t) G_nu(t, t)) dt.

    G_nu comes from the Jacobi blocks with the Hessian scaled by nu; the nu
    integral uses Simpson's rule on ``n_nu`` intervals.
    """
    if nu_max == 0:
        return DetResult(1.0, 0, "log-derivative", sol.grid.n_steps, 0.0)
    if n_nu % 2:
        n_nu += 1
    nus = np.linspace(0.0, nu_max, n_nu + 1)
    a_nodes = np.array([-np.asarray(model.hess_V(x), dtype=float) for x in sol.x])
    t = sol.grid.times
    rates, signs = [], []
    name = _GOVERNING[kind]
    for nu in nus:
        blocks = jacobi_blocks(model, sol, nu=nu)
        signs.append(np.sign(np.linalg.det(getattr(blocks, name)[-1])))
        g = _green_diagonal(blocks, kind)
        integrand = np.einsum("nij,nji->n", a_nodes, g)
        rates.append(simpson(integrand, x=t))
    if len(set(signs)) > 1:
        raise ConjugatePointError("Det(Q_nu/Q0) crosses zero on [0, nu_max]")
    log_det = simpson(np.array(rates), x=nus)
    coarse = simpson(np.array(rates)[::2], x=nus[::2]) if n_nu >= 4 else log_det
    val = float(np.exp(log_det))
    return DetResult(val, 0, "log-derivative", sol.grid.n_steps, float(abs(val - np.exp(coarse))))
