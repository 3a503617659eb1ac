"""Flows dx = X_a(x) dz^a + Y(x) dt driven by sampled paths.

Built-in systems: flat translations, the polar chart of the punctured plane,
an abelian gauge (phase) bundle over it, the orthonormal frame bundle of the
unit sphere, and a clock extension carrying int V dt as an extra coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid_paths import DiscretePath, TimeGrid


@dataclass(frozen=True)
class DrivenSystem:
    """Vector fields on a chart of dimension ``dim`` driven by ``n_drivers`` inputs.

    ``fields(x)`` maps (..., dim) to (..., dim, n_drivers); ``drift(x)`` maps
    (..., dim) to (..., dim). ``flows[a](x, r)`` is the closed-form flow of
    field ``a`` for parameter ``r``. ``project`` is applied after every step
    and ``in_domain`` guards the chart.
    """

    dim: int
    n_drivers: int
    fields: Callable[[np.ndarray], np.ndarray]
    drift: Callable[[np.ndarray], np.ndarray] | None = None
    flows: Sequence[Callable] | None = None
    tag: str = "custom"
    project: Callable[[np.ndarray], np.ndarray] | None = None
    in_domain: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class FlowResult:
    times: np.ndarray
    trajectory: np.ndarray  # (..., n_steps + 1, dim)
    steps: int
    max_step_err: float

    @property
    def endpoint(self) -> np.ndarray:
        return self.trajectory[..., -1, :]

    @property
    def start(self) -> np.ndarray:
        return self.trajectory[..., 0, :]


class DomainError(RuntimeError):
    pass


# ---------------------------------------------------------------- built-ins

def flat_translations(d: int, lam: float = 1.0) -> DrivenSystem:
    eye = lam * np.eye(d)

    def fields(x):
        return np.broadcast_to(eye, x.shape[:-1] + (d, d))

    def make_flow(a):
        def flow(x, r):
            y = np.array(x, dtype=float, copy=True)
            y[..., a] += lam * np.asarray(r)
            return y
        return flow

    return DrivenSystem(d, d, fields, flows=[make_flow(a) for a in range(d)], tag="flat")


def _polar_to_cart(x):
    return np.stack([x[..., 0] * np.cos(x[..., 1]), x[..., 0] * np.sin(x[..., 1])], axis=-1)


def _angle_step(p_old, p_new):
    """Signed angle swept from p_old to p_new along the straight segment (< pi)."""
    cross = p_old[..., 0] * p_new[..., 1] - p_old[..., 1] * p_new[..., 0]
    dot = np.sum(p_old * p_new, axis=-1)
    return np.arctan2(cross, dot)


def polar_plane(r_min: float = 1e-9) -> DrivenSystem:
    """Chart (r, theta) of R^2 minus the origin; fields are the Cartesian unit translations."""

    def fields(x):
        r, th = x[..., 0], x[..., 1]
        c, s = np.cos(th), np.sin(th)
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0], out[..., 0, 1] = c, s
        out[..., 1, 0], out[..., 1, 1] = -s / r, c / r
        return out

    def make_flow(a):
        def flow(x, r):
            p = _polar_to_cart(x)
            q = p.copy()
            q[..., a] += np.asarray(r)
            y = np.empty_like(np.asarray(x, dtype=float))
            y[..., 0] = np.hypot(q[..., 0], q[..., 1])
            y[..., 1] = x[..., 1] + _angle_step(p, q)
            return y
        return flow

    return DrivenSystem(2, 2, fields, flows=[make_flow(0), make_flow(1)], tag="polar",
                        in_domain=lambda x: x[..., 0] > r_min)


def abelian_gauge(c: float, lam: float = 1.0, r_min: float = 1e-9) -> DrivenSystem:
    """Chart (x1, x2, Theta) with dx = lam dz and dTheta = c lam (x1 dz2 - x2 dz1)/|x|^2.

    ``c`` is the flux fraction eF/h of a thin solenoid at the origin.
    """

    def fields(x):
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        out = np.zeros(x.shape[:-1] + (3, 2))
        out[..., 0, 0] = lam
        out[..., 1, 1] = lam
        out[..., 2, 0] = -c * lam * x[..., 1] / r2
        out[..., 2, 1] = c * lam * x[..., 0] / r2
        return out

    def make_flow(a):
        def flow(x, r):
            y = np.array(x, dtype=float, copy=True)
            y[..., a] += lam * np.asarray(r)
            y[..., 2] += c * _angle_step(x[..., :2], y[..., :2])
            return y
        return flow

    return DrivenSystem(3, 2, fields, flows=[make_flow(0), make_flow(1)], tag="gauge",
                        in_domain=lambda x: np.hypot(x[..., 0], x[..., 1]) > r_min)


def _orthonormalize(x):
    p, e1, e2 = x[..., 0:3], x[..., 3:6], x[..., 6:9]
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    e1 = e1 - np.sum(e1 * p, -1, keepdims=True) * p
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = e2 - np.sum(e2 * p, -1, keepdims=True) * p - np.sum(e2 * e1, -1, keepdims=True) * e1
    e2 = e2 / np.linalg.norm(e2, axis=-1, keepdims=True)
    return np.concatenate([p, e1, e2], axis=-1)


def frame_bundle_s2() -> DrivenSystem:
    """Orthonormal frame bundle of the unit sphere, state (p, e1, e2) in R^9.

    Field a moves p along e_a and parallel-transports the frame with the
    Levi-Civita connection: de_i = -(e_i . dp) p.
    """

    def fields(x):
        p, e = x[..., 0:3], (x[..., 3:6], x[..., 6:9])
        out = np.empty(x.shape[:-1] + (9, 2))
        for a in range(2):
            out[..., 0:3, a] = e[a]
            out[..., 3:6, a] = -np.sum(e[0] * e[a], -1, keepdims=True) * p
            out[..., 6:9, a] = -np.sum(e[1] * e[a], -1, keepdims=True) * p
        return out

    def make_flow(a):
        def flow(x, r):
            r = np.asarray(r)[..., None]
            p, ea = x[..., 0:3], x[..., 3 + 3 * a: 6 + 3 * a]
            y = np.array(x, dtype=float, copy=True)
            y[..., 0:3] = p * np.cos(r) + ea * np.sin(r)
            y[..., 3 + 3 * a: 6 + 3 * a] = ea * np.cos(r) - p * np.sin(r)
            return y
        return flow

    return DrivenSystem(9, 2, fields, flows=[make_flow(0), make_flow(1)], tag="s2frame",
                        project=_orthonormalize)


def product_with_clock(base: DrivenSystem, potential: Callable) -> DrivenSystem:
    """Append a coordinate Theta with dTheta = V(x) dt."""
    n = base.dim

    def fields(x):
        out = np.zeros(x.shape[:-1] + (n + 1, base.n_drivers))
        out[..., :n, :] = base.fields(x[..., :n])
        return out

    def drift(x):
        out = np.zeros(x.shape)
        if base.drift is not None:
            out[..., :n] = base.drift(x[..., :n])
        out[..., n] = potential(x[..., :n])
        return out

    flows = None
    if base.flows is not None:
        flows = [lambda x, r, f=f: np.concatenate([f(x[..., :n], r), x[..., n:]], axis=-1)
                 for f in base.flows]
    project = None
    if base.project is not None:
        project = lambda x: np.concatenate([base.project(x[..., :n]), x[..., n:]], axis=-1)
    dom = None
    if base.in_domain is not None:
        dom = lambda x: base.in_domain(x[..., :n])
    return DrivenSystem(n + 1, base.n_drivers, fields, drift, flows, "clock(" + base.tag + ")",
                        project, dom)


# -------------------------------------------------------------- integration

def _samples(z):
    if isinstance(z, DiscretePath):
        return z.samples, z.grid
    return np.asarray(z, dtype=float), None


def _step(system, x, dz, dt, method):
    f0 = system.fields(x)
    y0 = system.drift(x) if system.drift is not None else 0.0
    pred = x + np.einsum("...ij,...j->...i", f0, dz) + y0 * dt
    if method == "euler":
        return pred, 0.0
    f1 = system.fields(pred)
    y1 = system.drift(pred) if system.drift is not None else 0.0
    new = x + 0.5 * np.einsum("...ij,...j->...i", f0 + f1, dz) + 0.5 * (y0 + y1) * dt
    return new, float(np.max(np.abs(new - pred))) if new.size else 0.0


def _run(system, zs, x0, dt, direction="forward", method="heun", blowup=1e6):
    """Step through the increments of ``zs`` (shape (..., n+1, d)); returns trajectory."""
    if method not in ("heun", "euler"):
        raise ValueError("method must be 'heun' or 'euler'")
    n = zs.shape[-2] - 1
    batch = zs.shape[:-2]
    x = np.broadcast_to(np.asarray(x0, dtype=float), batch + (system.dim,)).copy()
    traj = np.empty(batch + (n + 1, system.dim))
    order = range(n) if direction == "forward" else range(n, 0, -1)
    first = 0 if direction == "forward" else n
    traj[..., first, :] = x
    sgn = 1.0 if direction == "forward" else -1.0
    worst = 0.0
    for i in order:
        j = i + 1 if direction == "forward" else i - 1
        dz = zs[..., j, :] - zs[..., i, :]
        x, err = _step(system, x, dz, sgn * dt, method)
        if system.project is not None:
            x = system.project(x)
        if system.in_domain is not None and not np.all(system.in_domain(x)):
            raise DomainError(f"trajectory left the chart of system {system.tag!r}")
        if not np.all(np.isfinite(x)) or err > blowup:
            raise DomainError("integration blew up")
        worst = max(worst, err)
        traj[..., j, :] = x
    return traj, worst


def integrate(system: DrivenSystem, z, x0, direction: str = "forward", method: str = "heun",
              grid: TimeGrid | None = None) -> FlowResult:
    """Integrate the driven flow along ``z``.

    ``z`` is a DiscretePath or an array of node samples (optionally batched as
    (m, n+1, d)); ``grid`` is required for arrays. ``direction="backward"``
    starts from ``x0`` at t_b, the convention for paths pinned at t_b.
    """
    zs, g = _samples(z)
    grid = grid or g
    if grid is None:
        raise ValueError("grid required for raw sample arrays")
    if zs.shape[-1] != system.n_drivers:
        raise ValueError("driving path has the wrong dimension")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    traj, err = _run(system, zs, x0, grid.dt, direction, method)
    return FlowResult(grid.times, traj, grid.n_steps, err)


def multistep_sigma(system: DrivenSystem, z, x0, n_substeps: int, grid: TimeGrid | None = None):
    """Ordered product of closed-form flows over ``n_substeps`` equal pieces of z.

    Each piece applies sigma_1(dz^1), then sigma_2(dz^2), and so on.
    """
    if system.flows is None:
        raise ValueError(f"system {system.tag!r} has no closed-form flows")
    if n_substeps < 1:
        raise ValueError("n_substeps must be >= 1")
    zs, g = _samples(z)
    grid = grid or g
    ts = grid.times
    tk = np.linspace(grid.t_a, grid.t_b, n_substeps + 1)
    zk = np.stack([np.interp(tk, ts, zs[:, a]) for a in range(zs.shape[1])], axis=1)
    x = np.asarray(x0, dtype=float).copy()
    for k in range(n_substeps):
        dz = zk[k + 1] - zk[k]
        for a, flow in enumerate(system.flows):
            x = flow(x, dz[a])
        if system.project is not None:
            x = system.project(x)
    return x


def develop(z: DiscretePath, x_b, frame_b, method: str = "heun") -> FlowResult:
    """Roll a flat path in R^2 (pinned at t_b) onto the unit sphere.

    ``frame_b`` is a pair of orthonormal tangent vectors at ``x_b``. The
    trajectory holds the full frame-bundle state; see :func:`sphere_points`.
    """
    x_b = np.asarray(x_b, dtype=float)
    e1, e2 = (np.asarray(v, dtype=float) for v in frame_b)
    gram = np.array([[x_b @ x_b, x_b @ e1, x_b @ e2], [e1 @ x_b, e1 @ e1, e1 @ e2], [e2 @ x_b, e2 @ e1, e2 @ e2]])
    if np.abs(gram - np.eye(3)).max() > 1e-8:
        raise ValueError("(x_b, e1, e2) must be orthonormal")
    if z.d != 2:
        raise ValueError("development needs a path in R^2")
    state = np.concatenate([x_b, e1, e2])
    return integrate(frame_bundle_s2(), z, state, direction="backward", method=method)


def sphere_points(result: FlowResult) -> np.ndarray:
    return result.trajectory[..., 0:3]


def sphere_action(result: FlowResult) -> float:
    """Discrete action sum(arc_i^2 / dt) of the developed curve."""
    p = sphere_points(result)
    chord = np.linalg.norm(np.diff(p, axis=-2), axis=-1)
    arc = 2 * np.arcsin(np.clip(chord / 2, 0, 1))
    dt = result.times[1] - result.times[0]
    return float(np.sum(arc**2) / dt)


def chain_rule_check(system: DrivenSystem, z, x0, t_c: float, grid: TimeGrid | None = None,
                     method: str = "heun") -> float:
    """Endpoint gap between the one-shot flow and the flow composed at t_c.

    The pieces keep the original node samples, so every step sees the same
    increments as the one-shot run.
    """
    zs, g = _samples(z)
    grid = grid or g
    k = grid.index_of(t_c)
    if not 0 < k < grid.n_steps:
        raise ValueError("t_c must be an interior node")
    full, _ = _run(system, zs, x0, grid.dt, "forward", method)
    first, _ = _run(system, zs[: k + 1], x0, grid.dt, "forward", method)
    second, _ = _run(system, zs[k:], first[-1], grid.dt, "forward", method)
    return float(np.max(np.abs(full[-1] - second[-1])))
