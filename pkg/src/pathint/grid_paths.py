"""Uniform time grids, pinned path spaces and elementary path algebra."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform subdivision of [t_a, t_b] into ``n_steps`` intervals."""

    t_a: float
    t_b: float
    n_steps: int

    def __post_init__(self):
        if not self.t_a < self.t_b:
            raise ValueError("need t_a < t_b")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError("n_steps must be an integer >= 2")

    @property
    def dt(self) -> float:
        return (self.t_b - self.t_a) / self.n_steps

    @property
    def length(self) -> float:
        return self.t_b - self.t_a

    @property
    def times(self) -> np.ndarray:
        return self.t_a + self.dt * np.arange(self.n_steps + 1)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of the node at time ``t``; raises if ``t`` is not a node."""
        x = (t - self.t_a) / self.dt
        i = int(round(x))
        if abs(x - i) > tol or not 0 <= i <= self.n_steps:
            raise ValueError(f"time {t} is not a grid node")
        return i

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_a, self.t_b, self.n_steps * factor)


_KINDS = ("a", "b", "ab", "0", "free")


@dataclass(frozen=True)
class BoundaryFamily:
    """Which nodes of a path are pinned to zero.

    ``kind`` is one of ``"a"`` (pinned at t_a), ``"b"`` (pinned at t_b),
    ``"ab"`` (both ends), ``"0"`` (pinned at the interior time ``t0``) or
    ``"free"`` (no pin; only used for momentum-momentum boundary data).
    """

    kind: str
    t0: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown boundary family {self.kind!r}")
        if self.kind == "0" and self.t0 is None:
            raise ValueError("family '0' needs t0")

    @classmethod
    def fixed_at_start(cls):
        return cls("a")

    @classmethod
    def fixed_at_end(cls):
        return cls("b")

    @classmethod
    def fixed_both_ends(cls):
        return cls("ab")

    @classmethod
    def fixed_at(cls, t0: float):
        return cls("0", float(t0))

    @classmethod
    def parse(cls, name: str, t0: float | None = None) -> "BoundaryFamily":
        key = name.lower().lstrip("z").lstrip("_")
        key = {"": "0", "a": "a", "b": "b", "ab": "ab", "0": "0", "free": "free"}.get(key, key)
        return cls(key, t0)

    def pinned(self, grid: TimeGrid) -> list[int]:
        n = grid.n_steps
        if self.kind == "a":
            return [0]
        if self.kind == "b":
            return [n]
        if self.kind == "ab":
            return [0, n]
        if self.kind == "0":
            return [grid.index_of(self.t0)]
        return []

    def free(self, grid: TimeGrid) -> np.ndarray:
        mask = np.ones(grid.n_steps + 1, dtype=bool)
        mask[self.pinned(grid)] = False
        return np.flatnonzero(mask)


@dataclass(frozen=True)
class MetricMatrix:
    """Constant metric h on R^d with its inverse and signature."""

    h: np.ndarray
    h_inv: np.ndarray = field(init=False)
    signature: tuple[int, int] = field(init=False)

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=float))
        if h.shape[0] != h.shape[1]:
            raise ValueError("metric must be square")
        if not np.allclose(h, h.T, rtol=0, atol=1e-14 * max(1.0, np.abs(h).max())):
            raise ValueError("metric must be symmetric")
        h_inv = np.linalg.inv(h)
        if np.abs(h @ h_inv - np.eye(len(h))).max() > 1e-12:
            raise ValueError("metric is ill-conditioned")
        ev = np.linalg.eigvalsh(h)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "h_inv", h_inv)
        object.__setattr__(self, "signature", (int((ev > 0).sum()), int((ev < 0).sum())))

    @classmethod
    def identity(cls, d: int = 1, scale: float = 1.0) -> "MetricMatrix":
        return cls(scale * np.eye(d))

    @property
    def d(self) -> int:
        return self.h.shape[0]

    @property
    def positive_definite(self) -> bool:
        return self.signature[1] == 0


@dataclass(frozen=True)
class Regime:
    """Diffusive (s = 1) or oscillatory (s = i) normalization."""

    name: str

    def __post_init__(self):
        if self.name not in ("diffusive", "oscillatory"):
            raise ValueError("regime must be 'diffusive' or 'oscillatory'")

    @property
    def s(self) -> complex:
        return 1.0 if self.name == "diffusive" else 1j

    @property
    def sqrt_s(self) -> complex:
        return 1.0 if self.name == "diffusive" else np.exp(1j * np.pi / 4)


DIFFUSIVE = Regime("diffusive")
OSCILLATORY = Regime("oscillatory")


@dataclass(frozen=True)
class DiscretePath:
    """Node samples of a path in R^d, shape ``(n_steps + 1, d)``."""

    grid: TimeGrid
    family: BoundaryFamily
    samples: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.samples, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.shape[0] != self.grid.n_steps + 1:
            raise ValueError("samples do not match the grid")
        if not np.all(np.isfinite(z)):
            raise ValueError("path has non-finite samples")
        if np.any(z[self.family.pinned(self.grid)] != 0.0):
            raise ValueError("path is not zero at its pinned nodes")
        z.setflags(write=False)
        object.__setattr__(self, "samples", z)

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.samples, axis=0)

    @classmethod
    def from_function(cls, grid, family, f) -> "DiscretePath":
        """Sample ``f(t)`` on the grid (pinned nodes are forced to zero)."""
        z = np.array([np.atleast_1d(f(t)) for t in grid.times], dtype=float)
        z[family.pinned(grid)] = 0.0
        return cls(grid, family, z)

    def value_at(self, t: float) -> np.ndarray:
        """Linear interpolation between nodes."""
        return np.array([np.interp(t, self.times, self.samples[:, k]) for k in range(self.d)])


def _as_metric(h, d):
    if h is None:
        return MetricMatrix.identity(d)
    if isinstance(h, MetricMatrix):
        return h
    return MetricMatrix(np.atleast_2d(h))


def quadratic_variation(path: DiscretePath, h: MetricMatrix | None = None) -> float:
    """Sum over subintervals of (dz)^T h (dz) / dt."""
    h = _as_metric(h, path.d)
    if h.d != path.d:
        raise ValueError("metric dimension mismatch")
    dz = path.increments
    return float(np.einsum("ia,ab,ib->", dz, h.h, dz) / path.grid.dt)


def scale_path(path: DiscretePath, T: float) -> DiscretePath:
    """Return z_T(t) = sqrt(T) z(t/T) on [0, T]; ``path`` must live on [0, 1]."""
    if T <= 0:
        raise ValueError("T must be positive")
    g = path.grid
    if g.t_a != 0.0 or g.t_b != 1.0:
        raise ValueError("scale_path expects a path on [0, 1]")
    if T == 1.0:
        return path
    fam = path.family
    if fam.kind == "0":
        fam = BoundaryFamily.fixed_at(fam.t0 * T)
    return DiscretePath(TimeGrid(0.0, T, g.n_steps), fam, np.sqrt(T) * path.samples)


def concat_paths(z: DiscretePath, z2: DiscretePath) -> DiscretePath:
    """Concatenate two paths pinned at their start; the second is shifted by z(T).

    Both grids must start at 0 and share the same step size.
    """
    if z.d != z2.d:
        raise ValueError("incompatible dimensions")
    for p in (z, z2):
        if p.grid.t_a != 0.0 or np.any(p.samples[0] != 0.0):
            raise ValueError("both paths must start at t = 0 with z(0) = 0")
    if not np.isclose(z.grid.dt, z2.grid.dt, rtol=1e-12, atol=0):
        raise ValueError("paths must share the step size")
    grid = TimeGrid(0.0, z.grid.t_b + z2.grid.t_b, z.grid.n_steps + z2.grid.n_steps)
    tail = z.samples[-1] + z2.samples[1:]
    return DiscretePath(grid, BoundaryFamily.fixed_at_start(), np.vstack([z.samples, tail]))


def path_to_csv(path: DiscretePath) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"z{k + 1}" for k in range(path.d)])
    for t, row in zip(path.times, path.samples):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()
