"""Free and WKB transition amplitudes, and the Aharonov-Bohm winding machinery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.special import exp1

from .classical_jacobi import ActionModel, ClassicalSolution, JacobiBlocks, check_nondegenerate
from .determinants import _count_crossings
from .grid_paths import DIFFUSIVE, OSCILLATORY, Regime


@dataclass(frozen=True)
class Constants:
    m: float = 1.0
    hbar: float = 1.0

    @property
    def h(self) -> float:
        return 2 * np.pi * self.hbar

    @property
    def lam(self) -> float:
        """Length scale (h/m)^{1/2} turning dimensionless paths into positions."""
        return np.sqrt(self.h / self.m)


@dataclass(frozen=True)
class WkbAmplitude:
    value: complex
    action_S: float
    vanvleck_det: float
    phase_index: tuple[int, int]
    prefactor_modulus: float
    constants: Constants

    @property
    def modulus(self) -> float:
        return abs(self.value)


def free_amplitude(d: int, x_a, x_b, T: float, regime: Regime = DIFFUSIVE,
                   constants: Constants | None = None) -> complex:
    """(sT)^{-d/2} exp(-pi |x_b - x_a|^2 / (sT)).

    With ``constants`` the positions are physical and the kernel is rescaled
    by lam = (h/m)^{1/2}; for s = i this is (m / (i h T))^{d/2} exp(i m |dx|^2 / (2 hbar T)).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    dx = np.atleast_1d(np.asarray(x_b, dtype=float) - np.asarray(x_a, dtype=float))
    if dx.size != d:
        raise ValueError("endpoint dimension mismatch")
    lam = 1.0 if constants is None else constants.lam
    dx = dx / lam
    s = regime.s
    pref = (regime.sqrt_s ** (-d)) * T ** (-d / 2) / lam**d
    return complex(pref * np.exp(-np.pi * (dx @ dx) / (s * T)))


def chapman_kolmogorov_error(T1: float, T2: float, x_a: float = 0.0, x_b: float = 0.3) -> float:
    """|int K(x_b, x; T1) K(x, x_a; T2) dx - K(x_b, x_a; T1 + T2)| in d = 1, s = 1."""
    f = lambda x: (free_amplitude(1, [x], [x_b], T1) * free_amplitude(1, [x_a], [x], T2)).real
    val, _ = quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return abs(val - free_amplitude(1, [x_a], [x_b], T1 + T2).real)


def _signature(mat, caustic_tol=1e-10):
    sym = 0.5 * (mat + mat.T)
    ev = np.linalg.eigvalsh(sym)
    if np.min(np.abs(ev)) < caustic_tol:
        raise ValueError("caustic: Van Vleck matrix has a vanishing eigenvalue")
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def wkb_point_to_point(model: ActionModel, sol: ClassicalSolution, blocks: JacobiBlocks) -> WkbAmplitude:
    """c h^{-d/2} |det d^2S/dx_a dx_b|^{1/2} exp(iS/hbar), c = exp(i pi (p - q)/4).

    p and q count positive and negative eigenvalues of d^2S/dx_a dx_b.
    """
    if sol.kind != "PP":
        raise ValueError("point-to-point WKB needs a PP solution")
    check_nondegenerate(blocks, "PP")
    hb = model.hbar
    h = 2 * np.pi * hb
    d = model.d
    vv = blocks.action_hessian_ab
    p, q = _signature(vv)
    det = float(np.linalg.det(vv))
    mod = h ** (-d / 2) * np.sqrt(abs(det))
    val = np.exp(1j * np.pi * (p - q) / 4) * mod * np.exp(1j * sol.action / hb)
    m = float(model.metric.h[0, 0])
    return WkbAmplitude(complex(val), sol.action, det, (p, q), mod, Constants(m, hb))


def wkb_momentum_to_position(model: ActionModel, sol: ClassicalSolution, blocks: JacobiBlocks,
                             amplitude=None, regime: Regime = OSCILLATORY) -> WkbAmplitude:
    """det(dx_cl(t_a)/dx_cl(t_b))^{1/2} exp(iS/hbar) T(x_cl(t_a)), i.e. (det K)^{-1/2} prefactor.

    ``amplitude`` is the initial amplitude T(x); the phase S0 lives in ``model``.
    For ``regime=DIFFUSIVE`` the exponential is exp(-S/hbar) and ``model``
    should carry the Euclidean Lagrangian (potential with flipped sign).
    Past focal points the root picks up exp(-i pi/2) per crossing.
    """
    if sol.kind != "MP":
        raise ValueError("momentum-to-position WKB needs an MP solution")
    check_nondegenerate(blocks, "MP")
    hb = model.hbar
    k = blocks.K[-1]
    det_k = float(np.linalg.det(k))
    index = _count_crossings(blocks.K[1:])
    pref = abs(det_k) ** -0.5 * np.exp(-0.5j * np.pi * index)
    amp0 = 1.0 if amplitude is None else amplitude(sol.x[0])
    if regime == OSCILLATORY:
        expo = np.exp(1j * sol.action / hb)
    else:
        expo = np.exp(-sol.action / hb)
    val = pref * expo * amp0
    m = float(model.metric.h[0, 0])
    return WkbAmplitude(complex(val), sol.action, det_k, (index, 0), float(abs(pref * amp0)),
                        Constants(m, hb))


# ------------------------------------------------------------ Aharonov-Bohm

class TruncationError(RuntimeError):
    pass


class AliasingError(RuntimeError):
    pass


@dataclass(frozen=True)
class AbConfig:
    """Endpoints in polar form around a thin solenoid with flux fraction c = eF/h.

    Kernels are diffusive (s = 1) and dimensionless. ``n_max`` caps the
    winding truncation; ``tol`` is the relative tail tolerance.
    """

    c: float
    r_a: float
    theta_a: float
    r_b: float
    theta_b: float
    T: float = 1.0
    n_max: int = 20000
    tol: float = 1e-12
    regime: Regime = DIFFUSIVE

    def __post_init__(self):
        if self.r_a <= 0 or self.r_b <= 0:
            raise ValueError("radii must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.regime != DIFFUSIVE:
            raise NotImplementedError("winding kernels are only implemented for s = 1")

    @property
    def dtheta(self) -> float:
        return self.theta_b - self.theta_a

    @property
    def x_a(self):
        return np.array([self.r_a * np.cos(self.theta_a), self.r_a * np.sin(self.theta_a)])

    @property
    def x_b(self):
        return np.array([self.r_b * np.cos(self.theta_b), self.r_b * np.sin(self.theta_b)])

    def with_c(self, c: float) -> "AbConfig":
        return AbConfig(c, self.r_a, self.theta_a, self.r_b, self.theta_b, self.T, self.n_max, self.tol,
                        self.regime)


def _geometry(cfg: AbConfig):
    rho = 2 * np.pi * cfg.r_a * cfg.r_b / cfg.T
    base = cfg.r_a * np.exp(-np.pi * (cfg.r_a - cfg.r_b) ** 2 / cfg.T) / cfg.T
    return rho, base


def _weight(rho):
    return lambda u: np.exp(-rho * (np.cosh(u) - 1.0))


def polar_kernels(cfg: AbConfig, ns) -> np.ndarray:
    """Per-winding kernels <r_b, theta_b | r_a, theta_a + 2 pi n> for s = 1.

    Each kernel is the free 2-d kernel restricted to the principal sheet
    (|phi| < pi, phi = theta_b - theta_a - 2 pi n) plus a diffraction
    correction, the integral over u of exp(-rho cosh u) R(u, phi) with
    rho = 2 pi r_a r_b / T. The corrections cancel in pairs when summed over
    all windings, so the plain sum is the free kernel.
    Includes the r_a factor of the polar measure.
    """
    ns = np.atleast_1d(np.asarray(ns))
    rho, base = _geometry(cfg)
    phi = cfg.dtheta - 2 * np.pi * ns
    chi = np.where(np.abs(phi) < np.pi, 1.0,
                   np.where(np.isclose(np.abs(phi), np.pi, rtol=0, atol=1e-15), 0.5, 0.0))
    sheet = chi * np.exp(rho * (np.cos(phi) - 1.0))
    umax = np.arccosh(1.0 + 80.0 / rho)
    ap, am = np.pi + phi, np.pi - phi
    w = _weight(rho)

    def integrand(u):
        return w(u) * (ap / (u * u + ap * ap) + am / (u * u + am * am))

    diff, _ = quad_vec(integrand, 0.0, umax, epsabs=1e-16, epsrel=1e-13, limit=2000)
    return base * (sheet - np.exp(-2 * rho) / np.pi * diff)


_N_MOMENTS = 5


def _moments(rho):
    umax = np.arccosh(1.0 + 80.0 / rho)
    w = _weight(rho)
    return np.array([quad(lambda u: u ** (2 * k) * w(u), 0.0, umax, epsabs=1e-300, epsrel=1e-13, limit=400)[0]
                     for k in range(_N_MOMENTS)])


def _asymptotic_kernels(cfg: AbConfig, ns, mu) -> np.ndarray:
    """Large-winding expansion of the kernels: a/(u^2 + a^2) = sum_k (-1)^k u^{2k} / a^{2k+1}."""
    rho, base = _geometry(cfg)
    phi = cfg.dtheta - 2 * np.pi * np.asarray(ns, dtype=float)
    ap, am = np.pi + phi, np.pi - phi
    acc = np.zeros_like(phi)
    for k in range(_N_MOMENTS - 1, -1, -1):
        p = 2 * k + 1
        acc += (-1) ** k * mu[k] * (ap ** -p + am ** -p)
    return -base * np.exp(-2 * rho) / np.pi * acc


@dataclass(frozen=True)
class WindingSeries:
    """Winding kernels split into an exactly integrated core and an expanded tail.

    ``ns``/``kernels`` cover |n| <= N by quadrature; ``tail_ns``/``tail_kernels``
    cover N < |n| <= M by the moment expansion; beyond M only the leading
    1/n^2 term is kept and summed in closed form.
    """

    cfg: AbConfig
    ns: np.ndarray
    kernels: np.ndarray
    tail_ns: np.ndarray
    tail_kernels: np.ndarray
    lead: float

    @property
    def n_core(self) -> int:
        return int(self.ns[-1])

    @property
    def n_window(self) -> int:
        return int(self.tail_ns.max())

    def remainder(self, c: float) -> complex:
        """sum_{|n| > M} exp(-2 pi i c n) lead / n^2, via the integral with midpoint correction."""
        alpha = c - np.round(c)
        x = self.n_window + 0.5
        beta = 2 * np.pi * alpha
        if beta == 0:
            val = 1.0 / x
        else:
            val = (np.exp(1j * beta * x) / x + 1j * beta * exp1(-1j * beta * x)).real
        return 2 * self.lead * val

    def periodic_part(self, c: float) -> complex:
        """The winding sum without the global factor exp(ic dtheta); depends on c mod 1 only."""
        frac = c - np.floor(c)
        core = np.sum(np.exp(-2j * np.pi * frac * self.ns) * self.kernels)
        tail = np.sum(np.exp(-2j * np.pi * frac * self.tail_ns) * self.tail_kernels)
        return complex((tail + self.remainder(frac) + core) / self.cfg.r_a)

    def modulus(self, c: float) -> float:
        return abs(self.periodic_part(c))

    def amplitude(self, c: float) -> complex:
        return complex(np.exp(1j * c * self.cfg.dtheta) * self.periodic_part(c))


def winding_kernels(cfg: AbConfig, block: int = 32, window: int = 1 << 16) -> WindingSeries:
    """Integrate kernels for growing |n| until the large-winding expansion takes over.

    The switch happens once quadrature and expansion agree at both edges to
    ``tol`` relative to the running sum; the expansion then carries the
    winding sum out to N + ``window``. Raises TruncationError if no switch
    point is found below ``n_max``.
    """
    rho, base = _geometry(cfg)
    mu = _moments(rho)
    ns = np.arange(-block, block + 1)
    ks = polar_kernels(cfg, ns)
    while True:
        N = int(ns[-1])
        edge = np.array([ns[0], ns[-1]])
        mismatch = np.abs(_asymptotic_kernels(cfg, edge, mu) - ks[[0, -1]]).max()
        if mismatch < cfg.tol * abs(ks.sum()):
            break
        if N >= cfg.n_max:
            raise TruncationError(f"winding expansion not reached by n_max = {cfg.n_max}")
        hi = np.arange(N + 1, min(N + block, cfg.n_max) + 1)
        lo = -hi[::-1]
        ks = np.concatenate([polar_kernels(cfg, lo), ks, polar_kernels(cfg, hi)])
        ns = np.concatenate([lo, ns, hi])
    hi = np.arange(N + 1, N + window + 1)
    tail_ns = np.concatenate([-hi[::-1], hi])
    tail = _asymptotic_kernels(cfg, tail_ns, mu)
    lead = base * np.exp(-2 * rho) * mu[0] / (2 * np.pi**2)
    return WindingSeries(cfg, ns, ks, tail_ns, tail, float(lead))


def ab_resum(ns, kernels, c: float, dtheta: float, r_a: float) -> complex:
    """(1/r_a) sum_n exp(ic(dtheta - 2 pi n)) P_n over the given windings.

    The winding phase uses c mod 1, so that integer shifts of c change the
    result only through the global factor exp(i c dtheta).
    """
    ns = np.asarray(ns)
    frac = c - np.floor(c)
    terms = np.exp(-2j * np.pi * frac * ns) * np.asarray(kernels)
    return complex(np.exp(1j * c * dtheta) * terms.sum() / r_a)


def ab_winding_sum(cfg: AbConfig) -> complex:
    """Aharonov-Bohm amplitude as a sum over winding classes with phases exp(ic(...))."""
    return winding_kernels(cfg).amplitude(cfg.c)


def c_grid(m: int) -> np.ndarray:
    return np.arange(m) / m


def ab_polar_inversion(amplitudes, dtheta: float, r_a: float, alias_tol: float = 1e-6):
    """Recover per-winding kernels from amplitudes sampled on a uniform c-grid of [0, 1).

    P_n = r_a int_0^1 dc exp(-ic dtheta) exp(2 pi i c n) A(c) by the rectangle
    rule, which returns P_n plus its aliases P_{n + km}. Returns (ns, P) for
    -m/2 <= n < m/2 and raises AliasingError when the edge windings are not
    negligible against the largest kernel.
    """
    a = np.asarray(amplitudes, dtype=complex)
    m = a.size
    if m < 64:
        raise ValueError("need at least 64 c-nodes")
    c = c_grid(m)
    ns = np.arange(-(m // 2), m - m // 2)
    f = np.exp(-1j * c * dtheta) * a
    P = r_a * (np.exp(2j * np.pi * np.outer(ns, c)) @ f) / m
    edge = max(abs(P[0]), abs(P[-1]))
    if edge > alias_tol * np.abs(P).max():
        raise AliasingError("winding content reaches the c-grid Nyquist limit")
    return ns, P


def ab_sweep(cfg: AbConfig, cs) -> np.ndarray:
    """Amplitudes for several flux fractions, reusing one set of winding kernels."""
    series = winding_kernels(cfg)
    return np.array([series.amplitude(c) for c in cs])


def gauge_phase_along(c: float, xy, grid) -> tuple[float, float]:
    """Phase gained by the abelian-gauge flow along a Cartesian path, and c times its swept angle.

    Returns (Theta(t_b) - Theta(t_a), c * (lifted theta_b - theta_a)).
    """
    from .driven_flow import abelian_gauge, integrate

    xy = np.asarray(xy, dtype=float)
    z = xy - xy[0]
    res = integrate(abelian_gauge(c), z, np.r_[xy[0], 0.0], grid=grid)
    ang = np.unwrap(np.arctan2(xy[:, 1], xy[:, 0]))
    return float(res.endpoint[2] - res.start[2]), float(c * (ang[-1] - ang[0]))
