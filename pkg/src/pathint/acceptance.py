"""Acceptance battery shared by the test suite and ``pathint suite``.

Each check returns a :class:`Outcome` with the measured quantities and the
tolerances they were held to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classical_jacobi import (ActionModel, backward_blocks, harmonic_action, jacobi_blocks, jacobi_green,
                               second_variation_matrix, solve_classical)
from .determinants import det_by_jacobi, det_by_limit, det_by_log_derivative, morse_index
from .driven_flow import chain_rule_check, develop, frame_bundle_s2, multistep_sigma, sphere_action, sphere_points
from .gaussian_mc import (PathSampler, characteristic_functional, expectation, feynman_kac, heat_oracle_cn,
                          covariance_oracle, product_functional)
from .greens import (GreenFunction, decomposition_identity_error, discretize_kernel, green_closed_form,
                     verify_inverse)
from .grid_paths import BoundaryFamily, DiscretePath, MetricMatrix, TimeGrid, quadratic_variation
from .propagators import (AbConfig, Constants, ab_polar_inversion, ab_resum, ab_sweep, c_grid,
                          chapman_kolmogorov_error, free_amplitude, winding_kernels, wkb_point_to_point)


@dataclass
class Outcome:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{tag}] {self.name}: {bits}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.3g}"
    return str(v)


METRIC_2D = MetricMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]))


def greens_oracle(n: int = 200) -> Outcome:
    grid = TimeGrid(0.0, 1.0, n)
    worst_pinned, worst_free = 0.0, 0.0
    for metric in (MetricMatrix.identity(1), METRIC_2D):
        for fam in (BoundaryFamily("a"), BoundaryFamily("b"), BoundaryFamily("ab"), BoundaryFamily("0", 0.5)):
            err = verify_inverse(discretize_kernel(fam, grid, metric), GreenFunction(fam, grid, metric))
            if fam.kind == "ab":
                worst_pinned = max(worst_pinned, err)
            else:
                worst_free = max(worst_free, err)
    val = float(green_closed_form(BoundaryFamily("ab"), grid, 0.25, 0.5))
    ok = worst_pinned < 1e-10 and worst_free < 5 * grid.dt and abs(val - 0.125) < 1e-15
    return Outcome("greens oracle", ok, {"pinned_err": worst_pinned, "pinned_tol": 1e-10,
                                         "free_end_err": worst_free, "free_end_tol": 5 * grid.dt,
                                         "G_ab(0.25,0.5)": val})


def decomposition_identity() -> Outcome:
    err = decomposition_identity_error(TimeGrid(0.0, 1.0, 200), 50)
    return Outcome("decomposition identity", err < 1e-12, {"err": err, "tol": 1e-12})


def mc_covariance(count: int = 100_000, seed: int = 7) -> Outcome:
    grid = TimeGrid(0.0, 1.0, 40)
    fam = BoundaryFamily("ab")
    sampler = PathSampler(fam, grid, rng_seed=seed)
    pairs = [(2, 5), (4, 4), (10, 20), (10, 30), (15, 25), (20, 20), (5, 35), (30, 38), (1, 39), (12, 13)]
    worst = 0.0
    for i, j in pairs:
        mean, err = expectation(sampler, product_functional(i, j), count)
        worst = max(worst, abs(mean - covariance_oracle(fam, grid, i, j)) / err)
    za = PathSampler(BoundaryFamily("a"), grid, rng_seed=seed + 1)
    worst_cf = 0.0
    for rho in (0.5, 1.0):
        mean, err = expectation(za, characteristic_functional(rho), count)
        worst_cf = max(worst_cf, abs(mean - np.exp(-np.pi * rho**2 * grid.length)) / err)
    ok = worst < 3 and worst_cf < 3
    return Outcome("monte carlo covariance", ok, {"cov_max_sigma": worst, "cf_max_sigma": worst_cf,
                                                  "sigma_tol": 3})


def feynman_kac_vs_pde(count: int = 100_000, seed: int = 1) -> Outcome:
    phi = lambda x: np.exp(-x[..., 0] ** 2)
    pots = {"V=0": lambda x: 0.0 * x[..., 0], "V=-x^2": lambda x: -x[..., 0] ** 2}
    worst = -np.inf
    detail = {}
    for tag, V in pots.items():
        for x0 in (0.0, 0.5):
            mean, err = feynman_kac(V, phi, 0.5, [x0], count, seed=seed)
            ref = heat_oracle_cn(V, phi, 0.5, x0)
            gap = abs(mean - ref) - (3 * err + 1e-3)
            worst = max(worst, gap)
            detail[f"{tag},x0={x0}"] = abs(mean - ref)
    detail["tol"] = "3 sigma + 1e-3"
    return Outcome("feynman-kac vs crank-nicolson", worst < 0, detail)


def _harmonic_pp(omega: float, n: int):
    model = harmonic_action(1, omega)
    sol = solve_classical(model, "PP", TimeGrid(0.0, 1.0, n), x_a=[0.0], x_b=[0.0])
    return model, sol


def determinant_triple() -> Outcome:
    detail = {}
    ok = True
    for wt in (0.5, 1.0, 2.0):
        model, sol = _harmonic_pp(wt, 1000)
        lim = det_by_limit(lambda t: -wt**2, BoundaryFamily("ab"), TimeGrid(0.0, 1.0, 500)).value
        jac = det_by_jacobi(jacobi_blocks(model, sol), "PP").value
        logd = det_by_log_derivative(model, sol, "PP").value
        vals = np.array([lim, jac, logd])
        spread = float(np.abs(vals[:, None] - vals[None, :]).max() / np.abs(vals).min())
        ok &= spread < 5e-3
        detail[f"spread(wT={wt})"] = spread
    grid = TimeGrid(0.0, 1.0, 2000)
    osc = det_by_limit(lambda t: -1.0, BoundaryFamily("ab"), grid).value
    dif = det_by_limit(lambda t: 1.0, BoundaryFamily("ab"), grid).value
    r_osc, r_dif = abs(osc / np.sin(1) - 1), abs(dif / np.sinh(1) - 1)
    ok &= r_osc < 1e-3 and r_dif < 1e-3
    detail.update({"pair_tol": 5e-3, "sin1_rel": r_osc, "sinh1_rel": r_dif, "value_tol": 1e-3})
    return Outcome("determinant triple agreement", bool(ok), detail)


def morse_indices() -> Outcome:
    grid = TimeGrid(0.0, 1.0, 1000)
    detail, ok = {}, True
    for wt in (0.5 * np.pi - 0.1, 1.5 * np.pi, 3.5 * np.pi):
        expected = int(np.floor(wt / np.pi))
        got = morse_index(lambda t, w=wt: -w**2, BoundaryFamily("ab"), grid)
        model, sol = _harmonic_pp(wt, 2000)
        by_jacobi = det_by_jacobi(jacobi_blocks(model, sol), "PP").morse_index
        ok &= got == expected == by_jacobi
        detail[f"wT={wt:.3f}"] = f"{got}/{by_jacobi} expected {expected}"
    return Outcome("morse index", bool(ok), detail)


def anharmonic_model() -> ActionModel:
    """Anisotropic 2-d potential with a cubic term and a non-diagonal metric."""
    k = np.array([[1.0, 0.3], [0.3, -0.5]])
    return ActionModel(MetricMatrix(np.array([[1.0, 0.2], [0.2, 2.0]])),
                      lambda x: 0.5 * x @ k @ x + 0.05 * x[0] ** 3,
                      lambda x: k @ x + np.array([0.15 * x[0] ** 2, 0.0]),
                      lambda x: k + np.array([[0.3 * x[0], 0.0], [0.0, 0.0]]))


BOUNDARY_DATA = {
    "PP": dict(x_a=[0.1, 0.2], x_b=[0.5, -0.3]),
    "MP": dict(p_a=[0.2, 0.1], x_b=[0.5, -0.3]),
    "PM": dict(x_a=[0.1, 0.2], p_b=[0.3, 0.0]),
    "MM": dict(p_a=[0.2, 0.1], p_b=[0.3, 0.0]),
}


def jacobi_green_error(model, kind, grid, stride: int = 20) -> float:
    sol = solve_classical(model, kind, grid, **BOUNDARY_DATA[kind])
    blocks = jacobi_blocks(model, sol)
    ker = second_variation_matrix(model, sol, kind)
    inv = np.linalg.inv(ker.matrix)
    d = model.d
    pos = {int(node): k for k, node in enumerate(ker.nodes)}
    err = 0.0
    sub = ker.nodes[::stride]
    for i in sub:
        for j in sub:
            g = jacobi_green(blocks, kind, grid.times[i], grid.times[j])
            a, b = pos[int(i)] * d, pos[int(j)] * d
            err = max(err, float(np.abs(g - inv[a:a + d, b:b + d]).max()))
    return err


def jacobi_identities() -> Outcome:
    model = anharmonic_model()
    grid = TimeGrid(0.0, 1.0, 1000)
    sol = solve_classical(model, "PP", grid, **BOUNDARY_DATA["PP"])
    b = jacobi_blocks(model, sol)
    d = model.d
    init = float(np.abs(b.phi[0] - np.eye(2 * d)).max())
    transp = 0.0
    for idx in (250, 600, 1000):
        back = backward_blocks(model, sol, idx)
        transp = max(transp, float(np.abs(back[:d, :d].T - b.Kt[idx]).max()))
    jm = float(np.abs(b.J[-1] @ b.M - np.eye(d)).max())
    kn = float(np.abs(b.K[-1] @ b.N - np.eye(d)).max())

    eps = 1e-3
    x_a, x_b = np.array(BOUNDARY_DATA["PP"]["x_a"]), np.array(BOUNDARY_DATA["PP"]["x_b"])

    def action(xa, xb):
        return solve_classical(model, "PP", grid, x_a=xa, x_b=xb).action

    fd = np.zeros((d, d))
    for beta in range(d):
        for alpha in range(d):
            eb, ea = eps * np.eye(d)[beta], eps * np.eye(d)[alpha]
            fd[beta, alpha] = (action(x_a + ea, x_b + eb) - action(x_a - ea, x_b + eb)
                               - action(x_a + ea, x_b - eb) + action(x_a - ea, x_b - eb)) / (4 * eps**2)
    hess_rel = float(np.abs(fd - b.action_hessian_ab).max() / np.abs(fd).max())

    g200 = TimeGrid(0.0, 1.0, 200)
    green_errs = {k: jacobi_green_error(model, k, g200) for k in ("PP", "MP", "PM", "MM")}
    green_tol = 5 * g200.dt
    ok = (init == 0.0 and transp < 1e-8 and jm < 1e-10 and kn < 1e-10 and hess_rel < 1e-4
          and max(green_errs.values()) < green_tol)
    detail = {"init": init, "transpose": transp, "JM-I": jm, "KN-I": kn, "hessian_rel": hess_rel}
    detail.update({f"green_{k}": v for k, v in green_errs.items()})
    detail["green_tol"] = green_tol
    return Outcome("jacobi block identities", bool(ok), detail)


def wkb_exactness() -> Outcome:
    T = 1.3
    free = harmonic_action(2, 0.0)
    sol = solve_classical(free, "PP", TimeGrid(0.0, T, 200), x_a=[0.0, 0.1], x_b=[0.5, -0.2])
    w = wkb_point_to_point(free, sol, jacobi_blocks(free, sol))
    c = Constants()
    free_err = abs(w.modulus - c.m / (c.h * T)) / (c.m / (c.h * T))
    omega = 1.0
    model = harmonic_action(1, omega)
    sol = solve_classical(model, "PP", TimeGrid(0.0, T, 1000), x_a=[0.3], x_b=[-0.4])
    w = wkb_point_to_point(model, sol, jacobi_blocks(model, sol))
    det = det_by_limit(lambda t: -(omega**2), BoundaryFamily("ab"), TimeGrid(0.0, T, 500)).value
    via_det = np.sqrt(c.m / (c.h * T) / abs(det))
    closed = np.sqrt(c.m * omega / (c.h * abs(np.sin(omega * T))))
    harm_rel = abs(w.modulus - via_det) / via_det
    ok = free_err < 1e-14 and harm_rel < 5e-3
    return Outcome("wkb exactness", ok, {"free_rel": free_err, "free_tol": 1e-14, "harmonic_rel": harm_rel,
                                         "harmonic_tol": 5e-3, "closed_vs_det": abs(closed - via_det) / closed})


def flow_development() -> Outcome:
    n = 10_000
    grid = TimeGrid(0.0, np.pi, n)
    z = DiscretePath.from_function(grid, BoundaryFamily("b"), lambda t: [t - np.pi, 0.0])
    x_b, e1, e2 = np.eye(3)[2], np.eye(3)[0], np.eye(3)[1]
    res = develop(z, x_b, (e1, e2))
    s = grid.times - np.pi
    exact = np.outer(np.cos(s), x_b) + np.outer(np.sin(s), e1)
    circle = float(np.abs(sphere_points(res) - exact).max())
    q0 = quadratic_variation(z)
    action_rel = abs(sphere_action(res) - q0) / q0

    zz = DiscretePath.from_function(TimeGrid(0.0, 1.0, 4096), BoundaryFamily("a"), lambda t: [0.8 * t, 0.6 * t])
    system = frame_bundle_s2()
    x0 = np.concatenate([x_b, e1, e2])
    chain = chain_rule_check(system, zz, x0, 0.5)
    ks = np.array([8, 16, 32, 64, 128, 256])
    sig = [multistep_sigma(system, zz, x0, k)[:3] for k in ks]
    diffs = [np.linalg.norm(sig[i] - sig[i + 1]) for i in range(len(ks) - 1)]
    order = float(-np.polyfit(np.log(ks[:-1]), np.log(diffs), 1)[0])
    ok = circle < 1e-6 and action_rel < 1e-6 and chain == 0.0 and abs(order - 1.0) <= 0.2
    return Outcome("flow and development", bool(ok), {"great_circle": circle, "circle_tol": 1e-6,
                                                      "action_rel": action_rel, "action_tol": 1e-6,
                                                      "chain_rule": chain, "multistep_order": order,
                                                      "order_tol": "1.0 +- 0.2"})


def aharonov_bohm() -> Outcome:
    cfg = AbConfig(0.0, 0.7, 0.2, 1.1, 1.5)
    series = winding_kernels(cfg)
    free = free_amplitude(2, cfg.x_a, cfg.x_b, cfg.T)
    c0_err = abs(series.amplitude(0.0) - free) / abs(free)
    period = 0.0
    for c in (0.125, 0.3, 0.5, 0.77):
        p0 = series.modulus(c) ** 2
        for k in (1, 2, -3):
            period = max(period, abs(series.modulus(c + k) ** 2 - p0) / p0)
    integer = max(abs(series.modulus(float(k)) - series.modulus(0.0)) for k in (1, 2, 5, -4))
    amps = ab_sweep(cfg, c_grid(256))
    ns, P = ab_polar_inversion(amps, cfg.dtheta, cfg.r_a)
    trip = max(abs(ab_resum(ns, P, c, cfg.dtheta, cfg.r_a) - a) / abs(a)
               for c, a in zip(c_grid(256)[::17], amps[::17]))
    ok = c0_err < 1e-10 and period < 1e-13 and integer == 0.0 and trip < 1e-8
    return Outcome("aharonov-bohm winding sum", bool(ok), {"c0_rel": c0_err, "c0_tol": 1e-10,
                                                          "period_rel": period, "period_tol": 1e-13,
                                                          "integer_c_modulus_gap": integer,
                                                          "round_trip_rel": trip, "round_trip_tol": 1e-8})


def chapman_kolmogorov() -> Outcome:
    err = chapman_kolmogorov_error(0.5, 0.5)
    return Outcome("chapman-kolmogorov", err < 1e-6, {"err": err, "tol": 1e-6})


CRITERIA = [greens_oracle, decomposition_identity, mc_covariance, feynman_kac_vs_pde, determinant_triple,
            morse_indices, jacobi_identities, wkb_exactness, flow_development, aharonov_bohm, chapman_kolmogorov]


def run_all(verbose: bool = True) -> list[Outcome]:
    out = []
    for check in CRITERIA:
        res = check()
        if verbose:
            print(res.line(), flush=True)
        out.append(res)
    return out
