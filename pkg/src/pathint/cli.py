"""Command-line front end: one subcommand per experiment, JSON or CSV output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

SCHEMA = 1
FAMILY_KIND = {"za": "PM", "zb": "MP", "zab": "PP"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    fmt: str
    out: str | None
    seed: int
    grid_n: int
    samples: int
    extra: dict = field(default_factory=dict)


class FlagError(ValueError):
    pass


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v
    return conv


def _vector(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid-n", "--n", dest="grid_n", type=_positive(int), default=200)
    common.add_argument("--samples", type=_positive(int), default=100_000)

    p = argparse.ArgumentParser(prog="pathint", description="Gaussian path-integral experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("greens", parents=[common], help="closed-form vs discrete Green's functions")
    g.add_argument("--family", choices=("za", "zb", "zab", "z0"), default="zab")
    g.add_argument("--t0", type=float, default=0.5)
    g.add_argument("--d", type=int, choices=(1, 2), default=1)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo checks of the Gaussian integrator")
    m.add_argument("--experiment", choices=("covariance", "feynman-kac", "endpoint"), default="covariance")
    m.add_argument("--family", choices=("za", "zb", "zab"), default="zab")
    m.add_argument("--T", type=_positive(float), default=0.5)
    m.add_argument("--x0", type=float, default=0.0)
    m.add_argument("--potential", choices=("zero", "neg-x2"), default="zero")

    f = sub.add_parser("flow", parents=[common], help="multistep convergence of a driven flow")
    f.add_argument("--velocity", type=_vector, default=[0.8, 0.6])
    f.add_argument("--substeps", type=_vector, default=[8, 16, 32, 64, 128, 256])

    d = sub.add_parser("develop", parents=[common], help="roll a straight line onto the sphere")
    d.add_argument("--T", type=_positive(float), default=float(np.pi))

    j = sub.add_parser("jacobi", parents=[common], help="Jacobi blocks of the harmonic oscillator")
    j.add_argument("--omega", type=float, default=1.0)
    j.add_argument("--T", type=_positive(float), default=1.0)

    dt = sub.add_parser("det", parents=[common], help="determinant ratio Det(Q/Q0)")
    dt.add_argument("--method", choices=("limit", "jacobi", "logdet", "all"), default="limit")
    dt.add_argument("--omega", type=float, default=1.0)
    dt.add_argument("--T", type=_positive(float), default=1.0)
    dt.add_argument("--family", choices=tuple(FAMILY_KIND), default="zab")
    dt.add_argument("--sign", choices=("oscillatory", "diffusive"), default="oscillatory")

    w = sub.add_parser("wkb", parents=[common], help="WKB amplitude of the harmonic oscillator")
    w.add_argument("--kind", choices=("PP", "MP"), default="PP")
    w.add_argument("--omega", type=float, default=1.0)
    w.add_argument("--T", type=_vector, default=[1.0], help="one time or a comma-separated sweep")
    w.add_argument("--xa", type=float, default=0.0)
    w.add_argument("--xb", type=float, default=0.5)
    w.add_argument("--pa", type=float, default=0.0)

    a = sub.add_parser("ab", parents=[common], help="Aharonov-Bohm winding sum")
    a.add_argument("--c", type=_vector, default=[0.25], help="one flux fraction or a comma-separated sweep")
    a.add_argument("--ra", type=_positive(float), default=0.7)
    a.add_argument("--rb", type=_positive(float), default=1.1)
    a.add_argument("--theta-a", type=float, default=0.2)
    a.add_argument("--theta-b", type=float, default=1.5)
    a.add_argument("--T", type=_positive(float), default=1.0)
    a.add_argument("--n-max", type=_positive(int), default=20000)
    a.add_argument("--invert", type=int, default=0, help="recover winding kernels from this many c-nodes")

    sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    return p


# ------------------------------------------------------------------ commands

def _greens(cfg):
    from .greens import GreenFunction, discretize_kernel
    from .grid_paths import BoundaryFamily, MetricMatrix, TimeGrid

    grid = TimeGrid(0.0, 1.0, cfg.grid_n)
    fam = BoundaryFamily.parse(cfg.extra["family"], cfg.extra["t0"] if cfg.extra["family"] == "z0" else None)
    metric = MetricMatrix.identity(cfg.extra["d"])
    ker = discretize_kernel(fam, grid, metric)
    inv = np.linalg.inv(ker.matrix)[:: metric.d, :: metric.d]
    nodes = ker.nodes
    closed = GreenFunction(fam, grid, metric).node_matrix(nodes)[:: metric.d, :: metric.d]
    t = grid.times[nodes]
    tt, uu = np.meshgrid(t, t, indexing="ij")
    err = np.abs(closed - inv)
    rows = np.column_stack([tt.ravel(), uu.ravel(), closed.ravel(), inv.ravel(), err.ravel()])
    summary = {"family": fam.kind, "n": cfg.grid_n, "max_abs_err": float(err.max())}
    return summary, (["t", "u", "G_closed", "G_discrete", "abs_err"], rows), f"max abs_err {err.max():.3e}"


def _mc(cfg):
    from .gaussian_mc import (PathSampler, covariance_oracle, endpoint_fixing_check, expectation, feynman_kac,
                              heat_oracle_cn, product_functional)
    from .grid_paths import BoundaryFamily, TimeGrid

    x = cfg.extra
    if x["experiment"] == "covariance":
        grid = TimeGrid(0.0, 1.0, cfg.grid_n)
        fam = BoundaryFamily.parse(x["family"])
        sampler = PathSampler(fam, grid, rng_seed=cfg.seed)
        free = fam.free(grid)
        picks = free[np.linspace(0, free.size - 1, 5).astype(int)]
        rows = []
        for i in picks:
            for j in picks:
                if j < i:
                    continue
                mean, err = expectation(sampler, product_functional(int(i), int(j)), cfg.samples)
                ref = covariance_oracle(fam, grid, int(i), int(j))
                rows.append([grid.times[i], grid.times[j], mean, err, ref, abs(mean - ref) / err])
        rows = np.array(rows)
        worst = float(rows[:, -1].max())
        summary = {"experiment": "covariance", "family": fam.kind, "samples": cfg.samples,
                   "max_sigma": worst, "pairs": rows.tolist()}
        return summary, (["t", "u", "mc", "std_err", "oracle", "sigma"], rows), f"max deviation {worst:.2f} sigma"
    if x["experiment"] == "feynman-kac":
        phi = lambda y: np.exp(-y[..., 0] ** 2)
        V = (lambda y: 0.0 * y[..., 0]) if x["potential"] == "zero" else (lambda y: -y[..., 0] ** 2)
        mean, err = feynman_kac(V, phi, x["T"], [x["x0"]], cfg.samples, n_steps=cfg.grid_n, seed=cfg.seed)
        ref = heat_oracle_cn(V, phi, x["T"], x["x0"])
        summary = {"experiment": "feynman-kac", "mc": mean, "std_err": err, "pde": ref, "abs_err": abs(mean - ref)}
        rows = np.array([[x["T"], x["x0"], mean, err, ref]])
        return summary, (["T", "x0", "mc", "std_err", "pde"], rows), f"|MC - PDE| = {abs(mean - ref):.2e}"
    res = endpoint_fixing_check(TimeGrid(0.0, x["T"], cfg.grid_n), 1, cfg.samples, seed=cfg.seed)
    res = {k: float(np.real(v)) for k, v in res.items()}
    rows = np.array([[res[k] for k in ("lhs", "lhs_err", "rhs", "rhs_err", "abs_err")]])
    return ({"experiment": "endpoint", **res}, (["lhs", "lhs_err", "rhs", "rhs_err", "abs_err"], rows),
            f"lhs {res['lhs']:.4f} rhs {res['rhs']:.4f}")


def _flow(cfg):
    from .driven_flow import frame_bundle_s2, integrate, multistep_sigma
    from .grid_paths import BoundaryFamily, DiscretePath, TimeGrid

    v = np.asarray(cfg.extra["velocity"], dtype=float)
    if v.size != 2:
        raise FlagError("--velocity needs two components")
    ks = np.asarray(cfg.extra["substeps"], dtype=int)
    z = DiscretePath.from_function(TimeGrid(0.0, 1.0, max(cfg.grid_n, 2 * ks.max())), BoundaryFamily("a"),
                                   lambda t: v * t)
    system = frame_bundle_s2()
    x0 = np.concatenate(np.eye(3)[[2, 0, 1]])
    ref = integrate(system, z, x0).endpoint[:3]
    pts = np.array([multistep_sigma(system, z, x0, int(k))[:3] for k in ks])
    errs = np.linalg.norm(pts - ref, axis=1)
    order = float(-np.polyfit(np.log(ks), np.log(errs), 1)[0])
    rows = np.column_stack([ks, errs])
    return ({"substeps": ks.tolist(), "errors": errs.tolist(), "order": order},
            (["substeps", "error"], rows), f"multistep order {order:.3f}")


def _develop(cfg):
    from .driven_flow import develop, sphere_points
    from .grid_paths import BoundaryFamily, DiscretePath, TimeGrid

    T = cfg.extra["T"]
    grid = TimeGrid(0.0, T, cfg.grid_n)
    z = DiscretePath.from_function(grid, BoundaryFamily("b"), lambda t: [t - T, 0.0])
    e = np.eye(3)
    res = develop(z, e[2], (e[0], e[1]))
    pts = sphere_points(res)
    s = grid.times - T
    exact = np.outer(np.cos(s), e[2]) + np.outer(np.sin(s), e[0])
    dev = float(np.abs(pts - exact).max())
    return ({"T": T, "n": cfg.grid_n, "great_circle_deviation": dev},
            (["t", "x", "y", "z"], np.column_stack([grid.times, pts])), f"deviation {dev:.2e}")


def _harmonic(omega, T, n, kind="PP", xa=0.0, xb=0.0, pa=0.0, sign=1.0):
    from .classical_jacobi import quadratic_action, solve_classical
    from .grid_paths import TimeGrid

    model = quadratic_action([[sign * omega**2]])
    grid = TimeGrid(0.0, T, n)
    if kind == "PP":
        sol = solve_classical(model, "PP", grid, x_a=[xa], x_b=[xb])
    elif kind == "MP":
        sol = solve_classical(model, "MP", grid, p_a=[pa], x_b=[xb])
    else:
        sol = solve_classical(model, "PM", grid, x_a=[xa], p_b=[pa])
    return model, sol


def _jacobi(cfg):
    from .classical_jacobi import jacobi_blocks

    model, sol = _harmonic(cfg.extra["omega"], cfg.extra["T"], cfg.grid_n)
    b = jacobi_blocks(model, sol)
    t = sol.grid.times
    rows = np.column_stack([t, b.K[:, 0, 0], b.J[:, 0, 0], b.L[:, 0, 0], b.Kt[:, 0, 0]])
    summary = {"J": float(b.J[-1, 0, 0]), "K": float(b.K[-1, 0, 0]), "L": float(b.L[-1, 0, 0]),
               "Kt": float(b.Kt[-1, 0, 0]), "action_hessian_ab": float(b.action_hessian_ab[0, 0])}
    return summary, (["t", "K", "J", "L", "Kt"], rows), f"J(t_b,t_a) = {summary['J']:.6g}"


def _det(cfg):
    from .classical_jacobi import jacobi_blocks
    from .determinants import det_by_jacobi, det_by_limit, det_by_log_derivative
    from .grid_paths import BoundaryFamily, TimeGrid

    x = cfg.extra
    sign = 1.0 if x["sign"] == "oscillatory" else -1.0
    omega, T = x["omega"], x["T"]
    kind = FAMILY_KIND[x["family"]]
    fam = BoundaryFamily.parse(x["family"])
    methods = ("limit", "jacobi", "logdet") if x["method"] == "all" else (x["method"],)
    results = {}
    for meth in methods:
        if meth == "limit":
            r = det_by_limit(lambda t: -sign * omega**2, fam, TimeGrid(0.0, T, cfg.grid_n))
        else:
            model, sol = _harmonic(omega, T, max(cfg.grid_n, 1000), kind, sign=sign)
            if meth == "jacobi":
                r = det_by_jacobi(jacobi_blocks(model, sol), kind)
            else:
                r = det_by_log_derivative(model, sol, kind)
        results[meth] = {"value": r.value, "morse_index": r.morse_index, "estimated_error": r.estimated_error}
    first = results[methods[0]]
    summary = {"family": x["family"], "omega": omega, "T": T, "sign": x["sign"], **first,
               "methods": results}
    rows = np.array([[methods.index(k), v["value"], v["morse_index"]] for k, v in results.items()])
    head = ", ".join(f"{k} {v['value']:.8g}" for k, v in results.items())
    return summary, (["method_index", "value", "morse_index"], rows), head


def _wkb(cfg):
    from .classical_jacobi import jacobi_blocks
    from .propagators import wkb_momentum_to_position, wkb_point_to_point

    x = cfg.extra
    rows = []
    for T in x["T"]:
        if T <= 0:
            raise FlagError("--T must be positive")
        model, sol = _harmonic(x["omega"], T, cfg.grid_n, x["kind"], x["xa"], x["xb"], x["pa"])
        b = jacobi_blocks(model, sol)
        w = wkb_point_to_point(model, sol, b) if x["kind"] == "PP" else wkb_momentum_to_position(model, sol, b)
        index = w.phase_index[1] if x["kind"] == "PP" else w.phase_index[0]
        rows.append([T, w.modulus, float(np.angle(w.value)), w.action_S, w.vanvleck_det, index])
    rows = np.array(rows)
    last = rows[-1]
    summary = {"kind": x["kind"], "omega": x["omega"], "T": float(last[0]), "modulus": float(last[1]),
               "phase": float(last[2]), "action": float(last[3]), "det": float(last[4]), "index": int(last[5])}
    if len(rows) > 1:
        summary["sweep"] = rows.tolist()
    return summary, (["T", "modulus", "phase", "action", "det", "index"], rows), \
        f"|amplitude| {summary['modulus']:.8g}"


def _ab(cfg):
    from .propagators import AbConfig, ab_polar_inversion, c_grid, winding_kernels

    x = cfg.extra
    ab = AbConfig(x["c"][0], x["ra"], x["theta_a"], x["rb"], x["theta_b"], x["T"], n_max=x["n_max"])
    series = winding_kernels(ab)
    if x["invert"]:
        cs = c_grid(x["invert"])
        amps = np.array([series.amplitude(c) for c in cs])
        ns, P = ab_polar_inversion(amps, ab.dtheta, ab.r_a)
        rows = np.column_stack([ns, P.real, P.imag])
        summary = {"c_nodes": int(x["invert"]), "windings": ns.tolist(), "kernels": P.real.tolist()}
        return summary, (["n", "kernel_re", "kernel_im"], rows), f"recovered {ns.size} winding kernels"
    amps = np.array([series.amplitude(c) for c in x["c"]])
    mods = np.array([series.modulus(c) for c in x["c"]])
    rows = np.column_stack([x["c"], amps.real, amps.imag, mods])
    summary = {"c": x["c"], "re": amps.real.tolist(), "im": amps.imag.tolist(), "modulus": mods.tolist(),
               "n_core": series.n_core, "n_window": series.n_window}
    return summary, (["c", "re", "im", "modulus"], rows), f"|amplitude(c={x['c'][0]})| {mods[0]:.10g}"


def _suite(cfg):
    from .acceptance import run_all

    res = run_all(verbose=True)
    failed = [r.name for r in res if not r.passed]
    rows = np.array([[k, int(r.passed)] for k, r in enumerate(res)])
    summary = {"criteria": [{"name": r.name, "passed": r.passed, "detail": {k: _plain(v) for k, v in r.detail.items()}}
                            for r in res], "failed": failed}
    line = f"{len(res) - len(failed)}/{len(res)} criteria passed"
    return summary, (["criterion", "passed"], rows), line, bool(failed)


COMMANDS = {"greens": _greens, "mc": _mc, "flow": _flow, "develop": _develop, "jacobi": _jacobi,
            "det": _det, "wkb": _wkb, "ab": _ab, "suite": _suite}
DEFAULT_FORMAT = {"greens": "csv", "develop": "csv", "flow": "csv"}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return None
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    return _plain(obj)


def _render(fmt, summary, table):
    if fmt == "json":
        return json.dumps({"schema": SCHEMA, **_encode(summary)}, indent=2, sort_keys=True, allow_nan=False) + "\n"
    header, rows = table
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in np.atleast_2d(rows):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _config(ns) -> RunConfig:
    skip = {"command", "format", "out", "seed", "grid_n", "samples"}
    extra = {k: v for k, v in vars(ns).items() if k not in skip}
    fmt = ns.format or DEFAULT_FORMAT.get(ns.command, "json")
    return RunConfig(ns.command, fmt, ns.out, ns.seed, ns.grid_n, ns.samples, extra)


def run(argv=None) -> int:
    """Parse ``argv`` and execute; returns 0 on success, 1 on failure, 2 on flag errors."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    cfg = _config(ns)
    try:
        result = COMMANDS[cfg.command](cfg)
    except (FlagError, ValueError) as exc:
        print(f"pathint {cfg.command}: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"pathint {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary, table, line, *failed = result
    text = _render(cfg.fmt, summary, table)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{cfg.command}: {line}", file=sys.stderr)
    return 1 if failed and failed[0] else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
