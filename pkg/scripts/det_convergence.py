"""Convergence of the eigenvalue-product determinant ratio with and without Richardson extrapolation."""

import argparse
from dataclasses import dataclass

import numpy as np

from pathint.determinants import det_by_limit
from pathint.grid_paths import BoundaryFamily, TimeGrid


@dataclass(frozen=True)
class Config:
    omega: float = 1.0
    sign: float = -1.0  # -1 oscillatory, +1 diffusive
    grids: tuple = (50, 100, 200, 400, 800, 1600)


def main(cfg: Config):
    exact = np.sin(cfg.omega) / cfg.omega if cfg.sign < 0 else np.sinh(cfg.omega) / cfg.omega
    a = lambda t: cfg.sign * cfg.omega**2
    print("n,raw_rel_err,richardson_rel_err,order")
    for n in cfg.grids:
        g = TimeGrid(0.0, 1.0, n)
        raw = det_by_limit(a, BoundaryFamily("ab"), g, richardson=False).value
        ext = det_by_limit(a, BoundaryFamily("ab"), g)
        print(f"{n},{abs(raw / exact - 1):.3e},{abs(ext.value / exact - 1):.3e},{ext.order:.2f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--diffusive", action="store_true")
    args = p.parse_args()
    main(Config(args.omega, 1.0 if args.diffusive else -1.0))
