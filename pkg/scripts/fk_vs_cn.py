"""Feynman-Kac Monte Carlo against a Crank-Nicolson solve of the same heat equation."""

import argparse
from dataclasses import dataclass

import numpy as np

from pathint.gaussian_mc import feynman_kac, heat_oracle_cn


@dataclass(frozen=True)
class Config:
    T: float = 0.5
    samples: int = 100_000
    seed: int = 0
    x0s: tuple = (0.0, 0.25, 0.5, 1.0)


POTENTIALS = {"0": lambda x: 0 * x[..., 0], "-x^2": lambda x: -x[..., 0] ** 2,
              "-cos": lambda x: -np.cos(x[..., 0])}


def main(cfg: Config):
    phi = lambda x: np.exp(-x[..., 0] ** 2)
    print("V,x0,mc,std_err,pde,|diff|/std_err")
    for name, V in POTENTIALS.items():
        for x0 in cfg.x0s:
            m, e = feynman_kac(V, phi, cfg.T, [x0], cfg.samples, seed=cfg.seed)
            ref = heat_oracle_cn(V, phi, cfg.T, x0)
            print(f"{name},{x0},{m:.6f},{e:.1e},{ref:.6f},{abs(m - ref) / e:.2f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    main(Config(a.T, a.samples, a.seed))
