"""Transition probability around a thin solenoid as a function of the flux fraction c."""

import argparse
from dataclasses import dataclass

import numpy as np

from pathint.propagators import AbConfig, free_amplitude, winding_kernels


@dataclass(frozen=True)
class Config:
    r_a: float = 0.7
    r_b: float = 1.1
    theta_b: float = np.pi
    T: float = 1.0
    n_c: int = 41


def main(cfg: Config):
    ab = AbConfig(0.0, cfg.r_a, 0.0, cfg.r_b, cfg.theta_b, cfg.T)
    series = winding_kernels(ab)
    free = abs(free_amplitude(2, ab.x_a, ab.x_b, ab.T))
    print(f"# core windings |n| <= {series.n_core}, expansion to {series.n_window}")
    print("c,probability,ratio_to_free")
    for c in np.linspace(0.0, 2.0, cfg.n_c):
        m = series.modulus(c)
        print(f"{c:.3f},{m**2:.6e},{(m / free) ** 2:.6f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--theta-b", type=float, default=np.pi)
    p.add_argument("--T", type=float, default=1.0)
    a = p.parse_args()
    main(Config(theta_b=a.theta_b, T=a.T))
