"""Self-convergence of the ordered product of flows on the sphere frame bundle."""

import argparse
from dataclasses import dataclass

import numpy as np

from pathint.driven_flow import frame_bundle_s2, multistep_sigma
from pathint.grid_paths import BoundaryFamily, DiscretePath, TimeGrid


@dataclass(frozen=True)
class Config:
    velocity: tuple = (0.8, 0.6)
    substeps: tuple = (8, 16, 32, 64, 128, 256, 512)
    grid_n: int = 8192


def main(cfg: Config):
    v = np.asarray(cfg.velocity)
    z = DiscretePath.from_function(TimeGrid(0.0, 1.0, cfg.grid_n), BoundaryFamily("a"), lambda t: v * t)
    x0 = np.concatenate(np.eye(3)[[2, 0, 1]])
    pts = [multistep_sigma(frame_bundle_s2(), z, x0, k)[:3] for k in cfg.substeps]
    diffs = [np.linalg.norm(pts[i] - pts[i + 1]) for i in range(len(pts) - 1)]
    print("n,|sigma_n - sigma_2n|")
    for k, d in zip(cfg.substeps, diffs):
        print(f"{k},{d:.3e}")
    order = -np.polyfit(np.log(cfg.substeps[:-1]), np.log(diffs), 1)[0]
    print(f"fitted order {order:.3f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--vx", type=float, default=0.8)
    p.add_argument("--vy", type=float, default=0.6)
    a = p.parse_args()
    main(Config((a.vx, a.vy)))
