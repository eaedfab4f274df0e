"""Distribution of |Ru|^2 / |du|^2 on random and curl-eigenvector sections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chiral_einstein.h4model.grid import R_COEFFS, GridConfig, oscillating_section, r_bound_check, r_ratio, t_grid

from _config import dump, parse_config


@dataclass
class Config:
    samples: int = 200
    seed: int = 0
    n_rho: int = 32
    n_y: int = 16
    modes: tuple = (1, 2, 3)
    centers: tuple = (-1.0, 0.0, 1.0, 2.0)


def main():
    cfg, out = parse_config(Config, __doc__)
    grid = GridConfig(n_rho=cfg.n_rho, n_y=cfg.n_y)
    t = t_grid(grid.rho_min, grid.rho_max, grid.n_rho)
    results = {}
    for name in ("printed", "derived"):
        c = R_COEFFS[name]
        r = r_bound_check(cfg.samples, cfg.seed, grid, c)
        osc = [r_ratio(oscillating_section(t, cfg.n_y, grid.y_length, m, t0), c)
               for m in cfg.modes for t0 in cfg.centers]
        q = np.percentile(r.ratios, [50, 90, 99])
        results[name] = {"coeff": c, "worst": r.worst_ratio, "mean": r.mean_ratio, "bound": r.bound,
                         "percentiles_50_90_99": q.tolist(), "oscillating_worst": max(osc)}
        print(f"{name:>8} c={c:.2f}  worst {r.worst_ratio:.4f}  mean {r.mean_ratio:.4f}  "
              f"p50/90/99 {np.round(q, 4).tolist()}  oscillating {max(osc):.4f}  bound {r.bound:.4f}")
    dump(cfg, results, out)


if __name__ == "__main__":
    main()
