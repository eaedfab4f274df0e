"""Smallest singular value of d*d + 4 + R on refined grids, by weight and R coefficient."""

from __future__ import annotations

from dataclasses import dataclass

from chiral_einstein.h4model.grid import GridConfig, coercivity_probe

from _config import dump, parse_config


@dataclass
class Config:
    rho_min: float = 0.05
    rho_max: float = 20.0
    n_rho: int = 64
    n_y: int = 32
    levels: int = 3
    weights: tuple = (0.0, 1.0, 2.0, 2.4)
    r_coeffs: tuple = ("derived", "printed", "none")


def main():
    cfg, out = parse_config(Config, __doc__)
    rows = []
    for rc in cfg.r_coeffs:
        for nu in cfg.weights:
            g = GridConfig(rho_min=cfg.rho_min, rho_max=cfg.rho_max, n_rho=cfg.n_rho, n_y=cfg.n_y,
                           levels=cfg.levels, weight_nu=nu, r_coeff=rc)
            co = coercivity_probe(g)
            rows.append({"r_coeff": rc, "nu": nu, "sigmas": co.sigmas, "variation": co.variation,
                         "control_ratio": co.control_ratio, "box_doubled": co.box_doubled})
            sig = " ".join(f"{s:8.4f}" for s in co.sigmas)
            print(f"{rc:>8} nu={nu:4.1f}  sigma_min {sig}  var {co.variation:6.2%}  "
                  f"control {co.control_ratio:.1e}  wide box {co.box_doubled:.4f}")
    dump(cfg, rows, out)


if __name__ == "__main__":
    main()
