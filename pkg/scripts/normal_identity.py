"""Residual of the model normal-operator identity for the printed and derived R coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chiral_einstein.h4model import normal

from _config import dump, parse_config


@dataclass
class Config:
    sections: int = 20
    seed: int = 0
    degree: int = 3


def main():
    cfg, out = parse_config(Config, __doc__)
    rng = np.random.default_rng(cfg.seed)
    res = np.array([normal.identity_residuals(normal.random_section(rng, cfg.degree))
                    for _ in range(cfg.sections)])
    for name, col in (("printed", 0), ("derived", 1)):
        print(f"{name:>8}: worst {res[:, col].max():.3e}  median {np.median(res[:, col]):.3e}")
    dump(cfg, {"printed": res[:, 0].tolist(), "derived": res[:, 1].tolist()}, out)


if __name__ == "__main__":
    main()
