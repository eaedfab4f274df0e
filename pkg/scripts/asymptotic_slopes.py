"""Log-log slopes of |Q - Id| and |F - leading terms| over synthesized boundary models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chiral_einstein.asymptotic import expansion_check, synthesize

from _config import dump, parse_config


@dataclass
class Config:
    seeds: tuple = (0, 1, 2, 3, 4)
    n_r: int = 9


def main():
    cfg, out = parse_config(Config, __doc__)
    rows = []
    for seed in cfg.seeds:
        m = synthesize(seed)
        for sign in (1, -1):
            r = expansion_check(m, sign, cfg.n_r)
            rows.append({"seed": seed, "bracket_sign": sign, "q_slope": r.q_slope, "f_slope": r.f_slope})
            print(f"seed {seed} s={sign:+d}  Q slope {r.q_slope:.4f}  F slope {r.f_slope:.4f}")
    q = np.array([r["q_slope"] for r in rows])
    print(f"Q slope range [{q.min():.4f}, {q.max():.4f}]")
    dump(cfg, rows, out)


if __name__ == "__main__":
    main()
