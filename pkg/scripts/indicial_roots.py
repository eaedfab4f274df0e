"""Indicial roots of the model operators, symbolically and by fitting the rho^lambda response."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chiral_einstein.h4model import indicial

from _config import dump, parse_config


@dataclass
class Config:
    numeric: bool = True
    lg: bool = True


def main():
    cfg, out = parse_config(Config, __doc__)
    ops = [indicial.scalar_laplacian_op(0), indicial.scalar_laplacian_op(4), indicial.model_operator_op(),
           indicial.pi_d_op(), indicial.pi_d_adjoint_op()]
    if cfg.lg:
        ops.append(indicial.lg_op())
    results = {}
    for op in ops:
        d = indicial.indicial_roots(op)
        roots = [round(float(np.real(r)), 10) for r in d.root_list]
        results[op.name] = {"roots": roots, "polynomial": str(d.polynomial), "residual": d.residual}
        print(f"{op.name:>24}: {roots}   I = {d.polynomial}")
    if cfg.numeric:
        coef = indicial.fit_indicial(indicial.model_indicial_numeric(), order=2)
        found = indicial.numeric_roots(coef)
        results["numeric model"] = {"roots": [float(r) for r in found]}
        print(f"{'numeric model':>24}: {np.round(found, 8).tolist()}")
    dump(cfg, results, out)


if __name__ == "__main__":
    main()
