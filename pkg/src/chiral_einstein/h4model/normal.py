"""The gauge-fixing operator of the model and its comparison with ``d*d + 4 + R``.

``R u = c rho curl_y u`` with ``curl_y`` the matrix
``[[0, -d3, d2], [d3, 0, -d1], [-d2, d1, 0]]``.  The printed coefficient is
``c = 1/2``; composing the printed ``Pi_C d_C`` with ``d*_C`` gives
``c = 2`` (see :data:`R_COEFF_DERIVED`).
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from ..forms import MetricAlgebra, hodge_star
from ..riemann4 import laplacian_scalar
from ..so3conn import EForm, cov_ext_d
from ..symcalc import is_identically_zero, random_polynomial, sample_regular, evaluate
from .frames import model_chart, model_connection_forms, model_metric, pi_d

R_COEFF_PRINTED = sp.Rational(1, 2)
R_COEFF_DERIVED = sp.Integer(2)


def codiff_C(a: EForm) -> EForm:
    """``d*_C a = - * d_C * a`` on E-valued forms of the model."""
    alg: MetricAlgebra = model_metric().algebra
    A = model_connection_forms()
    star = lambda e: EForm([hodge_star(alg, c) for c in e.comps])
    return (-star(cov_ext_d(A, star(a)))).simplify()


def normal_operator(u) -> list:
    """``(3/2) d*_C Pi_C d_C u`` as three scalar expressions."""
    out = codiff_C(pi_d(u))
    return [sp.simplify(sp.Rational(3, 2) * out[i].comps[0]) for i in range(3)]


def r_operator(u, coeff=R_COEFF_PRINTED) -> list:
    rho, y1, y2, y3 = model_chart().symbols
    d = lambda f, y: sp.diff(f, y)
    c = coeff * rho
    return [
        c * (-d(u[1], y3) + d(u[2], y2)),
        c * (d(u[0], y3) - d(u[2], y1)),
        c * (-d(u[0], y2) + d(u[1], y1)),
    ]


def shifted_laplacian(u, shift=4) -> list:
    g = model_metric()
    return [laplacian_scalar(g, sp.sympify(ui)) + shift * ui for ui in u]


def normal_rhs(u, coeff=R_COEFF_PRINTED) -> list:
    """``(d*d + 4) u + R u``."""
    return [sp.simplify(a + b) for a, b in zip(shifted_laplacian(u), r_operator(u, coeff))]


def identity_residuals(u, coeffs=(R_COEFF_PRINTED, R_COEFF_DERIVED), n: int = 64, seed: int = 0) -> list[float]:
    """Sup over sample points of ``|LHS - RHS|`` relative to ``1 + |LHS|``, one value per coefficient.

    The left side is built once and shared by all coefficients.
    """
    ch = model_chart()
    lhs = normal_operator(u)
    out = []
    for coeff in coeffs:
        rhs = normal_rhs(u, coeff)
        diff = [sp.simplify(a - b) for a, b in zip(lhs, rhs)]
        if all(d == 0 for d in diff):
            out.append(0.0)
            continue
        pts = sample_regular(lhs + rhs, ch, n, seed)
        worst = 0.0
        for d, l in zip(diff, lhs):
            dv = evaluate(d, ch, pts)
            lv = evaluate(l, ch, pts)
            worst = max(worst, float(np.max(np.abs(dv) / (1 + np.abs(lv)))))
        out.append(worst)
    return out


def identity_residual(u, coeff=R_COEFF_PRINTED, n: int = 64, seed: int = 0) -> float:
    return identity_residuals(u, (coeff,), n, seed)[0]


def random_section(rng: np.random.Generator, degree: int = 3, n_terms: int = 5) -> list:
    """Random polynomial triple in ``(rho, y)``."""
    ch = model_chart()
    return [random_polynomial(ch, degree, rng, n_terms) for _ in range(3)]
