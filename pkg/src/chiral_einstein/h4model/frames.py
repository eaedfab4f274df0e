"""The hyperbolic half-space model: coframe, self-dual frame, connection, J and Pi.

Coordinates ``(rho, y1, y2, y3)``, ``g_C = rho^-2 (d rho^2 + dy^2)``,
coframe ``alpha^0 = d rho / rho``, ``alpha^i = dy^i / rho``, orientation
``alpha^0123``.  Sections of Lambda^+ are written ``u = u^i e_i`` with
``e_i = (alpha^0i + alpha^jk) / sqrt(2)``.
"""

from __future__ import annotations

from functools import lru_cache

import sympy as sp

from ..definite import almost_complex, metric_from_connection
from ..forms import Form, ext_d
from ..riemann4 import Metric, levi_civita_selfdual, orthonormal_coframe, selfdual_frame
from ..so3conn import EForm, So3Connection
from ..symcalc import Chart, half_space_chart

# Printed table of J_i(alpha^b): key (i, b) -> (sign, c) meaning sign * alpha^c.
J_TABLE_PRINTED = {
    (1, 0): (1, 1), (2, 0): (1, 2), (3, 0): (1, 3),
    (1, 1): (-1, 0), (2, 1): (-1, 3), (3, 1): (1, 2),
    (1, 2): (1, 3), (2, 2): (-1, 0), (3, 2): (-1, 1),
    (1, 3): (-1, 2), (2, 3): (1, 1), (3, 3): (-1, 0),
}


def model_chart(box=None) -> Chart:
    return half_space_chart(box)


@lru_cache(maxsize=None)
def model_metric() -> Metric:
    ch = model_chart()
    rho = ch.symbols[0]
    return Metric(sp.diag(*[rho**-2] * 4), ch)


def coframe() -> list[Form]:
    return orthonormal_coframe(model_metric())


def model_frames():
    """``(alpha, e, vol)``: coframe, unit self-dual frame, volume form."""
    alpha = coframe()
    e = [S * (1 / sp.sqrt(2)) for S in selfdual_frame(alpha)]
    vol = alpha[0] ^ alpha[1] ^ alpha[2] ^ alpha[3]
    return alpha, e, vol


def connection_matrix() -> list[list[Form]]:
    """``d_C u = du + M u``.  Row 3 is ``(alpha^2, -alpha^1, 0)``; the matrix is
    antisymmetric, as it must be for a metric connection."""
    a = coframe()
    z = Form.zero(1)
    return [[z, a[3], -a[2]], [-a[3], z, a[1]], [a[2], -a[1], z]]


def model_connection_forms() -> So3Connection:
    """The Levi-Civita connection on Lambda^+ as an SO(3) connection (``A^i = alpha^i``)."""
    return So3Connection.from_matrix(connection_matrix(), model_chart())


def model_connection(u) -> EForm:
    """``d_C u = du + M u`` for a triple of scalar expressions."""
    x = model_chart().symbols
    M = connection_matrix()
    out = []
    for i in range(3):
        acc = ext_d(Form(0, [sp.sympify(u[i])]), x)
        for k in range(3):
            acc = acc + M[i][k] * u[k]
        out.append(acc.simplify())
    return EForm(out)


@lru_cache(maxsize=None)
def levi_civita() -> So3Connection:
    """Levi-Civita connection on Lambda^+ computed from the metric."""
    return levi_civita_selfdual(model_metric())


@lru_cache(maxsize=None)
def model_definite_data():
    return metric_from_connection(levi_civita())


@lru_cache(maxsize=None)
def model_J() -> tuple[sp.Matrix, sp.Matrix, sp.Matrix]:
    """``J_i`` as matrices on coordinate covector components (= frame components)."""
    return tuple(sp.Matrix(J) for J in almost_complex(model_definite_data()))


def j_table(J=None) -> dict:
    """Read off ``J_i(alpha^b) = sign * alpha^c`` from J matrices; raises if not signed permutations."""
    J = J or model_J()
    out = {}
    for i in range(3):
        for b in range(4):
            col = [sp.nsimplify(J[i][c, b]) for c in range(4)]
            nz = [(c, v) for c, v in enumerate(col) if v != 0]
            if len(nz) != 1 or abs(nz[0][1]) != 1:
                raise ValueError(f"J_{i + 1}(alpha^{b}) is not a signed coframe element")
            out[(i + 1, b)] = (int(nz[0][1]), nz[0][0])
    return out


def apply_J(i: int, a: Form, J=None) -> Form:
    J = J or model_J()
    return Form(1, list(J[i] * sp.Matrix(a.comps)))


def model_projector(a: EForm) -> EForm:
    """``Pi_C a = (1/3)(2a^1 + J_3 a^2 - J_2 a^3, 2a^2 + J_1 a^3 - J_3 a^1, 2a^3 + J_2 a^1 - J_1 a^2)``."""
    a1, a2, a3 = a.comps
    t = sp.Rational(1, 3)
    return EForm([
        (a1 * 2 + apply_J(2, a2) - apply_J(1, a3)) * t,
        (a2 * 2 + apply_J(0, a3) - apply_J(2, a1)) * t,
        (a3 * 2 + apply_J(1, a1) - apply_J(0, a2)) * t,
    ]).simplify()


def pi_d(u) -> EForm:
    """``Pi_C d_C u``."""
    return model_projector(model_connection(u))


def projector_matrix() -> sp.Matrix:
    """``Pi_C`` as a 12x12 matrix on flattened components ``a[4 i + b]``."""
    J = model_J()
    I4, Z = sp.eye(4), sp.zeros(4)
    blocks = [[2 * I4, J[2], -J[1]], [-J[2], 2 * I4, J[0]], [J[1], -J[0], 2 * I4]]
    return sp.BlockMatrix(blocks).as_explicit() / 3
