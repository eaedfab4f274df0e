"""Asymptotically hyperbolic connections ``A = Abar + r^-1 alpha`` near a boundary ``r = 0``.

``alpha = dr (x) b + c`` with ``b = O(r)`` and ``c_i(r) = phi_i + r psi_i`` where the
``phi_i`` are a constant coframe of the boundary.  The curvature is then

    ``F = F_Abar + r^-1 d_Abar alpha - r^-2 (dr ^ alpha + (s/2) [alpha ^ alpha])``

for the bracket sign ``s`` of the curvature convention (``s = +1`` is
``F = dA - 1/2 [A ^ A]`` used throughout the package).  Its leading part is
``r^-2 (phi_i ^ dr - s phi_j ^ phi_k)``, self-dual for the orientation in which
``Q(mu) -> Id``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .definite import q_matrix
from .forms import Form, ext_d, form_matrix
from .so3conn import EForm, So3Connection, bracket, d_eform
from .symcalc import Chart, half_space_chart, lambdify
from .riemann4 import CYCLIC

R_RANGE = (1e-3, 1e-1)
# |F - L|_g = c r + O(r^2); a mismatched leading term shows up as slope ~ 0
F_SLOPE_MIN = 0.95


@dataclass(frozen=True, eq=False)
class AsymptoticModel:
    P: sp.Matrix          # phi_i = P_ij dy^j
    psi: tuple            # three 1-forms, the O(r) correction of c
    b1: tuple             # b = r * b1
    Abar: tuple           # background connection 1-forms
    chart: Chart

    @property
    def r(self):
        return self.chart.symbols[0]

    def phi(self) -> list[Form]:
        return [Form(1, [0] + [self.P[i, j] for j in range(3)]) for i in range(3)]

    def alpha(self) -> EForm:
        dr = Form(1, [1, 0, 0, 0])
        return EForm([self.phi()[i] + self.psi[i] * self.r + dr * (self.r * self.b1[i]) for i in range(3)])

    def connection(self) -> So3Connection:
        al = self.alpha()
        return So3Connection(tuple((self.Abar[i] + al[i] * (1 / self.r)).simplify() for i in range(3)), self.chart)

    def volume(self, orientation: int = 1) -> Form:
        """``r^-4 dr ^ phi_123`` (``orientation = -1`` gives ``r^-4 phi_123 ^ dr``)."""
        return Form(4, [orientation * self.P.det() / self.r**4])


def synthesize(seed: int = 0) -> AsymptoticModel:
    """A generic model with rational coefficients drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    q = lambda: sp.Rational(int(rng.integers(-3, 4)), 10)
    ch = half_space_chart(((1e-3, 0.1), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)))
    _, y1, y2, y3 = ch.symbols
    P = sp.eye(3) + sp.Matrix(3, 3, lambda i, j: q() if i != j else 0)
    lin = lambda: q() + q() * y1 + q() * y2 + q() * y3
    psi = tuple(Form(1, [lin() for _ in range(4)]) for _ in range(3))
    b1 = tuple(lin() for _ in range(3))
    Abar = tuple(Form(1, [lin() for _ in range(4)]) for _ in range(3))
    return AsymptoticModel(P, psi, b1, Abar, ch)


def curvature_convention(A: So3Connection, bracket_sign: int = 1) -> EForm:
    """``dA - (s/2) [A ^ A]``."""
    dA = d_eform(A.eform, A.coords)
    return (dA - bracket(A.eform, A.eform) * sp.Rational(bracket_sign, 2)).simplify()


def leading_terms(model: AsymptoticModel, bracket_sign: int = 1) -> EForm:
    phi = model.phi()
    dr = Form(1, [1, 0, 0, 0])
    out = [None] * 3
    for i, j, k in CYCLIC:
        out[i] = ((phi[i] ^ dr) - (phi[j] ^ phi[k]) * bracket_sign) * model.r**-2
    return EForm(out)


def _g_norm2(model: AsymptoticModel, a: Form):
    """Squared g-norm of a 2-form for ``g = r^-2 (dr^2 + sum phi_i^2)``."""
    T = sp.diag(1, model.P)  # coframe (dr, phi) = T (dr, dy)
    Ti = T.inv()
    m = sp.Matrix(form_matrix(a))
    mf = Ti.T * m * Ti
    return model.r**4 * sum(mf[i, j] ** 2 for i in range(4) for j in range(i + 1, 4))


@dataclass
class ExpansionReport:
    r: np.ndarray
    q_error: np.ndarray
    f_error: np.ndarray
    q_slope: float
    f_slope: float
    bracket_sign: int

    @property
    def passed(self) -> bool:
        return self.q_slope >= 1 and self.f_slope >= F_SLOPE_MIN


def _slope(r, e) -> float:
    e = np.maximum(e, 1e-300)
    return float(np.polyfit(np.log(r), np.log(e), 1)[0])


def expansion_check(model: AsymptoticModel | None = None, bracket_sign: int = 1, n_r: int = 9,
                    y_points=((0.2, -0.4, 0.3), (-0.5, 0.1, 0.7))) -> ExpansionReport:
    """``max|Q - Id|`` and ``max_i |F_i - L_i|_g`` against ``r`` on a log grid.

    The volume is ``r^-4 dr ^ phi_123`` for ``s = +1`` and ``r^-4 phi_123 ^ dr``
    for ``s = -1``; in each case the leading terms are self-dual for it.
    """
    model = model or synthesize()
    A = model.connection()
    F = curvature_convention(A, bracket_sign)
    L = leading_terms(model, bracket_sign)
    Q = q_matrix(F, model.volume(bracket_sign))
    qerr = lambdify([(Q - sp.eye(3))[i, j] for i in range(3) for j in range(3)], model.chart)
    ferr = lambdify([_g_norm2(model, F[i] - L[i]) for i in range(3)], model.chart)
    rs = np.logspace(np.log10(R_RANGE[0]), np.log10(R_RANGE[1]), n_r)
    qe, fe = [], []
    for r in rs:
        qv = max(np.max(np.abs(np.asarray(qerr(np.array([r, *y])), dtype=float))) for y in y_points)
        fv = max(np.sqrt(np.max(np.asarray(ferr(np.array([r, *y])), dtype=float))) for y in y_points)
        qe.append(qv)
        fe.append(fv)
    qe, fe = np.array(qe), np.array(fe)
    return ExpansionReport(rs, qe, fe, _slope(rs, qe), _slope(rs, fe), bracket_sign)
