"""SO(3) connections on a rank-3 bundle E in a fixed oriented orthonormal frame.

Conventions: ``eps_123 = +1``;

* ``(d_A a)^i = d a^i - eps_ijk A^j ^ a^k``
* ``F^i = d A^i - 1/2 eps_ijk A^j ^ A^k``

Everything is available in two flavours: symbolic (sympy components on a
:class:`~chiral_einstein.symcalc.Chart`) and numeric fields, i.e. callables
``x -> EForm`` whose derivatives come from ``jax.jacfwd``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import jax
import numpy as np
import sympy as sp

from .forms import Form, ext_d, exterior_d, interior, lambdify_form
from .symcalc import Chart, is_identically_zero

EPS_TERMS = ((0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1), (0, 2, 1, -1), (2, 1, 0, -1), (1, 0, 2, -1))


def eps(i: int, j: int, k: int) -> int:
    for a, b, c, s in EPS_TERMS:
        if (a, b, c) == (i, j, k):
            return s
    return 0


class EForm:
    """E-valued k-form ``a^i (x) e_i``: three Forms of equal degree."""

    __slots__ = ("comps",)

    def __init__(self, comps: Sequence[Form]):
        comps = tuple(comps)
        if len(comps) != 3:
            raise ValueError("an E-valued form has three components")
        if len({c.degree for c in comps}) != 1:
            raise ValueError("components of an E-valued form must share a degree")
        self.comps = comps

    @property
    def degree(self) -> int:
        return self.comps[0].degree

    @classmethod
    def zero(cls, k: int) -> "EForm":
        return cls([Form.zero(k)] * 3)

    @classmethod
    def scalars(cls, u: Sequence) -> "EForm":
        """E-valued 0-form (a section) from three scalars."""
        return cls([Form(0, [c]) for c in u])

    def __getitem__(self, i: int) -> Form:
        return self.comps[i]

    def __iter__(self):
        return iter(self.comps)

    def __add__(self, other: "EForm") -> "EForm":
        return EForm([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other: "EForm") -> "EForm":
        return EForm([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self) -> "EForm":
        return EForm([-a for a in self.comps])

    def __mul__(self, s) -> "EForm":
        return EForm([a * s for a in self.comps])

    __rmul__ = __mul__

    def map(self, fn: Callable) -> "EForm":
        return EForm([a.map(fn) for a in self.comps])

    def simplify(self) -> "EForm":
        return EForm([a.simplify() for a in self.comps])

    def subs(self, *args, **kw) -> "EForm":
        return EForm([a.subs(*args, **kw) for a in self.comps])

    def matmul(self, M) -> "EForm":
        """``(M a)^i = M_ij a^j`` for a pointwise 3x3 matrix M."""
        out = []
        for i in range(3):
            acc = self.comps[0] * M[i][0]
            for j in (1, 2):
                acc = acc + self.comps[j] * M[i][j]
            out.append(acc)
        return EForm(out)

    def values(self) -> np.ndarray:
        """Component array of shape (3, C(4,k)) for numeric forms."""
        return np.array([[float(c) for c in f.comps] for f in self.comps])

    def __repr__(self):
        return f"EForm({self.comps!r})"


jax.tree_util.register_pytree_node(
    EForm, lambda e: (e.comps, None), lambda _, comps: EForm(comps)
)


def bracket(a: EForm, b: EForm) -> EForm:
    """``[a ^ b]^i = eps_ijk a^j ^ b^k``."""
    out = []
    for i in range(3):
        acc = None
        for j in range(3):
            for k in range(3):
                s = eps(i, j, k)
                if s:
                    t = (a[j] ^ b[k]) * s
                    acc = t if acc is None else acc + t
        out.append(acc)
    return EForm(out)


def wedge_scalar(a: EForm, b: EForm):
    """``sum_i a^i ^ b^i`` (an ordinary form)."""
    return (a[0] ^ b[0]) + (a[1] ^ b[1]) + (a[2] ^ b[2])


def wedge_with(theta: Form, a: EForm) -> EForm:
    """``theta ^ a^i`` componentwise."""
    return EForm([theta ^ c for c in a.comps])


@dataclass(frozen=True, eq=False)
class So3Connection:
    """Connection 1-forms ``A^1, A^2, A^3`` on a chart."""

    A: tuple[Form, Form, Form]
    chart: Chart

    def __post_init__(self):
        if len(self.A) != 3 or any(a.degree != 1 for a in self.A):
            raise ValueError("a connection is a triple of 1-forms")
        object.__setattr__(self, "A", tuple(self.A))

    @property
    def eform(self) -> EForm:
        return EForm(self.A)

    @property
    def coords(self):
        return self.chart.symbols

    @classmethod
    def zero(cls, chart: Chart) -> "So3Connection":
        return cls(tuple(Form.zero(1) for _ in range(3)), chart)

    def __add__(self, a: EForm) -> "So3Connection":
        return So3Connection(tuple(x + y for x, y in zip(self.A, a.comps)), self.chart)

    def numeric(self) -> Callable:
        """Field ``x -> EForm`` of degree 1."""
        fs = [lambdify_form(a, self.chart) for a in self.A]
        return lambda x: EForm([f(x) for f in fs])

    def connection_matrix(self) -> list[list[Form]]:
        """``M_ik = -eps_ijk A^j`` so that ``d_A u = du + M u`` on sections."""
        M = [[Form.zero(1) for _ in range(3)] for _ in range(3)]
        for i in range(3):
            for k in range(3):
                for j in range(3):
                    s = eps(i, j, k)
                    if s:
                        M[i][k] = M[i][k] - self.A[j] * s
        return M

    @classmethod
    def from_matrix(cls, M, chart: Chart) -> "So3Connection":
        """Inverse of :meth:`connection_matrix`; requires M antisymmetric."""
        for i in range(3):
            for k in range(3):
                if any(sp.simplify(x + y) != 0 for x, y in zip(M[i][k].comps, M[k][i].comps)):
                    raise ValueError("connection matrix is not antisymmetric")
        A = []
        for l in range(3):
            acc = Form.zero(1)
            for i in range(3):
                for k in range(3):
                    s = eps(i, l, k)
                    if s:
                        acc = acc - M[i][k] * sp.Rational(s, 2)
            A.append(acc.simplify())
        return cls(tuple(A), chart)


# ----------------------------------------------------------------------
# symbolic operations


def d_eform(a: EForm, coords) -> EForm:
    return EForm([ext_d(c, coords) for c in a.comps])


def curvature(A: So3Connection) -> EForm:
    """``F^i = dA^i - 1/2 eps_ijk A^j ^ A^k``."""
    dA = d_eform(A.eform, A.coords)
    return (dA - bracket(A.eform, A.eform) * sp.Rational(1, 2)).simplify()


def cov_ext_d(A: So3Connection, a: EForm) -> EForm:
    """``(d_A a)^i = da^i - eps_ijk A^j ^ a^k``."""
    if a.degree > 3:
        raise ValueError("d_A of a 4-form vanishes in dimension 4; degree overflow")
    return (d_eform(a, A.coords) - bracket(A.eform, a)).simplify()


def iota_eform(v: Sequence, a: EForm) -> EForm:
    return EForm([interior(v, c) for c in a.comps])


def gauge_action(A: So3Connection, u: EForm, v: Sequence) -> EForm:
    """Infinitesimal gauge action ``d_A u + iota_v F_A`` of (u, v)."""
    return (cov_ext_d(A, u) + iota_eform(v, curvature(A))).simplify()


def rotate(R, a: EForm) -> EForm:
    """Frame change by a constant rotation: ``a'^i = R_ij a^j``."""
    return a.matmul(R)


def rotate_connection(A: So3Connection, R) -> So3Connection:
    """Connection in the rotated frame for a constant R in SO(3) (or O(3)).

    The connection matrix transforms as ``M' = R M R^T``; for a reflection
    this also flips the orientation of E, which the formula handles.
    """
    R = sp.Matrix(R)
    M = A.connection_matrix()
    Mp = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for k in range(3):
            acc = Form.zero(1)
            for a in range(3):
                for b in range(3):
                    c = R[i, a] * R[k, b]
                    if c != 0:
                        acc = acc + M[a][b] * c
            Mp[i][k] = acc.simplify()
    return So3Connection.from_matrix(Mp, A.chart)


def eform_is_zero(a: EForm, chart: Chart, **kw) -> bool:
    return all(is_identically_zero(c, chart, **kw) for f in a.comps for c in f.comps)


# ----------------------------------------------------------------------
# numeric fields (x -> EForm)


def d_field(a: Callable) -> Callable:
    """Componentwise exterior derivative of an E-valued field."""
    jac = jax.jacfwd(a)

    def da(x):
        J = jac(x)
        return EForm([exterior_d(c, lambda n, j, c=c: c.comps[n][j]) for c in J.comps])

    return da


def curvature_field(A: Callable) -> Callable:
    dA = d_field(A)

    def F(x):
        a = A(x)
        return dA(x) - bracket(a, a) * 0.5

    return F


def cov_ext_d_field(A: Callable, a: Callable) -> Callable:
    da = d_field(a)
    return lambda x: da(x) - bracket(A(x), a(x))


def gauge_action_field(A: Callable, u: Callable, v: Callable) -> Callable:
    du = cov_ext_d_field(A, u)
    F = curvature_field(A)
    return lambda x: du(x) + iota_eform(v(x), F(x))


def eform_field(a: EForm, chart: Chart) -> Callable:
    fs = [lambdify_form(c, chart) for c in a.comps]
    return lambda x: EForm([f(x) for f in fs])


def connection_field(A: So3Connection) -> Callable:
    return A.numeric()


def shift_field(A: Callable, a: Callable, t: float) -> Callable:
    """``A + t a`` as a field."""
    return lambda x: A(x) + a(x) * t
