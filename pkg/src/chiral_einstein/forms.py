"""Differential forms on a 4-chart, generic over the scalar type.

A k-form stores one component per increasing multi-index, in the order of
``itertools.combinations(range(4), k)``.  Components may be sympy
expressions (symbolic forms) or jax/numpy scalars (values of a form field at
a point); all algebra here is written with plain ``+``/``*`` so both work.
Forms are registered as jax pytrees so form-valued functions can be
differentiated with ``jax.jacfwd``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from math import comb
from typing import Callable, Sequence

import jax
import numpy as np
import sympy as sp

DIM = 4


@lru_cache(maxsize=None)
def basis(k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(DIM), k))


@lru_cache(maxsize=None)
def _position(k: int) -> dict[tuple[int, ...], int]:
    return {I: n for n, I in enumerate(basis(k))}


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an index repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(p: int, q: int):
    out = []
    pos = _position(p + q)
    for a, I in enumerate(basis(p)):
        for b, J in enumerate(basis(q)):
            s = perm_sign(I + J)
            if s:
                out.append((a, b, pos[tuple(sorted(I + J))], s))
    return tuple(out)


def _is_zero(x) -> bool:
    if isinstance(x, (int, float)):
        return x == 0
    if isinstance(x, sp.Basic):
        return x == 0
    return False


class Form:
    """A k-form; ``comps[n]`` is the coefficient of ``dx^{basis(k)[n]}``."""

    __slots__ = ("degree", "comps")

    def __init__(self, degree: int, comps):
        if not 0 <= degree <= DIM:
            raise ValueError(f"form degree {degree} out of range")
        comps = tuple(comps)
        if len(comps) != comb(DIM, degree):
            raise ValueError(f"{degree}-form needs {comb(DIM, degree)} components, got {len(comps)}")
        self.degree = degree
        self.comps = comps

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, k: int, zero=0) -> "Form":
        return cls(k, [zero] * comb(DIM, k))

    @classmethod
    def from_dict(cls, k: int, d: dict, zero=0) -> "Form":
        """Build from ``{index tuple: coefficient}``; unsorted tuples are reordered with sign."""
        comps = [zero] * comb(DIM, k)
        pos = _position(k)
        for I, c in d.items():
            I = tuple(I)
            s = perm_sign(I)
            if s == 0:
                continue
            n = pos[tuple(sorted(I))]
            comps[n] = comps[n] + s * c
        return cls(k, comps)

    @classmethod
    def basis_form(cls, I: Sequence[int], coeff=1) -> "Form":
        return cls.from_dict(len(I), {tuple(I): coeff})

    @classmethod
    def one_form(cls, comps) -> "Form":
        return cls(1, comps)

    def __getitem__(self, I) -> object:
        if isinstance(I, int):
            I = (I,)
        s = perm_sign(I)
        if s == 0:
            return 0
        return s * self.comps[_position(self.degree)[tuple(sorted(I))]]

    def as_dict(self) -> dict:
        return {I: c for I, c in zip(basis(self.degree), self.comps) if not _is_zero(c)}

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "Form"):
        if not isinstance(other, Form) or other.degree != self.degree:
            raise TypeError("forms of different degree")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._check(other)
        return Form(self.degree, [a + b for a, b in zip(self.comps, other.comps)])

    __radd__ = __add__

    def __sub__(self, other):
        self._check(other)
        return Form(self.degree, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return Form(self.degree, [-a for a in self.comps])

    def __mul__(self, scalar):
        if isinstance(scalar, Form):
            raise TypeError("use wedge() for products of forms")
        return Form(self.degree, [scalar * a for a in self.comps])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Form(self.degree, [a / scalar for a in self.comps])

    def __xor__(self, other):
        return wedge(self, other)

    def map(self, fn: Callable) -> "Form":
        return Form(self.degree, [fn(c) for c in self.comps])

    def simplify(self) -> "Form":
        from .symcalc import simplify

        return self.map(simplify)

    def subs(self, *args, **kw) -> "Form":
        return self.map(lambda c: sp.sympify(c).subs(*args, **kw))

    def top(self):
        """Coefficient of dx^0123 of a 4-form."""
        if self.degree != 4:
            raise ValueError("top() needs a 4-form")
        return self.comps[0]

    def __repr__(self):
        items = ", ".join(f"{''.join(map(str, I))}: {c}" for I, c in self.as_dict().items())
        return f"Form{self.degree}({{{items}}})"


def _flatten(f: Form):
    return f.comps, f.degree


def _unflatten(degree, comps):
    obj = object.__new__(Form)
    obj.degree = degree
    obj.comps = tuple(comps)
    return obj


jax.tree_util.register_pytree_node(Form, _flatten, _unflatten)


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; raises if the degrees sum past 4."""
    p, q = a.degree, b.degree
    if p + q > DIM:
        raise ValueError(f"wedge of degrees {p}+{q} exceeds dimension {DIM}")
    comps = [0] * comb(DIM, p + q)
    for ia, ib, ic, s in _wedge_table(p, q):
        ca, cb = a.comps[ia], b.comps[ib]
        if _is_zero(ca) or _is_zero(cb):
            continue
        term = ca * cb
        comps[ic] = comps[ic] + term if s > 0 else comps[ic] - term
    return Form(p + q, comps)


def exterior_d(a: Form, deriv: Callable[[int, int], object]) -> Form:
    """``d a`` given ``deriv(n, j)`` = partial_j of component n."""
    k = a.degree
    if k >= DIM:
        raise ValueError("d of a 4-form is zero in dimension 4; degree overflow")
    pos = _position(k)
    comps = [0] * comb(DIM, k + 1)
    for m, J in enumerate(basis(k + 1)):
        acc = 0
        for slot, j in enumerate(J):
            rest = J[:slot] + J[slot + 1:]
            term = deriv(pos[rest], j)
            if _is_zero(term):
                continue
            acc = acc + term if slot % 2 == 0 else acc - term
        comps[m] = acc
    return Form(k + 1, comps)


def ext_d(a: Form, coords: Sequence[sp.Symbol]) -> Form:
    """Symbolic exterior derivative in the given chart coordinates."""
    return exterior_d(a, lambda n, j: sp.diff(a.comps[n], coords[j]))


def ext_d_field(f: Callable) -> Callable:
    """Exterior derivative of a numeric form field ``x -> Form`` via forward-mode AD."""
    jac = jax.jacfwd(f)

    def df(x):
        J = jac(x)
        return exterior_d(J, lambda n, j: J.comps[n][j])

    return df


def interior(v: Sequence, a: Form) -> Form:
    """Contraction ``iota_v a`` with a vector given by its 4 components."""
    k = a.degree
    if k == 0:
        raise ValueError("cannot contract a 0-form")
    pos = _position(k)
    comps = [0] * comb(DIM, k - 1)
    for m, J in enumerate(basis(k - 1)):
        acc = 0
        for j in range(DIM):
            if j in J or _is_zero(v[j]):
                continue
            I = (j,) + J
            s = perm_sign(I)
            c = a.comps[pos[tuple(sorted(I))]]
            if _is_zero(c):
                continue
            acc = acc + s * v[j] * c
        comps[m] = acc
    return Form(k - 1, comps)


# ----------------------------------------------------------------------
# metric-dependent operations
#
# ``MetricAlgebra`` carries the inverse metric, sqrt(det g) and the
# orientation; it is built from sympy matrices or numeric arrays.


def _det(m: Sequence[Sequence]) -> object:
    n = len(m)
    if n == 0:
        return 1
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = 0
    for perm in permutations(range(n)):
        s = perm_sign(perm)
        term = s
        for i, j in enumerate(perm):
            term = term * m[i][j]
        acc = acc + term
    return acc


class MetricAlgebra:
    """Pointwise metric data needed for Hodge star and inner products."""

    def __init__(self, ginv, sqrtdet, orientation: int = 1):
        self.ginv = [[ginv[i][j] for j in range(DIM)] for i in range(DIM)]
        self.sqrtdet = sqrtdet
        self.orientation = orientation
        self._minors = {}

    @classmethod
    def from_sympy(cls, g: sp.Matrix, orientation: int = 1) -> "MetricAlgebra":
        if g.is_diagonal():
            ginv = sp.diag(*[1 / g[i, i] for i in range(DIM)])
            sqrtdet = sp.Mul(*[sp.sqrt(g[i, i]) for i in range(DIM)])
        else:
            ginv = g.inv()
            sqrtdet = sp.sqrt(g.det())
        return cls(ginv.tolist(), sp.powsimp(sqrtdet), orientation)

    @classmethod
    def from_array(cls, g, orientation: int = 1) -> "MetricAlgebra":
        import jax.numpy as jnp

        g = jnp.asarray(g)
        ginv = jnp.linalg.inv(g)
        sqrtdet = jnp.sqrt(jnp.linalg.det(g))
        return cls([[ginv[i, j] for j in range(DIM)] for i in range(DIM)], sqrtdet, orientation)

    def minor(self, I, K):
        key = (I, K)
        if key not in self._minors:
            self._minors[key] = _det([[self.ginv[i][k] for k in K] for i in I])
        return self._minors[key]

    def volume(self) -> Form:
        return Form(4, [self.orientation * self.sqrtdet])


def raise_form(alg: MetricAlgebra, a: Form) -> list:
    """Components a^I with all indices raised (increasing multi-indices)."""
    k = a.degree
    B = basis(k)
    out = []
    for I in B:
        acc = 0
        for n, K in enumerate(B):
            if _is_zero(a.comps[n]):
                continue
            acc = acc + alg.minor(I, K) * a.comps[n]
        out.append(acc)
    return out


def inner(alg: MetricAlgebra, a: Form, b: Form):
    """Pointwise inner product with orthonormal coframe monomials of unit length."""
    if a.degree != b.degree:
        raise ValueError("inner product of forms of different degree")
    up = raise_form(alg, a)
    acc = 0
    for u, c in zip(up, b.comps):
        if _is_zero(u) or _is_zero(c):
            continue
        acc = acc + u * c
    return acc


def hodge_star(alg: MetricAlgebra, a: Form) -> Form:
    """Hodge star, characterised by ``a ^ *b = <a, b> vol``."""
    k = a.degree
    up = raise_form(alg, a)
    comps = [0] * comb(DIM, DIM - k)
    pos = _position(DIM - k)
    for I, u in zip(basis(k), up):
        if _is_zero(u):
            continue
        J = tuple(j for j in range(DIM) if j not in I)
        s = perm_sign(I + J)
        n = pos[J]
        comps[n] = comps[n] + s * u
    scale = alg.orientation * alg.sqrtdet
    return Form(DIM - k, [scale * c if not _is_zero(c) else c for c in comps])


def codifferential(alg_field: Callable, a_field: Callable) -> Callable:
    """Numeric ``d* = (-1)^{k} * d *`` up to the sign making it the L2 adjoint of d.

    In dimension 4 the adjoint of d on k-forms is ``d* = - * d *`` for every k.
    ``alg_field(x)`` returns a :class:`MetricAlgebra`, ``a_field(x)`` a Form.
    """

    def star_a(x):
        return hodge_star(alg_field(x), a_field(x))

    d_star_a = ext_d_field(star_a)

    def out(x):
        return -hodge_star(alg_field(x), d_star_a(x))

    return out


def sym_codifferential(alg: MetricAlgebra, a: Form, coords) -> Form:
    """Symbolic ``d* = - * d *`` on a 4-manifold."""
    return -hodge_star(alg, ext_d(hodge_star(alg, a), coords))


def form_matrix(a: Form) -> list[list]:
    """Full antisymmetric component array of a 2-form."""
    if a.degree != 2:
        raise ValueError("form_matrix needs a 2-form")
    m = [[0] * DIM for _ in range(DIM)]
    for (i, j), c in zip(basis(2), a.comps):
        m[i][j] = c
        m[j][i] = -c
    return m


def form_from_matrix(m) -> Form:
    return Form(2, [m[i][j] for i, j in basis(2)])


def lambdify_form(a: Form, chart, modules="jax") -> Callable:
    """Turn a symbolic form into a numeric field ``x -> Form``."""
    f = sp.lambdify(chart.symbols, [sp.sympify(c) for c in a.comps], modules=modules)
    k = a.degree

    def field(x):
        vals = f(x[0], x[1], x[2], x[3])
        return Form(k, [v + 0.0 * x[0] for v in vals])

    return field
