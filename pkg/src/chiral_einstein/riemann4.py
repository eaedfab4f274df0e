"""Riemannian calculus on a 4-chart.

Symbolic routines take a :class:`Metric` of sympy expressions; the ``*_at``
routines take a numeric metric field ``x -> (4, 4) array`` and use forward
mode AD, so they work for metrics with no tractable closed form (e.g. the
metric induced by a definite connection).

Conventions (pinned by the hyperbolic test: sectional curvature -1,
Ric = -3g):

* ``R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}``
* ``Ric_{bd} = R^a_{bad}``
* curvature operator on 2-forms: ``Rm(th^{ab}) = sum_{c<d} R_{abcd} th^{cd}``
  in an orthonormal coframe, so ``Rm = K Id`` for constant curvature K.
* 2-forms are normed so coframe monomials are unit; self-dual frames
  ``th^{0i} + th^{jk}`` therefore have length sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
import sympy as sp

from .forms import Form, MetricAlgebra, basis, ext_d, hodge_star, inner, sym_codifferential
from .symcalc import Chart, is_identically_zero, lambdify, simplify

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class SingularMetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric 4x4 matrix of expressions with an orientation sign for dx^0123."""

    matrix: sp.Matrix
    chart: Chart
    orientation: int = 1

    def __post_init__(self):
        m = sp.Matrix(self.matrix)
        if m.shape != (4, 4):
            raise ValueError("metric must be 4x4")
        if any(sp.simplify(m[i, j] - m[j, i]) != 0 for i in range(4) for j in range(i)):
            raise ValueError("metric matrix is not symmetric")
        object.__setattr__(self, "matrix", sp.ImmutableMatrix(m))

    @property
    def coords(self):
        return self.chart.symbols

    @cached_property
    def is_diagonal(self) -> bool:
        return all(self.matrix[i, j] == 0 for i in range(4) for j in range(4) if i != j)

    @cached_property
    def inverse(self) -> sp.Matrix:
        if self.is_diagonal:
            if any(sp.simplify(self.matrix[i, i]) == 0 for i in range(4)):
                raise SingularMetricError("metric has a vanishing diagonal entry")
            return sp.diag(*[1 / self.matrix[i, i] for i in range(4)])
        if sp.simplify(self.matrix.det()) == 0:
            raise SingularMetricError("metric determinant vanishes identically")
        return self.matrix.inv().applyfunc(simplify)

    @cached_property
    def algebra(self) -> MetricAlgebra:
        return MetricAlgebra.from_sympy(sp.Matrix(self.matrix), self.orientation)

    def numeric(self) -> Callable:
        """Jax field ``x -> (4, 4)``."""
        f = sp.lambdify(self.coords, self.matrix.tolist(), modules="jax")

        def g(x):
            return jnp.asarray(f(x[0], x[1], x[2], x[3]), dtype=jnp.float64) + 0.0 * x[0]

        return g

    def check_positive(self, n: int = 32, seed: int = 0) -> float:
        """Smallest eigenvalue over sample points; raises if not positive definite."""
        pts = self.chart.sample(n, seed)
        f = lambdify(self.matrix.tolist(), self.chart)
        worst = np.inf
        for p in pts:
            m = np.asarray(f(p), dtype=float)
            worst = min(worst, np.linalg.eigvalsh(m).min())
        if not worst > 0:
            raise SingularMetricError(f"metric not positive definite on the sample box (min eig {worst})")
        return worst

    def volume(self) -> Form:
        return self.algebra.volume()

    def scaled(self, factor) -> "Metric":
        return Metric(self.matrix * factor, self.chart, self.orientation)


# ----------------------------------------------------------------------
# symbolic operations on forms


def hodge(g: Metric, a: Form) -> Form:
    return hodge_star(g.algebra, a).simplify()


def form_inner(g: Metric, a: Form, b: Form):
    return simplify(inner(g.algebra, a, b))


def codiff(g: Metric, a: Form) -> Form:
    """``d* = - * d *`` (4 dimensions); the L2 adjoint of d."""
    return sym_codifferential(g.algebra, a, g.coords).simplify()


def laplacian_scalar(g: Metric, f) -> sp.Expr:
    """Positive Laplacian ``d* d f``."""
    return simplify(codiff(g, ext_d(Form(0, [f]), g.coords)).comps[0])


# ----------------------------------------------------------------------
# symbolic curvature


def christoffel(g: Metric):
    """``G[a][b][c] = Gamma^a_{bc}``."""
    x = g.coords
    gi = g.inverse
    m = g.matrix
    dg = [[[sp.diff(m[i, j], x[k]) for k in range(4)] for j in range(4)] for i in range(4)]
    G = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    for a in range(4):
        for b in range(4):
            for c in range(b, 4):
                s = 0
                for d in range(4):
                    if gi[a, d] == 0:
                        continue
                    s += gi[a, d] * (dg[d][c][b] + dg[d][b][c] - dg[b][c][d])
                G[a][b][c] = G[a][c][b] = simplify(s / 2)
    return G


def riemann(g: Metric, G=None):
    """``R[a][b][c][d] = R^a_{bcd}``."""
    x = g.coords
    G = G or christoffel(g)
    R = [[[[0] * 4 for _ in range(4)] for _ in range(4)] for _ in range(4)]
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(c + 1, 4):
                    s = sp.diff(G[a][d][b], x[c]) - sp.diff(G[a][c][b], x[d])
                    for e in range(4):
                        s += G[a][c][e] * G[e][d][b] - G[a][d][e] * G[e][c][b]
                    s = simplify(s)
                    R[a][b][c][d] = s
                    R[a][b][d][c] = -s
    return R


def ricci(g: Metric, R=None) -> sp.Matrix:
    """Symbolic Ricci tensor ``Ric_{bd} = R^a_{bad}``."""
    R = R or riemann(g)
    return sp.Matrix(4, 4, lambda b, d: simplify(sum(R[a][b][a][d] for a in range(4))))


def scalar_curvature(g: Metric, Ric=None):
    Ric = Ric if Ric is not None else ricci(g)
    gi = g.inverse
    return simplify(sum(gi[a, b] * Ric[a, b] for a in range(4) for b in range(4)))


def sqrt_on_chart(e, chart: Chart):
    """sqrt(e) with each ``Abs(f)`` resolved by the sign of f at a sample point.

    Valid on the connected chart domain, where f has no zeros (otherwise the
    metric would degenerate).
    """
    r = sp.sqrt(sp.factor(e))
    absv = list(r.atoms(sp.Abs))
    if not absv:
        return r
    p = chart.sample(1, seed=0)[0]
    sub = dict(zip(chart.symbols, p))
    return simplify(r.xreplace({a: a.args[0] * (1 if float(a.args[0].subs(sub)) > 0 else -1) for a in absv}))


def orthonormal_coframe(g: Metric) -> list[Form]:
    """Coframe th^a with g = sum (th^a)^2, oriented along the metric's orientation.

    Symbolic only for diagonal metrics; other metrics go through
    :func:`coframe_at`.
    """
    if not g.is_diagonal:
        raise NotImplementedError("symbolic coframe needs a diagonal metric; use coframe_at")
    th = [Form(1, [sqrt_on_chart(g.matrix[a, a], g.chart) if b == a else 0 for b in range(4)])
          for a in range(4)]
    if g.orientation < 0:
        th[3] = -th[3]
    return th


def selfdual_frame(th: list[Form], sign: int = 1) -> list[Form]:
    """``th^{0i} + sign * th^{jk}`` for cyclic (i, j, k); length sqrt(2) each."""
    out = []
    for i, j, k in CYCLIC:
        out.append((th[0] ^ th[i + 1]) + sign * (th[j + 1] ^ th[k + 1]))
    return out


@dataclass
class CurvatureSplit:
    """Blocks of the curvature operator in the frames of :func:`selfdual_frame`."""

    rm_plus: object
    rm_minus: object
    mixed: object
    scalar: object

    def numeric(self, chart: Chart, point) -> "CurvatureSplit":
        f = lambdify([self.rm_plus.tolist(), self.rm_minus.tolist(), self.mixed.tolist(), self.scalar], chart)
        p, m, x, s = f(np.asarray(point, dtype=float))
        return CurvatureSplit(np.array(p, float), np.array(m, float), np.array(x, float), float(s))


def _split_from_frame_riemann(Rf, sqrt2=None):
    """Rm blocks from orthonormal-frame components ``Rf[a][b][c][d] = R_{abcd}``."""
    half = sp.Rational(1, 2) if sqrt2 is None else 0.5
    # Rm(th^{ab}) = sum_{c<d} R_abcd th^{cd}; <Sigma_i, Rm Sigma_j>/2
    def vec(i, s):
        a, (j, k) = i + 1, CYCLIC[i][1:]
        return {(0, a): 1, (j + 1, k + 1): s}

    def block(s1, s2):
        M = [[0] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                acc = 0
                for (a, b), ca in vec(i, s1).items():
                    for (c, d), cb in vec(j, s2).items():
                        acc = acc + ca * cb * Rf[a][b][c][d]
                M[i][j] = acc * half
        return M

    return block(1, 1), block(-1, -1), block(1, -1)


def curvature_split(g: Metric) -> CurvatureSplit:
    """Symbolic splitting of Rm on Lambda^2 = Lambda^+ + Lambda^- (diagonal metrics)."""
    if not g.is_diagonal:
        raise NotImplementedError("symbolic split needs a diagonal metric; use curvature_split_at")
    G = christoffel(g)
    R = riemann(g, G)
    Ric = ricci(g, R)
    sc = scalar_curvature(g, Ric)
    m = g.matrix
    e = [sp.sqrt(m[a, a]) for a in range(4)]
    o = [1, 1, 1, g.orientation]
    Rf = [[[[0] * 4 for _ in range(4)] for _ in range(4)] for _ in range(4)]
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    # lower first index, then divide by frame lengths
                    val = m[a, a] * R[a][b][c][d] / (e[a] * e[b] * e[c] * e[d])
                    Rf[a][b][c][d] = val * o[a] * o[b] * o[c] * o[d]
    p, mi, x = _split_from_frame_riemann(Rf)
    f = lambda M: sp.Matrix(M).applyfunc(simplify)
    return CurvatureSplit(f(p), f(mi), f(x), sc)


def is_einstein(g: Metric, constant, **kw) -> bool:
    Ric = ricci(g)
    return all(
        is_identically_zero(Ric[i, j] - constant * g.matrix[i, j], g.chart, **kw)
        for i in range(4) for j in range(i, 4)
    )


# ----------------------------------------------------------------------
# numeric curvature via AD; gfun: x -> (4, 4)


def christoffel_at(gfun: Callable, x):
    """``Gamma^a_{bc}`` at x, shape (4, 4, 4)."""
    g = gfun(x)
    dg = jax.jacfwd(gfun)(x)  # dg[i, j, k] = d_k g_ij
    gi = jnp.linalg.inv(g)
    # t[d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    t = jnp.einsum("dcb->dbc", dg) + dg - jnp.einsum("bcd->dbc", dg)
    return 0.5 * jnp.einsum("ad,dbc->abc", gi, t)


def riemann_at(gfun: Callable, x):
    """``R^a_{bcd}`` at x, shape (4, 4, 4, 4)."""
    G = christoffel_at(gfun, x)
    dG = jax.jacfwd(lambda y: christoffel_at(gfun, y))(x)  # dG[a, b, c, e] = d_e G^a_bc
    term1 = jnp.einsum("adbc->abcd", dG)  # d_c G^a_db
    term2 = jnp.einsum("acbd->abcd", dG)  # d_d G^a_cb
    term3 = jnp.einsum("ace,edb->abcd", G, G)
    term4 = jnp.einsum("ade,ecb->abcd", G, G)
    return term1 - term2 + term3 - term4


def ricci_at(gfun: Callable, x):
    return jnp.einsum("abad->bd", riemann_at(gfun, x))


def scalar_at(gfun: Callable, x):
    return jnp.einsum("ab,ab->", jnp.linalg.inv(gfun(x)), ricci_at(gfun, x))


def coframe_at(g, orientation: int = 1):
    """Orthonormal coframe matrix E (rows th^a = E[a] dx) with det sign = orientation."""
    L = jnp.linalg.cholesky(g)
    E = L.T
    s = jnp.sign(jnp.linalg.det(E)) * orientation
    return E.at[3].multiply(s)


def curvature_split_at(gfun: Callable, x, orientation: int = 1) -> CurvatureSplit:
    """Numeric Rm blocks at a point for any metric field."""
    R = riemann_at(gfun, x)
    g = gfun(x)
    Rlow = jnp.einsum("ae,ebcd->abcd", g, R)
    E = coframe_at(g, orientation)
    frame = jnp.linalg.inv(E)  # columns are frame vectors e_a = frame[:, a]
    Rf = jnp.einsum("mnrs,ma,nb,rc,sd->abcd", Rlow, frame, frame, frame, frame)
    Rf_list = [[[[Rf[a, b, c, d] for d in range(4)] for c in range(4)] for b in range(4)] for a in range(4)]
    p, m, mx = _split_from_frame_riemann(Rf_list, sqrt2=True)
    sc = jnp.einsum("ab,ab->", jnp.linalg.inv(g), jnp.einsum("abad->bd", R))
    return CurvatureSplit(np.array(p, float), np.array(m, float), np.array(mx, float), float(sc))


# ----------------------------------------------------------------------
# Levi-Civita connection on Lambda^+ in the frame of selfdual_frame


def levi_civita_selfdual(g: Metric):
    """Connection 1-forms A^i of the Levi-Civita connection on Lambda^+.

    Frame: ``Sigma_i = th^{0i} + th^{jk}`` of :func:`selfdual_frame`.  The
    connection matrix M with ``nabla(u^k Sigma_k) = (du^i + M_ik u^k) Sigma_i``
    is converted with ``M_ik = -eps_ijk A^j``.
    """
    from .so3conn import So3Connection

    x = g.coords
    G = christoffel(g)
    th = orthonormal_coframe(g)
    Sig = selfdual_frame(th)
    mats = [_antisym(S) for S in Sig]

    def nabla(S, a):
        out = [[0] * 4 for _ in range(4)]
        for b in range(4):
            for c in range(4):
                v = sp.diff(S[b][c], x[a])
                for d in range(4):
                    v -= G[d][a][b] * S[d][c] + G[d][a][c] * S[b][d]
                out[b][c] = v
        return out

    gi = g.inverse

    def ip(P, S):  # <P, S> for full antisymmetric arrays: (1/2) P_bc S^bc
        acc = 0
        for b in range(4):
            for c in range(4):
                if gi[b, b] == 0 or S[b][c] == 0:
                    continue
                acc += P[b][c] * S[b][c] * gi[b, b] * gi[c, c]
        return acc / 2

    # M_ik(d_a) = <nabla_a Sigma_k, Sigma_i> / |Sigma|^2, |Sigma|^2 = 2
    M = [[[0] * 4 for _ in range(3)] for _ in range(3)]
    for k in range(3):
        for a in range(4):
            nS = nabla(mats[k], a)
            for i in range(3):
                M[i][k][a] = simplify(ip(nS, mats[i]) / 2)
    A = []
    for l in range(3):
        # A^l = -1/2 eps_ilk M_ik
        comps = [0] * 4
        for a in range(4):
            acc = 0
            for i in range(3):
                for k in range(3):
                    e = _eps(i, l, k)
                    if e:
                        acc += -sp.Rational(1, 2) * e * M[i][k][a]
            comps[a] = simplify(acc)
        A.append(Form(1, comps))
    return So3Connection(tuple(A), g.chart)


def _antisym(S: Form):
    m = [[0] * 4 for _ in range(4)]
    for (i, j), c in zip(basis(2), S.comps):
        m[i][j] = c
        m[j][i] = -c
    return m


def _eps(i, j, k) -> int:
    if (i, j, k) in CYCLIC:
        return 1
    if (i, k, j) in CYCLIC:
        return -1
    return 0
