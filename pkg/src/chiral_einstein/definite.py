"""Definite connections and the metric they determine.

For curvature ``F = (F_1, F_2, F_3)`` and a volume form ``mu``,
``Q(mu)_ij = F_i ^ F_j / (2 mu)``.  A connection is definite when Q has
eigenvalues of one sign.  From such a connection we build

* the orientation ``o`` of M for which ``Q(o dx^0123)`` is positive,
* ``mu_A`` with ``tr sqrt(Q(mu_A)) = 3`` and ``Q_A = Q(mu_A)``,
* ``Sigma_i = s (Q_A^{-1/2})_ij F_j`` with the sign s fixed by
  ``J_1 J_2 J_3 = -Id``, ``J_i(a) = *(a ^ Sigma_i)``,
* ``Psi = Id - sqrt(Q_A)`` and ``P = (Psi - Id)^{-1}``,
* ``g_A``: the Urbantke metric of the triple, scaled to volume ``mu_A``.

2-forms are normed with unit coframe monomials, so ``|Sigma_i| = sqrt(2)``
and the usual ``sqrt(2)`` in J is absorbed: ``*(a ^ Sigma_i)`` equals
``sqrt(2) *(a ^ Sigma_i / |Sigma_i|)``.

Two paths exist.  :class:`DefiniteField` is numeric (jax) and works for
any connection field.  :func:`metric_from_connection` is symbolic and needs
``Q(dx^0123)`` and the Urbantke matrix to come out diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Callable, NamedTuple

import jax
import jax.numpy as jnp
import numpy as np
import sympy as sp

from .forms import Form, MetricAlgebra, basis, form_matrix, hodge_star, perm_sign
from .riemann4 import Metric, sqrt_on_chart
from .so3conn import EForm, So3Connection, curvature, curvature_field
from .symcalc import Chart, lambdify, sample_regular, simplify

EIG_TOL = 1e-10
SQRT_ITERS = 40


class NotDefiniteError(ValueError):
    pass


class SymbolicUnavailable(NotImplementedError):
    pass


def _levi_civita(n: int) -> np.ndarray:
    e = np.zeros((n,) * n)
    for p in permutations(range(n)):
        e[p] = perm_sign(p)
    return e


EPS3 = _levi_civita(3)
EPS4 = _levi_civita(4)


def _wedge_pairing() -> np.ndarray:
    """W with ``top(a ^ b) = a . W . b`` for 2-form component vectors."""
    B = basis(2)
    W = np.zeros((6, 6))
    for m, I in enumerate(B):
        for n, J in enumerate(B):
            if len(set(I + J)) == 4:
                W[m, n] = perm_sign(I + J)
    return W


WEDGE2 = _wedge_pairing()


# ----------------------------------------------------------------------
# Q matrix, definiteness, volume normalisation


def q_matrix(F: EForm, mu: Form):
    """``Q(mu)_ij = (F_i ^ F_j) / (2 mu)``; sympy Matrix for symbolic F."""
    if F.degree != 2 or mu.degree != 4:
        raise ValueError("q_matrix needs an E-valued 2-form and a 4-form")
    top = mu.comps[0]
    entries = [[(F[i] ^ F[j]).comps[0] for j in range(3)] for i in range(3)]
    if isinstance(top, sp.Basic) or any(isinstance(e, sp.Basic) for r in entries for e in r):
        if sp.simplify(top) == 0:
            raise ZeroDivisionError("volume form vanishes")
        return sp.Matrix(3, 3, lambda i, j: simplify(entries[i][j] / (2 * top)))
    return jnp.asarray(entries) / (2 * top)


def _eig_verdict(eigs: np.ndarray) -> str:
    scale = np.max(np.abs(eigs))
    if scale == 0 or np.min(np.abs(eigs)) <= EIG_TOL * scale:
        return "not-definite"
    if np.all(eigs > 0):
        return "positive-span"
    if np.all(eigs < 0):
        return "negative-span"
    return "not-definite"


def is_definite(F: EForm, chart: Chart, n: int = 32, seed: int = 0) -> str:
    """Verdict from the eigenvalues of ``Q(dx^0123)`` at sample points.

    ``positive-span``/``negative-span`` say whether the span of the F_i is
    positive or negative for the wedge pairing relative to the coordinate
    orientation; any sign change or vanishing eigenvalue gives
    ``not-definite``.
    """
    Q = q_matrix(F, Form(4, [sp.Integer(1)]))
    pts = sample_regular(list(Q), chart, n, seed)
    f = lambdify(Q.tolist(), chart)
    verdicts = set()
    for p in pts:
        M = np.asarray(f(p), dtype=float)
        verdicts.add(_eig_verdict(np.linalg.eigvalsh(M)))
    return verdicts.pop() if len(verdicts) == 1 else "not-definite"


def canonical_volume(F: EForm, mu_ref: Form) -> Form:
    """``mu_A = mu_ref (tr sqrt Q(mu_ref) / 3)^2`` with Q(mu_ref) > 0 required.

    Symbolic; needs Q(mu_ref) diagonal (use :class:`DefiniteField` otherwise).
    """
    Q = q_matrix(F, mu_ref)
    if not Q.is_diagonal():
        raise SymbolicUnavailable("symbolic square root needs a diagonal Q")
    tr = sum(sp.sqrt(Q[i, i]) for i in range(3))
    return Form(4, [simplify(mu_ref.comps[0] * (tr / 3) ** 2)])


# ----------------------------------------------------------------------
# numeric pointwise core


def sqrtm_spd(Q, iters: int = SQRT_ITERS):
    """``(sqrt(Q), sqrt(Q)^{-1})`` by Denman-Beavers iteration.

    Unlike ``eigh`` this is differentiable at repeated eigenvalues, which is
    exactly where the hyperbolic model sits (Q = Id).
    """
    t = jnp.trace(Q) / 3
    Y0 = Q / t
    Z0 = jnp.eye(3, dtype=Q.dtype)

    def step(_, YZ):
        Y, Z = YZ
        return 0.5 * (Y + jnp.linalg.inv(Z)), 0.5 * (Z + jnp.linalg.inv(Y))

    Y, Z = jax.lax.fori_loop(0, iters, step, (Y0, Z0))
    r = jnp.sqrt(t)
    return Y * r, Z / r


def _vec(F: EForm):
    return jnp.stack([jnp.stack([jnp.asarray(c, dtype=jnp.float64) for c in F[i].comps]) for i in range(3)])


def _mat(v):
    """(6,) 2-form components -> antisymmetric (4, 4)."""
    m = jnp.zeros((4, 4), dtype=v.dtype)
    for n, (i, j) in enumerate(basis(2)):
        m = m.at[i, j].set(v[n]).at[j, i].set(-v[n])
    return m


def urbantke(Fv) -> jnp.ndarray:
    """Conformal metric of a definite triple, sign-fixed to be positive.

    ``U_ab = eps^{ijk} F_i,ac F_j,bd F_k,ef eps^{cdef}``; the triple spans the
    self-dual forms of U (tested, not assumed).
    """
    Fm = jnp.stack([_mat(Fv[i]) for i in range(3)])
    U = jnp.einsum("ijk,iac,jbd,kef,cdef->ab", EPS3, Fm, Fm, Fm, EPS4)
    U = 0.5 * (U + U.T)
    return U * jnp.sign(jnp.trace(U))


class PointData(NamedTuple):
    """Everything derived from a definite connection at one point (arrays)."""

    Q_ref: jnp.ndarray   # Q(o dx^0123)
    m: jnp.ndarray       # mu_A = o m dx^0123
    Q: jnp.ndarray       # Q_A
    sqrtQ: jnp.ndarray
    Sigma: jnp.ndarray   # (3, 6)
    Psi: jnp.ndarray
    P: jnp.ndarray
    g: jnp.ndarray       # g_A, (4, 4)


def point_data(Fv, orientation: int, sign: int) -> PointData:
    Q_ref = Fv @ WEDGE2 @ Fv.T / (2.0 * orientation)
    sq, isq = sqrtm_spd(Q_ref)
    m = (jnp.trace(sq) / 3) ** 2
    r = jnp.sqrt(m)
    sqrtQ = sq / r
    Sigma = sign * (isq * r) @ Fv
    Psi = jnp.eye(3) - sqrtQ
    P = jnp.linalg.inv(Psi - jnp.eye(3))
    U = urbantke(Fv)
    g = U * jnp.sqrt(m / jnp.sqrt(jnp.linalg.det(U)))
    return PointData(Q_ref, m, Q_ref / m, sqrtQ, Sigma, Psi, P, g)


def j_matrices(Sigma, g, orientation: int):
    """``J_i`` as (3, 4, 4) arrays acting on covector components: ``J_i(a) = *(a ^ Sigma_i)``."""
    alg = MetricAlgebra.from_array(g, orientation)
    out = []
    for i in range(3):
        S = Form(2, [Sigma[i, n] for n in range(6)])
        cols = []
        for b in range(4):
            e = Form(1, [1.0 if c == b else 0.0 for c in range(4)])
            cols.append(jnp.stack([jnp.asarray(c, dtype=jnp.float64) for c in hodge_star(alg, e ^ S).comps]))
        out.append(jnp.stack(cols, axis=1))
    return jnp.stack(out)


def triple_product(J) -> jnp.ndarray:
    return J[0] @ J[1] @ J[2]


class DefiniteField:
    """Numeric definite-connection data for a connection field ``x -> EForm``.

    The orientation of M and the sign of the connection are decided once, at
    ``point``, and then held fixed; :meth:`check_constant` re-tests them on
    sample points.
    """

    def __init__(self, A, point, chart: Chart | None = None):
        if isinstance(A, So3Connection):
            chart = chart or A.chart
            A = A.numeric()
        self.A = A
        self.chart = chart
        self.F = curvature_field(A)
        x0 = jnp.asarray(point, dtype=jnp.float64)
        Fv = _vec(self.F(x0))
        Q0 = np.asarray(Fv @ WEDGE2 @ Fv.T / 2.0)
        verdict = _eig_verdict(np.linalg.eigvalsh(Q0))
        if verdict == "not-definite":
            raise NotDefiniteError(f"connection is not definite at {np.asarray(point).tolist()}")
        self.orientation = 1 if verdict == "positive-span" else -1
        d = point_data(Fv, self.orientation, 1)
        prod = np.asarray(triple_product(j_matrices(d.Sigma, d.g, self.orientation)))
        if np.allclose(prod, -np.eye(4), atol=1e-6):
            self.sign = 1
        elif np.allclose(prod, np.eye(4), atol=1e-6):
            self.sign = -1
        else:  # pragma: no cover - would contradict the quaternion relations
            raise NotDefiniteError("J_1 J_2 J_3 is not +-Id")
        o, s = self.orientation, self.sign
        self._data = jax.jit(lambda x: point_data(_vec(self.F(x)), o, s))
        self._curv = jax.jit(lambda x: _vec(self.F(x)))

    # pointwise accessors -------------------------------------------------

    def curvature_values(self, x) -> jnp.ndarray:
        return self._curv(jnp.asarray(x, dtype=jnp.float64))

    def data(self, x) -> PointData:
        return self._data(jnp.asarray(x, dtype=jnp.float64))

    def J(self, x) -> jnp.ndarray:
        d = self.data(x)
        return j_matrices(d.Sigma, d.g, self.orientation)

    def volume(self, x) -> Form:
        return Form(4, [self.orientation * self.data(x).m])

    # fields --------------------------------------------------------------

    def sigma_field(self) -> Callable:
        o, s, F = self.orientation, self.sign, self.F

        def Sigma(x):
            Sv = point_data(_vec(F(x)), o, s).Sigma
            return EForm([Form(2, [Sv[i, n] for n in range(6)]) for i in range(3)])

        return Sigma

    def metric_field(self) -> Callable:
        o, s, F = self.orientation, self.sign, self.F
        return lambda x: point_data(_vec(F(x)), o, s).g

    def check_constant(self, points) -> bool:
        """Q keeps its definiteness class at all points (orientation unchanged)."""
        want = "positive-span" if self.orientation > 0 else "negative-span"
        for p in points:
            Fv = np.asarray(self.curvature_values(p))
            if _eig_verdict(np.linalg.eigvalsh(Fv @ WEDGE2 @ Fv.T / 2.0)) != want:
                return False
        return True


# ----------------------------------------------------------------------
# symbolic data


@dataclass(frozen=True, eq=False)
class DefiniteData:
    """Symbolic data of a definite connection (see module docstring)."""

    Q: sp.Matrix
    sign: int
    mu_A: Form
    g_A: Metric
    Sigma: EForm
    Psi: sp.Matrix
    P: sp.Matrix
    F: EForm
    orientation: int


def _sym_urbantke(F: EForm) -> sp.Matrix:
    Fm = [form_matrix(F[i]) for i in range(3)]
    U = sp.zeros(4, 4)
    eps4 = [(p, perm_sign(p)) for p in permutations(range(4))]
    eps3 = [(p, perm_sign(p)) for p in permutations(range(3))]
    for a in range(4):
        for b in range(a, 4):
            acc = 0
            for (i, j, k), s3 in eps3:
                for (c, d, e, f), s4 in eps4:
                    x = Fm[i][a][c]
                    if x == 0:
                        continue
                    y = Fm[j][b][d]
                    if y == 0:
                        continue
                    z = Fm[k][e][f]
                    if z == 0:
                        continue
                    acc += s3 * s4 * x * y * z
            U[a, b] = U[b, a] = simplify(acc)
    return U


def metric_from_connection(A: So3Connection, point=None) -> DefiniteData:
    """Symbolic :class:`DefiniteData`; raises :class:`SymbolicUnavailable` when the
    square root or the Urbantke matrix is not diagonal."""
    chart = A.chart
    F = curvature(A)
    Q1 = q_matrix(F, Form(4, [sp.Integer(1)]))
    if point is None:
        point = sample_regular(list(Q1), chart, 1, seed=0)[0]
    num = DefiniteField(A, point)
    o, s = num.orientation, num.sign
    Q_ref = Q1 * o
    if not Q_ref.is_diagonal():
        raise SymbolicUnavailable("Q is not diagonal; use DefiniteField")
    roots = [sqrt_on_chart(Q_ref[i, i], chart) for i in range(3)]
    m = simplify(((roots[0] + roots[1] + roots[2]) / 3) ** 2)
    mu_A = Form(4, [o * m])
    sqrtQ = sp.diag(*[simplify(r / sp.sqrt(m)) for r in roots])
    QA = (Q_ref / m).applyfunc(simplify)
    isq = sp.diag(*[simplify(1 / sqrtQ[i, i]) for i in range(3)])
    Sigma = F.matmul((isq * s).tolist()).simplify()
    Psi = (sp.eye(3) - sqrtQ).applyfunc(simplify)
    P = (Psi - sp.eye(3)).inv().applyfunc(simplify)
    U = _sym_urbantke(F)
    if not U.is_diagonal():
        raise SymbolicUnavailable("Urbantke matrix is not diagonal; use DefiniteField")
    U0 = lambdify(U.tolist(), chart)(np.asarray(point, dtype=float))
    if np.trace(np.asarray(U0, dtype=float)) < 0:
        U = -U
    det = sp.Mul(*[U[i, i] for i in range(4)])
    c = sqrt_on_chart(m / sqrt_on_chart(det, chart), chart)
    g = (U * c).applyfunc(simplify)
    return DefiniteData(QA, s, mu_A, Metric(g, chart, o), Sigma, Psi, P, F, o)


def sigma(A: So3Connection, data: DefiniteData | None = None) -> EForm:
    return (data or metric_from_connection(A)).Sigma


def almost_complex(data: DefiniteData) -> list[list[list]]:
    """Symbolic ``J_i`` matrices: ``J[i][a][b]`` is the ``e^a`` coefficient of ``J_i(e^b)``."""
    alg = data.g_A.algebra
    out = []
    for i in range(3):
        J = [[0] * 4 for _ in range(4)]
        for b in range(4):
            e = Form(1, [1 if c == b else 0 for c in range(4)])
            img = hodge_star(alg, e ^ data.Sigma[i]).simplify()
            for a in range(4):
                J[a][b] = img.comps[a]
        out.append(J)
    return out


def connection_sign(A, point=None, chart: Chart | None = None) -> int:
    """+1 for positive definite, -1 for negative definite connections."""
    if point is None:
        if not isinstance(A, So3Connection):
            raise ValueError("a sample point is needed for a connection field")
        point = A.chart.sample(1, seed=0)[0]
    return DefiniteField(A, point, chart).sign
