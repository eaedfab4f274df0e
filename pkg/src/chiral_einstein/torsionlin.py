"""Torsion of definite connections and its linearisation.

Numeric throughout: connections and perturbations are fields
``x -> EForm`` and all data comes from a :class:`DefiniteField`, whose
orientation and sign are held fixed under perturbation.  Notation:

* ``T(A) = d_A Sigma_A`` (torsion), ``D_A(a)`` its derivative along a,
* ``phi = delta Psi``, ``sigma = delta Sigma`` with
  ``d_A a = phi Sigma + (Psi - Id) sigma``,
* ``p(a) = J_i a^i``, ``q(v) = iota_v F_A``,
  ``Pi_A = 1 - q (p q)^{-1} p``.

E-valued 1-forms at a point are flattened to 12-vectors ``a[4 i + b]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
import sympy as sp

from .definite import (
    DefiniteData,
    DefiniteField,
    NotDefiniteError,
    SymbolicUnavailable,
    _mat,
    _vec,
    j_matrices,
    metric_from_connection,
    point_data,
)
from .forms import Form, MetricAlgebra, basis, hodge_star, inner
from .quadrature import gauss_legendre_box
from .riemann4 import curvature_split, curvature_split_at, ricci, ricci_at, scalar_at, scalar_curvature
from .so3conn import (
    EForm,
    So3Connection,
    bracket,
    cov_ext_d,
    cov_ext_d_field,
    curvature_field,
    eps,
    shift_field,
    wedge_scalar,
)
from .symcalc import Chart, lambdify, sample_regular

REL_TOL = 1e-7


class TorsionError(ValueError):
    pass


def holds(residual: float, scale: float = 0.0, tol: float = REL_TOL) -> bool:
    """Global tolerance policy: residual below ``tol * (1 + scale)``."""
    return bool(residual < tol * (1.0 + scale))


# ----------------------------------------------------------------------
# helpers on flattened data


def eform_to_array(a: EForm) -> jnp.ndarray:
    return jnp.stack([jnp.stack([jnp.asarray(c, dtype=jnp.float64) for c in a[i].comps]) for i in range(3)])


def array_to_eform(arr, k: int) -> EForm:
    n = len(basis(k))
    return EForm([Form(k, [arr[i, m] for m in range(n)]) for i in range(3)])


def _sigma_eform(Sv) -> EForm:
    return array_to_eform(Sv, 2)


# ----------------------------------------------------------------------
# torsion


def torsion(A: So3Connection, data: DefiniteData | None = None) -> EForm:
    """Symbolic ``d_A Sigma_A`` (needs the symbolic data path)."""
    data = data or metric_from_connection(A)
    return cov_ext_d(A, data.Sigma)


def sigma_field_for(A: Callable, orientation: int, sign: int) -> Callable:
    F = curvature_field(A)
    return lambda x: _sigma_eform(point_data(_vec(F(x)), orientation, sign).Sigma)


def torsion_field(A: Callable, orientation: int, sign: int) -> Callable:
    """``x -> d_A Sigma_A`` with orientation and sign held fixed."""
    return cov_ext_d_field(A, sigma_field_for(A, orientation, sign))


def torsion_residual(field: DefiniteField, points) -> float:
    T = jax.jit(lambda x: eform_to_array(torsion_field(field.A, field.orientation, field.sign)(x)))
    worst = 0.0
    for p in points:
        worst = max(worst, float(jnp.max(jnp.abs(T(jnp.asarray(p, dtype=jnp.float64))))))
    return worst


@dataclass
class EinsteinReport:
    sign: int
    torsion_residual: float
    ricci_residual: float
    scalar_curvature: float
    scalar_target: float
    rm_plus_eigs: tuple[float, float, float]
    method: str
    n_samples: int

    @property
    def rm_plus_definite(self) -> bool:
        e = np.asarray(self.rm_plus_eigs)
        return bool(np.all(e * self.sign > 0))

    def passed(self, tol: float = REL_TOL) -> bool:
        return (holds(self.ricci_residual, 12.0, tol)
                and holds(abs(self.scalar_curvature - self.scalar_target), 12.0, tol)
                and self.rm_plus_definite)


def einstein_check(A: So3Connection, n: int = 8, seed: int = 0, tol: float = REL_TOL) -> EinsteinReport:
    """Torsion-free check followed by ``Ric(g_A) = 3 s g_A``, ``R = 12 s`` and the sign of Rm+.

    Uses the symbolic data path when available and the numeric one otherwise.
    """
    pts = A.chart.sample(n, seed)
    field = DefiniteField(A, pts[0])
    tres = torsion_residual(field, pts)
    if not holds(tres, 1.0, tol):
        raise TorsionError(f"connection has torsion (sup residual {tres:.3e})")
    s = field.sign
    try:
        data = metric_from_connection(A, pts[0])
    except SymbolicUnavailable:
        data = None
    worst, scal, eigs = 0.0, [], []
    if data is not None and data.g_A.is_diagonal:
        g = data.g_A
        Ric = ricci(g)
        E = (Ric - 3 * s * g.matrix).tolist()
        fE = lambdify(E, A.chart)
        R = scalar_curvature(g, Ric)
        fR = lambdify(R, A.chart)
        split = curvature_split(g)
        for p in pts:
            worst = max(worst, float(np.max(np.abs(np.asarray(fE(p), dtype=float)))))
            scal.append(float(fR(p)))
            eigs.append(np.linalg.eigvalsh(split.numeric(A.chart, p).rm_plus))
        method = "symbolic"
    else:
        gf = field.metric_field()
        for p in pts:
            x = jnp.asarray(p, dtype=jnp.float64)
            gx = gf(x)
            worst = max(worst, float(jnp.max(jnp.abs(ricci_at(gf, x) - 3 * s * gx))))
            scal.append(float(scalar_at(gf, x)))
            eigs.append(np.linalg.eigvalsh(curvature_split_at(gf, x, field.orientation).rm_plus))
        method = "numeric"
    scal = np.asarray(scal)
    target = 12.0 * s
    worst_R = scal[np.argmax(np.abs(scal - target))]
    e = np.asarray(eigs)
    extreme = e.max(axis=0) if s < 0 else e.min(axis=0)
    return EinsteinReport(s, tres, worst, float(worst_R), target, tuple(float(v) for v in extreme), method, len(pts))


# ----------------------------------------------------------------------
# linearisation


def psi_along(field: DefiniteField, a: Callable, x) -> Callable:
    """``t -> Psi(A + t a)(x)``."""
    o, s = field.orientation, field.sign

    def psi(t):
        F = curvature_field(shift_field(field.A, a, t))
        return point_data(_vec(F(x)), o, s).Psi

    return psi


def delta_psi(field: DefiniteField, a: Callable, x, method: str = "jvp", h: float = 1e-3) -> jnp.ndarray:
    """``phi = delta Psi`` at x.

    ``method="jvp"`` differentiates exactly by forward-mode AD;
    ``method="richardson"`` uses central differences at steps h and h/2.
    """
    x = jnp.asarray(x, dtype=jnp.float64)
    psi = psi_along(field, a, x)
    if method == "jvp":
        return jax.jvp(psi, (0.0,), (1.0,))[1]
    if method == "richardson":
        d1 = (psi(h) - psi(-h)) / (2 * h)
        d2 = (psi(h / 2) - psi(-h / 2)) / h
        est = (4 * d2 - d1) / 3
        if not bool(jnp.all(jnp.isfinite(est))):
            raise FloatingPointError("loss of significance in the difference quotient")
        return est
    raise ValueError(f"unknown method {method!r}")


def phi_field(field: DefiniteField, a: Callable) -> Callable:
    return lambda x: delta_psi(field, a, x)


def delta_sigma_field(field: DefiniteField, a: Callable) -> Callable:
    """``sigma_i = P_ik ((d_A a)^k - phi^kj Sigma_j)`` as a field."""
    o, s, F = field.orientation, field.sign, field.F
    da = cov_ext_d_field(field.A, a)
    phi = phi_field(field, a)

    def sig(x):
        d = point_data(_vec(F(x)), o, s)
        rhs = eform_to_array(da(x)) - phi(x) @ d.Sigma
        return array_to_eform(d.P @ rhs, 2)

    return sig


def delta_sigma(field: DefiniteField, a: Callable, x) -> EForm:
    return delta_sigma_field(field, a)(jnp.asarray(x, dtype=jnp.float64))


def linearized_torsion_field(field: DefiniteField, a: Callable) -> Callable:
    """``D_A(a) = d_A sigma - [a ^ Sigma]`` (derivative of ``d_A Sigma_A``)."""
    sig = delta_sigma_field(field, a)
    dsig = cov_ext_d_field(field.A, sig)
    Sig = field.sigma_field()

    def D(x):
        return dsig(x) - bracket(a(x), Sig(x))

    return D


def linearized_torsion(field: DefiniteField, a: Callable, x) -> EForm:
    return linearized_torsion_field(field, a)(jnp.asarray(x, dtype=jnp.float64))


def torsion_difference(field: DefiniteField, a: Callable, x, h: float = 1e-3, richardson: bool = True) -> jnp.ndarray:
    """Finite-difference oracle for ``D_A(a)`` at x (component array)."""
    x = jnp.asarray(x, dtype=jnp.float64)
    o, s = field.orientation, field.sign

    def T(t):
        return eform_to_array(torsion_field(shift_field(field.A, a, t), o, s)(x))

    d1 = (T(h) - T(-h)) / (2 * h)
    if not richardson:
        return d1
    d2 = (T(h / 2) - T(-h / 2)) / h
    return (4 * d2 - d1) / 3


# ----------------------------------------------------------------------
# the bilinear form h_A


def h_integrand(field: DefiniteField, a: Callable, b: Callable) -> Callable:
    """Top coefficient of
    ``P_ik ((d_A a)^k - phi^kj Sigma_j) ^ (d_A b)^i - eps_ijk a^j ^ b^k ^ Sigma_i``."""
    sig = delta_sigma_field(field, a)
    db = cov_ext_d_field(field.A, b)
    Sig = field.sigma_field()

    def f(x):
        t1 = wedge_scalar(sig(x), db(x))
        t2 = wedge_scalar(bracket(a(x), b(x)), Sig(x))
        return (t1 - t2).comps[0]

    return f


@dataclass
class Integral:
    value: float
    error: float
    n: tuple[int, int]


def integrate(f: Callable, box, n: int = 8) -> Integral:
    """Two-grid Gauss-Legendre integral of a scalar field over a box."""
    fv = jax.jit(jax.vmap(f))
    vals = []
    for m in (n, 2 * n):
        pts, w = gauss_legendre_box(box, m)
        vals.append(float(_pairwise_sum(np.asarray(fv(jnp.asarray(pts))) * w)))
    return Integral(vals[1], abs(vals[1] - vals[0]), (n, 2 * n))


def _pairwise_sum(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float).ravel()
    while len(v) > 1:
        if len(v) % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if len(v) else 0.0


def h_form(field: DefiniteField, a: Callable, b: Callable, box, n: int = 8) -> Integral:
    """``h_A(a, b)`` for a, b supported in ``box``."""
    return integrate(h_integrand(field, a, b), box, n)


def q_functional(field: DefiniteField, b: Callable, box, n: int = 8) -> Integral:
    """``q_A(b) = int Sigma_i ^ (d_A b)^i``."""
    db = cov_ext_d_field(field.A, b)
    Sig = field.sigma_field()
    return integrate(lambda x: wedge_scalar(Sig(x), db(x)).comps[0], box, n)


def gauge_fixed_integrand(field: DefiniteField, a: Callable) -> Callable:
    """``(-P_ij <d^-a^i, d^-a^j> + |a|^2) * m`` where ``mu_A = o m dx^0123``,
    with ``d^-a = d_A a - phi Sigma``; equals the h_A(a, a) integrand for
    fully gauge-fixed a at a torsion-free connection."""
    o, s, F = field.orientation, field.sign, field.F
    da = cov_ext_d_field(field.A, a)
    phi = phi_field(field, a)

    def f(x):
        d = point_data(_vec(F(x)), o, s)
        alg = MetricAlgebra.from_array(d.g, o)
        dm = eform_to_array(da(x)) - phi(x) @ d.Sigma
        forms = [Form(2, [dm[i, n] for n in range(6)]) for i in range(3)]
        G = jnp.array([[inner(alg, forms[i], forms[j]) for j in range(3)] for i in range(3)])
        ax = a(x)
        a2 = sum(inner(alg, ax[i], ax[i]) for i in range(3))
        return (-jnp.sum(d.P * G) + a2) * d.m * o

    return f


# ----------------------------------------------------------------------
# gauge conditions and the star lemma


@dataclass
class GaugeCheck:
    vertical_residual: float
    horizontal_residual: float
    tol: float

    @property
    def vertical(self) -> bool:
        return self.vertical_residual < self.tol

    @property
    def horizontal(self) -> bool:
        return self.horizontal_residual < self.tol


def gauge_conditions(field: DefiniteField, a: Callable, points, tol: float = REL_TOL) -> GaugeCheck:
    """Sup over points of ``Sigma_i ^ a^i`` and ``eps_ijk Sigma_j ^ (d_A a)^k``."""
    Sig = field.sigma_field()
    da = cov_ext_d_field(field.A, a)

    def res(x):
        S = Sig(x)
        v = wedge_scalar(S, a(x))
        h = bracket(S, da(x))
        return (jnp.max(jnp.abs(jnp.stack(v.comps))),
                jnp.max(jnp.abs(eform_to_array(h))))

    f = jax.jit(res)
    vr = hr = 0.0
    for p in points:
        v, h = f(jnp.asarray(p, dtype=jnp.float64))
        vr, hr = max(vr, float(v)), max(hr, float(h))
    return GaugeCheck(vr, hr, tol)


def star_e(g, o, a: EForm) -> EForm:
    alg = MetricAlgebra.from_array(g, o)
    return EForm([hodge_star(alg, c) for c in a.comps])


def cov_codiff_field(A: Callable, gfun: Callable, orientation: int, a: Callable) -> Callable:
    """``d*_A = - * d_A *`` on E-valued forms, metric field gfun."""
    star_a = lambda x: star_e(gfun(x), orientation, a(x))
    dstar = cov_ext_d_field(A, star_a)
    return lambda x: -star_e(gfun(x), orientation, dstar(x))


def vertical_projection(field: DefiniteField, a: Callable) -> Callable:
    """Orthogonal projection of a field onto vertical gauge ``Sigma_i ^ a^i = 0`` (``ker p``)."""
    o, s, F = field.orientation, field.sign, field.F

    def av(x):
        d = point_data(_vec(F(x)), o, s)
        p = p_matrix(j_matrices(d.Sigma, d.g, o))
        v = eform_to_array(a(x)).ravel()
        return array_to_eform((v - p.T @ jnp.linalg.solve(p @ p.T, p @ v)).reshape(3, 4), 1)

    return av


def star_lemma_check(field: DefiniteField, a: Callable, points) -> tuple[float, float]:
    """Residuals of ``*a^i = eps_ijk Sigma_j ^ a^k`` and
    ``(d*_A a)^i = -*(eps_ijk Sigma_j ^ (d_A a)^k)``.

    Both need vertical gauge, so ``a`` is projected there first.
    """
    a = vertical_projection(field, a)
    o = field.orientation
    gf = field.metric_field()
    Sig = field.sigma_field()
    da = cov_ext_d_field(field.A, a)
    dstar = cov_codiff_field(field.A, gf, o, a)

    def res(x):
        g = gf(x)
        S = Sig(x)
        r1 = star_e(g, o, a(x)) - bracket(S, a(x))
        r2 = dstar(x) + star_e(g, o, bracket(S, da(x)))
        return jnp.max(jnp.abs(eform_to_array(r1))), jnp.max(jnp.abs(eform_to_array(r2)))

    f = jax.jit(res)
    w1 = w2 = 0.0
    for p in points:
        r1, r2 = f(jnp.asarray(p, dtype=jnp.float64))
        w1, w2 = max(w1, float(r1)), max(w2, float(r2))
    return w1, w2


# ----------------------------------------------------------------------
# rigidity of the skew equation


def _skew_basis() -> list[np.ndarray]:
    out = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        S = np.zeros((3, 3))
        S[i, j], S[j, i] = 1.0, -1.0
        out.append(S)
    return out


def matrix_rigidity(M, check: bool = True, tol: float = 1e-10) -> int:
    """Dimension of ``{S skew : M^{-1} S M + S = 0}``.

    ``check`` enforces the hypothesis M symmetric negative definite.
    """
    M = np.asarray(M, dtype=float)
    if check:
        if not np.allclose(M, M.T, atol=1e-12) or np.linalg.eigvalsh(M).max() >= 0:
            raise ValueError("M must be symmetric negative definite")
    Minv = np.linalg.inv(M)
    L = np.stack([(Minv @ S @ M + S).ravel() for S in _skew_basis()], axis=1)
    sv = np.linalg.svd(L, compute_uv=False)
    return int(np.sum(sv <= tol * max(1.0, sv.max())))


# ----------------------------------------------------------------------
# p, q and the projector


def p_matrix(J) -> jnp.ndarray:
    """(4, 12): ``p(a)_c = sum_i J_i[c, b] a^i_b``."""
    return jnp.concatenate([J[i] for i in range(3)], axis=1)


def q_matrix_v(Fv) -> jnp.ndarray:
    """(12, 4): ``q(v)^i_b = v^a F_i[a, b]``."""
    return jnp.concatenate([_mat(Fv[i]).T for i in range(3)], axis=0)


def projector_at(field: DefiniteField, x) -> jnp.ndarray:
    """``Pi_A`` at x as a (12, 12) matrix."""
    x = jnp.asarray(x, dtype=jnp.float64)
    Fv = field.curvature_values(x)
    d = field.data(x)
    p = p_matrix(j_matrices(d.Sigma, d.g, field.orientation))
    q = q_matrix_v(Fv)
    pq = p @ q
    if np.linalg.cond(np.asarray(pq)) > 1e12:
        raise NotDefiniteError("p o q is numerically singular")
    return jnp.eye(12) - q @ jnp.linalg.solve(pq, p)


def projector_pi(field: DefiniteField) -> Callable:
    """Field operator ``a -> Pi_A a`` on E-valued 1-form fields."""
    o, s, F = field.orientation, field.sign, field.F

    def Pi(x):
        Fv = _vec(F(x))
        d = point_data(Fv, o, s)
        p = p_matrix(j_matrices(d.Sigma, d.g, o))
        q = q_matrix_v(Fv)
        return jnp.eye(12) - q @ jnp.linalg.solve(p @ q, p)

    def apply(a: Callable) -> Callable:
        return lambda x: array_to_eform((Pi(x) @ eform_to_array(a(x)).ravel()).reshape(3, 4), 1)

    apply.matrix = Pi
    return apply


def gauge_fixing_operator(field: DefiniteField, u: Callable) -> Callable:
    """``d*_A Pi_A d_A u`` for an E-valued 0-form field u."""
    Pi = projector_pi(field)
    a = Pi(cov_ext_d_field(field.A, u))
    return cov_codiff_field(field.A, field.metric_field(), field.orientation, a)
