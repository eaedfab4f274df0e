"""Bianchi gauge, the linearised Einstein operator and related Bochner identities.

Numeric routines act on fields: a metric ``g: x -> (4, 4)``, symmetric
tensors ``h: x -> (4, 4)``, 1-forms ``alpha: x -> (4,)`` and vector fields
``v: x -> (4,)`` (components ``v^a``).  Covariant derivatives use
:func:`~chiral_einstein.riemann4.christoffel_at`.

* ``(div h)_i = -g^{jk} nabla_k h_ij``
* ``B_g(h) = div h + 1/2 d tr h``
* ``(div* alpha)_ij = nabla_(i alpha_j)``
* ``D_g`` = derivative of ``g -> Ric(g) + 3 g``, by central differences
* ``L_g = D_g + div* B_g``

The symbolic routines (``sym_*``) are used for exact indicial computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
import sympy as sp

from .quadrature import gauss_legendre_box
from .riemann4 import Metric, christoffel, christoffel_at, ricci_at
from .symcalc import simplify

SymTensor2 = sp.Matrix
OneForm = list

EINSTEIN_CONST = 3  # Ric = -n g with n = 3
D_STEP = 1e-4


class NotKillingError(ValueError):
    pass


# ----------------------------------------------------------------------
# covariant derivatives


def nabla_1form(g: Callable, alpha: Callable) -> Callable:
    """``T[k, i] = nabla_k alpha_i``."""
    dalpha = jax.jacfwd(alpha)  # [i, k]

    def T(x):
        G = christoffel_at(g, x)
        return dalpha(x).T - jnp.einsum("mki,m->ki", G, alpha(x))

    return T


def nabla_2tensor(g: Callable, h: Callable) -> Callable:
    """``T[k, i, j] = nabla_k h_ij``."""
    dh = jax.jacfwd(h)  # [i, j, k]

    def T(x):
        G = christoffel_at(g, x)
        H = h(x)
        return (jnp.einsum("ijk->kij", dh(x))
                - jnp.einsum("mki,mj->kij", G, H)
                - jnp.einsum("mkj,im->kij", G, H))

    return T


def divergence(g: Callable, h: Callable) -> Callable:
    nh = nabla_2tensor(g, h)
    return lambda x: -jnp.einsum("jk,kij->i", jnp.linalg.inv(g(x)), nh(x))


def trace(g: Callable, h: Callable) -> Callable:
    return lambda x: jnp.einsum("ij,ij->", jnp.linalg.inv(g(x)), h(x))


def bianchi_op(g: Callable, h: Callable) -> Callable:
    """``B_g(h) = div h + 1/2 d tr h``."""
    div = divergence(g, h)
    dtr = jax.grad(trace(g, h))
    return lambda x: div(x) + 0.5 * dtr(x)


def div_star(g: Callable, alpha: Callable) -> Callable:
    """Symmetrised covariant derivative; the L2 adjoint of div."""
    na = nabla_1form(g, alpha)

    def out(x):
        T = na(x)
        return 0.5 * (T + T.T)

    return out


def rough_laplacian(g: Callable, alpha: Callable) -> Callable:
    """``(nabla* nabla alpha)_i = -g^{kl} nabla_k nabla_l alpha_i``."""
    na = nabla_1form(g, alpha)
    nna = nabla_2tensor(g, na)  # [k, l, i]
    return lambda x: -jnp.einsum("kl,kli->i", jnp.linalg.inv(g(x)), nna(x))


def ricci_action(g: Callable, alpha: Callable) -> Callable:
    return lambda x: ricci_at(g, x) @ jnp.linalg.inv(g(x)) @ alpha(x)


def bochner_sides(g: Callable, alpha: Callable) -> tuple[Callable, Callable]:
    """``2 B_g(div* alpha)`` and ``nabla* nabla alpha - Ric(alpha)``."""
    lhs = bianchi_op(g, div_star(g, alpha))
    lap = rough_laplacian(g, alpha)
    ric = ricci_action(g, alpha)
    return (lambda x: 2 * lhs(x)), (lambda x: lap(x) - ric(x))


def sup_over(f: Callable, points) -> float:
    fj = jax.jit(f)
    return max(float(jnp.max(jnp.abs(fj(jnp.asarray(p, dtype=jnp.float64))))) for p in points)


def bochner_identity_residual(g: Callable, alpha: Callable, points) -> float:
    lhs, rhs = bochner_sides(g, alpha)
    return sup_over(lambda x: lhs(x) - rhs(x), points)


# ----------------------------------------------------------------------
# linearised Einstein operator


def einstein_map(g: Callable) -> Callable:
    """``g -> Ric(g) + 3 g``."""
    return lambda x: ricci_at(g, x) + EINSTEIN_CONST * g(x)


def linearized_einstein(g: Callable, h: Callable, step: float = D_STEP, richardson: bool = True) -> Callable:
    """``D_g(h)`` by central differences of the full Ricci tensor in the step."""

    def shifted(t):
        return lambda x: g(x) + t * h(x)

    def quotient(t):
        Ep, Em = einstein_map(shifted(t)), einstein_map(shifted(-t))
        return lambda x: (Ep(x) - Em(x)) / (2 * t)

    d1 = quotient(step)
    if not richardson:
        return d1
    d2 = quotient(step / 2)
    return lambda x: (4 * d2(x) - d1(x)) / 3


def gauge_fixed_operator(g: Callable, h: Callable, step: float = D_STEP) -> Callable:
    """``L_g(h) = D_g(h) + div*(B_g(h))``."""
    D = linearized_einstein(g, h, step)
    gf = div_star(g, bianchi_op(g, h))
    return lambda x: D(x) + gf(x)


# ----------------------------------------------------------------------
# Killing fields and the closing identities


def lie_derivative_metric(g: Callable, v: Callable) -> Callable:
    """``(L_v g)_ij = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k``."""
    dg = jax.jacfwd(g)  # [i, j, k]
    dv = jax.jacfwd(v)  # [k, i] = d_i v^k

    def L(x):
        G = g(x)
        V = dv(x)
        return jnp.einsum("ijk,k->ij", dg(x), v(x)) + G.T @ V + (G.T @ V).T

    return L


def flat(g: Callable, v: Callable) -> Callable:
    return lambda x: g(x) @ v(x)


def killing_bochner_sides(g: Callable, v: Callable) -> tuple[Callable, Callable]:
    """``1/2 Delta |v|^2`` (Delta = tr nabla^2) and ``|nabla v|^2 - Ric(v, v)``."""
    vb = flat(g, v)
    norm2 = lambda x: jnp.dot(v(x), vb(x))
    grad = jax.grad(norm2)
    hess = jax.jacfwd(grad)
    nv = nabla_1form(g, vb)

    def lhs(x):
        gi = jnp.linalg.inv(g(x))
        G = christoffel_at(g, x)
        H = hess(x) - jnp.einsum("mkl,m->kl", G, grad(x))
        return 0.5 * jnp.einsum("kl,kl->", gi, H)

    def rhs(x):
        gi = jnp.linalg.inv(g(x))
        T = nv(x)
        return jnp.einsum("ka,ib,ki,ab->", gi, gi, T, T) - v(x) @ ricci_at(g, x) @ v(x)

    return lhs, rhs


def killing_bochner_residual(g: Callable, v: Callable, points, killing_tol: float = 1e-6) -> float:
    Lv = lie_derivative_metric(g, v)
    kres = sup_over(Lv, points)
    if kres > killing_tol:
        raise NotKillingError(f"v is not Killing (sup |L_v g| = {kres:.3e})")
    lhs, rhs = killing_bochner_sides(g, v)
    return sup_over(lambda x: lhs(x) - rhs(x), points)


def _integrate(f: Callable, box, n: int) -> tuple[float, float]:
    fv = jax.jit(jax.vmap(f))
    vals = []
    for m in (n, 2 * n):
        pts, w = gauss_legendre_box(box, m)
        vals.append(float(np.sum(np.asarray(fv(jnp.asarray(pts))) * w)))
    return vals[1], abs(vals[1] - vals[0])


@dataclass
class LieDivergence:
    """Both sides of ``int <B_g(L_v g), v> = 1/2 |L_v g|^2 - |d* v|^2``.

    ``rhs_printed`` is ``|L_v g|^2 + 1/2 |d* v|^2``, kept for comparison.
    """

    lhs: float
    rhs: float
    rhs_printed: float
    quad_error: float


def lie_divergence_identity(g: Callable, v: Callable, box, n: int = 8) -> LieDivergence:
    """Windowed integrals for a compactly supported v inside ``box``."""
    Lv = lie_derivative_metric(g, v)
    B = bianchi_op(g, Lv)
    vb = flat(g, v)

    def vol(x):
        return jnp.sqrt(jnp.linalg.det(g(x)))

    def lhs(x):
        return jnp.dot(B(x), v(x)) * vol(x)

    def lie2(x):
        gi = jnp.linalg.inv(g(x))
        L = Lv(x)
        return jnp.einsum("ia,jb,ij,ab->", gi, gi, L, L) * vol(x)

    def dstar2(x):
        # d* v_flat = -div v = -(1/2) tr L_v g
        d = -0.5 * jnp.einsum("ij,ij->", jnp.linalg.inv(g(x)), Lv(x))
        return d * d * vol(x)

    l, el = _integrate(lhs, box, n)
    a, ea = _integrate(lie2, box, n)
    b, eb = _integrate(dstar2, box, n)
    return LieDivergence(l, 0.5 * a - b, a + 0.5 * b, el + 0.5 * ea + eb)


# ----------------------------------------------------------------------
# symbolic versions (for exact and indicial computations)


def _sym_nabla_2tensor(g: Metric, h: sp.Matrix, G=None):
    x = g.coords
    G = G or christoffel(g)
    T = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    for k in range(4):
        for i in range(4):
            for j in range(4):
                v = sp.diff(h[i, j], x[k])
                for m in range(4):
                    v -= G[m][k][i] * h[m, j] + G[m][k][j] * h[i, m]
                T[k][i][j] = v
    return T


def sym_bianchi(g: Metric, h: sp.Matrix, G=None) -> list:
    gi = g.inverse
    T = _sym_nabla_2tensor(g, h, G)
    tr = sum(gi[a, b] * h[a, b] for a in range(4) for b in range(4))
    out = []
    for i in range(4):
        div = -sum(gi[j, k] * T[k][i][j] for j in range(4) for k in range(4) if gi[j, k] != 0)
        out.append(simplify(div + sp.diff(tr, g.coords[i]) / 2))
    return out


def sym_div_star(g: Metric, alpha: list, G=None) -> sp.Matrix:
    x = g.coords
    G = G or christoffel(g)

    def na(k, i):
        return sp.diff(alpha[i], x[k]) - sum(G[m][k][i] * alpha[m] for m in range(4))

    return sp.Matrix(4, 4, lambda i, j: simplify((na(i, j) + na(j, i)) / 2))


def sym_linearized_ricci(g: Metric, h: sp.Matrix, G=None) -> sp.Matrix:
    """Exact first variation of Ric along h (variation of the Christoffel symbols)."""
    x = g.coords
    gi = g.inverse
    G = G or christoffel(g)
    dG = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    for a in range(4):
        for b in range(4):
            for c in range(b, 4):
                v = 0
                for d in range(4):
                    if gi[a, d] == 0:
                        continue
                    v += gi[a, d] * (sp.diff(h[d, c], x[b]) + sp.diff(h[d, b], x[c]) - sp.diff(h[b, c], x[d])) / 2
                    for e in range(4):
                        v -= gi[a, d] * h[d, e] * G[e][b][c]
                dG[a][b][c] = dG[a][c][b] = v

    def dR(a, b, c, d):  # delta R^a_{bcd}
        v = sp.diff(dG[a][d][b], x[c]) - sp.diff(dG[a][c][b], x[d])
        for e in range(4):
            v += dG[a][c][e] * G[e][d][b] + G[a][c][e] * dG[e][d][b]
            v -= dG[a][d][e] * G[e][c][b] + G[a][d][e] * dG[e][c][b]
        return v

    return sp.Matrix(4, 4, lambda b, d: simplify(sum(dR(a, b, a, d) for a in range(4))))


def sym_gauge_fixed_operator(g: Metric, h: sp.Matrix) -> sp.Matrix:
    """Symbolic ``L_g(h) = dRic(h) + 3 h + div*(B_g(h))``."""
    G = christoffel(g)
    D = sym_linearized_ricci(g, h, G) + EINSTEIN_CONST * h
    return (D + sym_div_star(g, sym_bianchi(g, h, G), G)).applyfunc(simplify)
