import jax
import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiral_einstein import bianchi as bi
from chiral_einstein.quadrature import bump, gauss_legendre_box
from chiral_einstein.riemann4 import christoffel_at, ricci_at
from chiral_einstein.samples import INNER_POINTS

seeds = st.integers(min_value=0, max_value=2**32 - 1)
PTS = jnp.asarray(INNER_POINTS)
G_H = lambda x: jnp.eye(4) / x[0] ** 2
G_FLAT = lambda x: jnp.eye(4)
G_PERT = lambda x: jnp.diag(jnp.array([1 + 0.1 * (1 + x[1] ** 2 + x[1] * x[2]), 1.0, 1.0, 1.0])) / x[0] ** 2
ROTATION = lambda x: jnp.array([0.0, -x[2], x[1], 0.0])  # Killing on the half-space
CEN, RAD = jnp.array([1.0, 0, 0, 0]), jnp.array([0.4, 0.5, 0.5, 0.5])
BOX = [(0.6, 1.4), (-0.5, 0.5), (-0.5, 0.5), (-0.5, 0.5)]


def metric_from(c):
    """Random metric ``I + 0.1 (P P^T)`` with P affine in x."""
    def g(x):
        P = jnp.reshape(c[:, 0] + c[:, 1:] @ x, (4, 4))
        return jnp.eye(4) + 0.1 * P @ P.T
    return g


def sym_field(c):
    return lambda x: (lambda m: m + m.T)(jnp.reshape(c[:, 0] + c[:, 1:] @ x, (4, 4)))


def windowed_sym(c):
    return lambda x: bump(x, CEN, RAD) * sym_field(c)(x)


def integral(f, n=8):
    pts, w = gauss_legendre_box(BOX, n)
    return float(np.asarray(jax.vmap(f)(jnp.asarray(pts))) @ w)


@jax.jit
def _b_of_g(c, x):
    g = metric_from(c)
    return bi.bianchi_op(g, g)(x)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_bianchi_of_metric_vanishes(seed):
    c = jnp.asarray(np.random.default_rng(seed).normal(size=(16, 5)))
    assert float(jnp.max(jnp.abs(_b_of_g(c, PTS[1])))) < 1e-12


def test_contracted_bianchi():
    E = bi.einstein_map(G_H)
    assert bi.sup_over(bi.bianchi_op(G_H, E), PTS) < 1e-6
    # B_g(Ric) = 0 for every metric (div Ric = -1/2 dR)
    ric = lambda x: ricci_at(G_PERT, x)
    assert bi.sup_over(bi.bianchi_op(G_PERT, ric), PTS) < 1e-8
    assert bi.sup_over(bi.bianchi_op(G_PERT, lambda x: ric(x) - 0.0 * x[0]), PTS) < 1e-8


def test_bianchi_of_conformal_tensor_is_df():
    f = lambda x: x[0] * x[1] + jnp.sin(x[2])
    h = lambda x: f(x) * G_PERT(x)
    res = lambda x: bi.bianchi_op(G_PERT, h)(x) - jax.grad(f)(x)
    assert bi.sup_over(res, PTS) < 1e-10


def test_div_star_of_exact_form_is_hessian():
    f = lambda x: x[0] ** 2 * x[3] + x[1] * x[2]
    hess = lambda x: jax.hessian(f)(x) - jnp.einsum("mij,m->ij", christoffel_at(G_PERT, x), jax.grad(f)(x))
    res = lambda x: bi.div_star(G_PERT, jax.grad(f))(x) - hess(x)
    assert bi.sup_over(res, PTS) < 1e-10


def test_div_star_is_adjoint_of_div():
    rng = np.random.default_rng(0)
    h = windowed_sym(jnp.asarray(rng.normal(size=(16, 5))))
    ca = jnp.asarray(rng.normal(size=(4, 5)))
    alpha = lambda x: ca[:, 0] + ca[:, 1:] @ x
    g = G_PERT
    vol = lambda x: jnp.sqrt(jnp.linalg.det(g(x)))
    div, ds = bi.divergence(g, h), bi.div_star(g, alpha)

    def lhs(x):
        return bi.divergence(g, h)(x) @ jnp.linalg.inv(g(x)) @ alpha(x) * vol(x)

    def rhs(x):
        gi = jnp.linalg.inv(g(x))
        return jnp.einsum("ia,jb,ij,ab->", gi, gi, h(x), ds(x)) * vol(x)

    a, b = integral(lhs), integral(rhs)
    assert abs(a - b) < 1e-5 * (1 + abs(a))
    assert div is not None


def test_bochner_identity():
    rng = np.random.default_rng(1)
    c = jnp.asarray(rng.normal(size=(4, 5)))
    alpha = lambda x: (c[:, 0] + c[:, 1:] @ x) * (1 + x[1] * x[2])
    assert bi.bochner_identity_residual(G_H, alpha, PTS) < 1e-6
    assert bi.bochner_identity_residual(G_PERT, alpha, PTS) < 1e-6
    assert bi.bochner_identity_residual(G_FLAT, alpha, PTS) < 1e-9
    lhs, rhs = bi.bochner_sides(G_FLAT, lambda x: jnp.array([1.0, 0, 0, 0]) + 0 * x)
    assert bi.sup_over(lhs, PTS) == 0 and bi.sup_over(rhs, PTS) == 0


def test_linearized_einstein_kernel_and_scaling():
    Lvg = bi.lie_derivative_metric(G_H, lambda x: jnp.array([x[0], x[1], x[2], x[3]]))  # dilation, Killing
    assert bi.sup_over(Lvg, PTS) < 1e-12
    tr = lambda x: jnp.array([0.0, 1.0, 0.0, 0.0]) + 0 * x
    assert bi.sup_over(bi.lie_derivative_metric(G_H, tr), PTS) < 1e-12
    # a non-Killing field: L_v g is a genuine gauge direction in the kernel of D_g
    v = lambda x: bump(x, CEN, RAD) * jnp.array([x[1], x[0] * x[2], 1.0, x[3]])
    D = bi.linearized_einstein(G_H, bi.lie_derivative_metric(G_H, v))
    assert bi.sup_over(D, PTS) < 1e-5
    # Ric is scale invariant, so D_g(g) = 3 g
    Dg = bi.linearized_einstein(G_H, G_H)
    assert bi.sup_over(lambda x: Dg(x) - 3 * G_H(x), PTS) < 1e-6


def test_bianchi_of_linearization():
    rng = np.random.default_rng(2)
    for _ in range(3):
        h = sym_field(jnp.asarray(rng.normal(size=(16, 5))))
        assert bi.sup_over(bi.bianchi_op(G_H, bi.linearized_einstein(G_H, h)), PTS) < 1e-4


def test_gauge_fixed_operator_self_adjoint_and_killing_kernel():
    rng = np.random.default_rng(3)
    h1 = windowed_sym(jnp.asarray(rng.normal(size=(16, 5))))
    h2 = windowed_sym(jnp.asarray(rng.normal(size=(16, 5))))
    g = G_H
    vol = lambda x: jnp.sqrt(jnp.linalg.det(g(x)))

    def pair(a, b):
        La = bi.gauge_fixed_operator(g, a)

        def f(x):
            gi = jnp.linalg.inv(g(x))
            return jnp.einsum("ia,jb,ij,ab->", gi, gi, La(x), b(x)) * vol(x)

        return f

    a, b = integral(pair(h1, h2)), integral(pair(h2, h1))
    assert abs(a - b) < 1e-4 * (1 + abs(a))
    L = bi.gauge_fixed_operator(g, bi.lie_derivative_metric(g, ROTATION))
    assert bi.sup_over(L, PTS) < 1e-6


def test_killing_bochner():
    assert bi.killing_bochner_residual(G_H, ROTATION, PTS) < 1e-6
    lhs, rhs = bi.killing_bochner_sides(G_FLAT, lambda x: jnp.array([0.0, 0.0, 1.0, 0.0]) + 0 * x)
    assert bi.sup_over(lhs, PTS) == 0 and bi.sup_over(rhs, PTS) == 0
    with pytest.raises(bi.NotKillingError):
        bi.killing_bochner_residual(G_H, lambda x: jnp.array([x[1], 0.0, 0.0, 0.0]), PTS)


def test_lie_divergence_identity():
    zero = bi.lie_divergence_identity(G_H, lambda x: 0.0 * x, BOX, n=4)
    assert zero.lhs == 0 and zero.rhs == 0
    v = lambda x: bump(x, CEN, RAD) * jnp.array([x[1], 1.0, x[0], x[2] * x[3]])
    ld = bi.lie_divergence_identity(G_H, v, BOX, n=8)
    assert abs(ld.lhs - ld.rhs) < max(1e-6, 10 * ld.quad_error)
    # the printed combination |L_v g|^2 + 1/2 |d* v|^2 is a different number
    assert abs(ld.lhs - ld.rhs_printed) > 0.1 * abs(ld.lhs)
