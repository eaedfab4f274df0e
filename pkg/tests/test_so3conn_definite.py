import jax
import jax.numpy as jnp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from chiral_einstein.definite import (WEDGE2, DefiniteField, NotDefiniteError, almost_complex, canonical_volume,
                                      connection_sign, is_definite, j_matrices, metric_from_connection, point_data,
                                      q_matrix, sqrtm_spd, triple_product, urbantke)
from chiral_einstein.forms import Form, MetricAlgebra, hodge_star, inner
from chiral_einstein.models import hyperbolic_connection, hyperbolic_half_space, round_sphere, selfdual_connection
from chiral_einstein.so3conn import (EForm, So3Connection, bracket, cov_ext_d, curvature, curvature_field,
                                     d_eform, eform_field, eps, gauge_action, rotate, rotate_connection)
from chiral_einstein.symcalc import cartesian_chart, lambdify, random_polynomial

seeds = st.integers(min_value=0, max_value=2**32 - 1)
CH = cartesian_chart()
X = CH.symbols
E = lambda *I: Form.basis_form(I)
# flat self-dual triple e^{0i} + e^{jk}, (i, j, k) cyclic
SD = [E(0, 1) + E(2, 3), E(0, 2) - E(1, 3), E(0, 3) + E(1, 2)]


def random_connection(rng, degree=1) -> So3Connection:
    return So3Connection(tuple(Form(1, [random_polynomial(CH, degree, rng, 3) for _ in range(4)]) for _ in range(3)),
                         CH)


def rational_rotation(a, b, c, d):
    n = a * a + b * b + c * c + d * d
    R = sp.Matrix([[a*a + b*b - c*c - d*d, 2*(b*c - a*d), 2*(b*d + a*c)],
                   [2*(b*c + a*d), a*a - b*b + c*c - d*d, 2*(c*d - a*b)],
                   [2*(b*d - a*c), 2*(c*d + a*b), a*a - b*b - c*c + d*d]])
    return R / n


def is_zero_eform(a: EForm) -> bool:
    return all(sp.expand(c) == 0 for f in a.comps for c in f.comps)


# ----------------------------------------------------------------------
# so3conn


def test_curvature_of_zero_connection():
    assert is_zero_eform(curvature(So3Connection.zero(CH)))


def test_hyperbolic_curvature_is_minus_sigma():
    A = hyperbolic_connection()
    data = metric_from_connection(A)
    assert is_zero_eform((curvature(A) + data.Sigma).simplify())


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_second_bianchi(seed):
    A = random_connection(np.random.default_rng(seed))
    assert is_zero_eform(cov_ext_d(A, curvature(A)))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_d_A_squared_is_curvature_action(seed):
    rng = np.random.default_rng(seed)
    A = random_connection(rng)
    u = EForm.scalars([random_polynomial(CH, 1, rng, 3) for _ in range(3)])
    F = curvature(A)
    lhs = cov_ext_d(A, cov_ext_d(A, u))
    # (d_A)^2 e_i = eps_ijk F^j e_k, i.e. (d_A^2 u)^k = eps_ijk F^j u^i
    rhs = EForm([sum((F[j] * (eps(i, j, k) * u[i].comps[0]) for i in range(3) for j in range(3)), Form.zero(2))
                 for k in range(3)])
    assert is_zero_eform(lhs - rhs)


def test_zero_connection_reduces_to_d():
    rng = np.random.default_rng(3)
    a = EForm([Form(1, [random_polynomial(CH, 2, rng, 3) for _ in range(4)]) for _ in range(3)])
    assert is_zero_eform(cov_ext_d(So3Connection.zero(CH), a) - d_eform(a, X))


def test_gauge_action_examples():
    A = random_connection(np.random.default_rng(5))
    assert is_zero_eform(gauge_action(A, EForm.scalars([0, 0, 0]), [0, 0, 0, 0]))
    u = EForm.scalars([X[0] * X[1], X[2], 1])
    assert is_zero_eform(gauge_action(So3Connection.zero(CH), u, [0] * 4) - d_eform(u, X))


@pytest.mark.parametrize("q", [(1, 1, 0, 0), (1, 2, -1, 3), (2, 0, 1, -1)])
def test_curvature_is_gauge_covariant_under_rotations(q):
    A = random_connection(np.random.default_rng(sum(q)))
    R = rational_rotation(*map(sp.Integer, q))
    assert sp.simplify(R * R.T - sp.eye(3)) == sp.zeros(3)
    lhs = curvature(rotate_connection(A, R))
    assert is_zero_eform(lhs - rotate(R.tolist(), curvature(A)))


def test_connection_matrix_round_trip():
    A = random_connection(np.random.default_rng(9))
    B = So3Connection.from_matrix(A.connection_matrix(), CH)
    assert all(sp.expand(u - v) == 0 for a, b in zip(A.A, B.A) for u, v in zip(a.comps, b.comps))


def test_numeric_curvature_matches_symbolic():
    A = random_connection(np.random.default_rng(11))
    F = curvature(A)
    p = jnp.array([0.1, -0.2, 0.3, 0.05])
    num = curvature_field(A.numeric())(p)
    sym = eform_field(F, CH)(p)
    assert np.allclose(num.values(), sym.values(), atol=1e-12)


def test_bracket_symmetric_on_one_forms():
    rng = np.random.default_rng(0)
    a = EForm([Form(1, list(rng.normal(size=4))) for _ in range(3)])
    b = EForm([Form(1, list(rng.normal(size=4))) for _ in range(3)])
    assert np.allclose(bracket(a, b).values(), bracket(b, a).values())


# ----------------------------------------------------------------------
# definite: algebra


def test_q_matrix_flat_triple_and_scaling():
    F = EForm(SD)
    mu = Form(4, [sp.Integer(1)])
    assert q_matrix(F, mu) == sp.eye(3)
    assert q_matrix(F, mu * 4) == sp.eye(3) / 4


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(min_value=0.1, max_value=10))
def test_q_scaling_numeric(seed, lam):
    rng = np.random.default_rng(seed)
    F = EForm([Form(2, list(rng.normal(size=6))) for _ in range(3)])
    Q1 = np.asarray(q_matrix(F, Form(4, [1.0])))
    Ql = np.asarray(q_matrix(F, Form(4, [lam])))
    assert np.allclose(Ql, Q1 / lam) and np.allclose(Q1, Q1.T)


def test_definiteness_verdicts():
    assert is_definite(EForm(SD), CH) == "positive-span"
    assert is_definite(curvature(hyperbolic_connection()), hyperbolic_connection().chart) != "not-definite"
    assert is_definite(EForm.zero(2), CH) == "not-definite"
    asd = E(0, 1) - E(2, 3)
    assert is_definite(EForm([SD[0], asd, SD[2]]), CH) == "not-definite"


def test_canonical_volume_examples():
    mu = Form(4, [sp.Integer(1)])
    assert canonical_volume(EForm(SD), mu).comps[0] == 1
    mu_a = canonical_volume(EForm(SD) * 2, mu)
    assert mu_a.comps[0] == 4
    Q = q_matrix(EForm(SD) * 2, mu_a)
    assert sum(sp.sqrt(Q[i, i]) for i in range(3)) == 3


def test_sqrtm_matches_eigen_route():
    rng = np.random.default_rng(1)
    X_ = rng.normal(size=(3, 3))
    Q = X_ @ X_.T + 0.1 * np.eye(3)
    w, V = np.linalg.eigh(Q)
    ref = V @ np.diag(np.sqrt(w)) @ V.T
    S, Si = sqrtm_spd(jnp.asarray(Q))
    assert np.allclose(S, ref, atol=1e-10) and np.allclose(np.asarray(S) @ np.asarray(Si), np.eye(3), atol=1e-10)


def random_definite_triple(rng, sign=1):
    """F_i = M_ij SD_j with M symmetric definite: a definite triple (flat chart)."""
    X_ = rng.normal(size=(3, 3))
    M = sign * (X_ @ X_.T + 0.3 * np.eye(3))
    base = np.array([[float(c) for c in s.comps] for s in SD])
    R = np.linalg.qr(rng.normal(size=(4, 4)))[0]  # random frame change keeps definiteness
    Fm = []
    for row in M @ base:
        m = np.zeros((4, 4))
        for n, (i, j) in enumerate(((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))):
            m[i, j], m[j, i] = row[n], -row[n]
        m = R.T @ m @ R
        Fm.append([m[0, 1], m[0, 2], m[0, 3], m[1, 2], m[1, 3], m[2, 3]])
    return jnp.asarray(Fm)


point_data_jit = jax.jit(point_data, static_argnums=(1, 2))


def orientation_of(Fv) -> int:
    return 1 if np.all(np.linalg.eigvalsh(np.asarray(Fv @ WEDGE2 @ Fv.T / 2)) > 0) else -1


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from([1, -1]))
def test_point_data_invariants(seed, sign):
    rng = np.random.default_rng(seed)
    Fv = random_definite_triple(rng, sign)
    o = orientation_of(Fv)
    products = []
    for s in (1, -1):
        d = point_data_jit(Fv, o, s)
        assert abs(float(jnp.trace(d.sqrtQ)) - 3) < 1e-8
        assert abs(float(jnp.trace(d.Psi))) < 1e-8
        # Sigma_i ^ Sigma_j = (1/3) (Sigma_k ^ Sigma_k) delta_ij
        W = np.asarray(d.Sigma @ WEDGE2 @ d.Sigma.T)
        assert np.allclose(W, np.trace(W) / 3 * np.eye(3), atol=1e-8 * np.abs(W).max())
        # F = s (Id - Psi) Sigma
        assert np.allclose(np.asarray(Fv), s * np.asarray((jnp.eye(3) - d.Psi) @ d.Sigma), atol=1e-8)
        alg = MetricAlgebra.from_array(d.g, o)
        for i in range(3):
            S = Form(2, list(d.Sigma[i]))
            assert np.allclose(np.asarray(hodge_star(alg, S).comps), np.asarray(S.comps), atol=1e-8)
            assert abs(float(inner(alg, S, S)) - 2) < 1e-8
        assert abs(float(alg.sqrtdet) - float(d.m)) < 1e-8 * float(d.m)
        J = j_matrices(d.Sigma, d.g, o)
        for i in range(3):
            assert np.allclose(J[i] @ J[i], -np.eye(4), atol=1e-8)
        products.append(np.asarray(triple_product(J)))
    # exactly one choice of sign gives J_1 J_2 J_3 = -Id; the other gives +Id
    assert np.allclose(products[0], -products[1], atol=1e-8)
    assert np.allclose(np.abs(np.diag(products[0])), 1, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(min_value=0.2, max_value=5))
def test_metric_conformal_scaling(seed, c):
    rng = np.random.default_rng(seed)
    Fv = random_definite_triple(rng)
    o = orientation_of(Fv)
    g1 = np.asarray(point_data_jit(Fv, o, 1).g)
    g2 = np.asarray(point_data_jit(Fv * c, o, 1).g)
    # mu_A scales like c^2, so g_A scales like c
    assert np.allclose(g2, c * g1, rtol=1e-9)


def test_urbantke_recovers_flat_metric():
    U = np.asarray(urbantke(jnp.asarray([[float(x) for x in s.comps] for s in SD])))
    assert np.allclose(U / U[0, 0], np.eye(4))


# ----------------------------------------------------------------------
# definite: geometry


def test_hyperbolic_definite_data():
    A = hyperbolic_connection()
    d = metric_from_connection(A)
    g = hyperbolic_half_space()
    assert d.sign == -1
    assert sp.simplify(d.g_A.matrix - g.matrix) == sp.zeros(4)
    assert d.Psi == sp.zeros(3) and d.P == -sp.eye(3) and d.Q == sp.eye(3)
    rho = g.chart.symbols[0]
    assert sp.simplify(d.mu_A.comps[0] * d.orientation - rho**-4) == 0


def test_j_relations_on_hyperbolic_frame():
    d = metric_from_connection(hyperbolic_connection())
    J = [sp.Matrix(m) for m in almost_complex(d)]
    f = lambdify([(Ji * Ji + sp.eye(4)).tolist() for Ji in J] + [(J[0] * J[1] - J[2]).tolist()], d.g_A.chart)
    assert np.allclose(np.asarray(f([0.7, 0.1, 0.2, 0.3]), float), 0)


def test_connection_sign_examples():
    assert connection_sign(hyperbolic_connection()) == -1
    S4 = selfdual_connection(round_sphere())
    assert connection_sign(S4, [0.1, 0.2, -0.1, 0.3]) == 1


@pytest.mark.parametrize("R", [sp.diag(1, 1, -1), sp.diag(-1, -1, -1), rational_rotation(1, 2, -1, 3),
                               rational_rotation(3, 1, 1, 0)])
def test_connection_sign_frame_independent(R):
    A = hyperbolic_connection()
    p = A.chart.sample(1, 0)[0]
    assert connection_sign(rotate_connection(A, R), p) == connection_sign(A, p)


def test_zero_connection_is_rejected():
    with pytest.raises(NotDefiniteError):
        DefiniteField(So3Connection.zero(CH), [0.1, 0.1, 0.1, 0.1])


def test_sphere_metric_recovered():
    d = metric_from_connection(selfdual_connection(round_sphere()), [0.1, 0.2, -0.1, 0.3])
    g = round_sphere()
    assert d.sign == 1
    diff = lambdify((d.g_A.matrix - g.matrix).tolist(), g.chart)
    for p in g.chart.sample(8, 0):
        assert np.max(np.abs(np.asarray(diff(p), float))) < 1e-8
