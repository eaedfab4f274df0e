import jax
import jax.numpy as jnp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from chiral_einstein.definite import DefiniteField, j_matrices
from chiral_einstein.forms import Form
from chiral_einstein.h4model import frames
from chiral_einstein.models import hyperbolic_connection
from chiral_einstein.samples import BOX, INNER_POINTS, one_form, section
from chiral_einstein.so3conn import EForm, So3Connection, bracket, cov_ext_d_field
from chiral_einstein.torsionlin import (TorsionError, delta_psi, delta_sigma, eform_to_array, einstein_check,
                                        gauge_conditions, h_form, linearized_torsion, matrix_rigidity, p_matrix,
                                        projector_at, q_functional, q_matrix_v, star_e, star_lemma_check, torsion,
                                        torsion_difference, torsion_field, vertical_projection)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
X0 = jnp.asarray(INNER_POINTS[1])


@pytest.fixture(scope="module")
def field():
    return DefiniteField(frames.levi_civita(), INNER_POINTS[0])


def rand_one_form(seed):
    return one_form(jnp.asarray(np.random.default_rng(seed).normal(size=(3, 4, 5))))


ZERO = lambda x: EForm([Form(1, [0.0 * x[0]] * 4) for _ in range(3)])


# ----------------------------------------------------------------------
# torsion


def test_hyperbolic_torsion_vanishes_symbolically():
    T = torsion(hyperbolic_connection())
    assert all(sp.simplify(c) == 0 for f in T.comps for c in f.comps)


def test_torsion_precondition():
    A = hyperbolic_connection()
    rho, y1, y2, y3 = A.chart.symbols
    bumped = So3Connection((A.A[0] + Form.one_form([0, 0, y1 / 5, 0]), A.A[1], A.A[2]), A.chart)
    with pytest.raises(TorsionError):
        einstein_check(bumped)


def test_torsion_is_first_order_in_a_perturbation(field):
    b = rand_one_form(1)
    D = eform_to_array(linearized_torsion(field, b, X0))
    o, s = field.orientation, field.sign
    errs = []
    for eps in (1e-2, 5e-3):
        A = lambda x, eps=eps: field.A(x) + b(x) * eps
        T = eform_to_array(torsion_field(A, o, s)(X0))
        errs.append(float(jnp.max(jnp.abs(T - eps * D))))
    # O(eps^2): halving eps quarters the error
    assert errs[1] < errs[0] / 3


def test_linearized_torsion_matches_difference_oracle(field):
    for seed in (2, 3):
        b = rand_one_form(seed)
        lin = eform_to_array(linearized_torsion(field, b, X0))
        fd = torsion_difference(field, b, X0)
        assert float(jnp.max(jnp.abs(lin - fd))) < 1e-6 * (1 + float(jnp.max(jnp.abs(lin))))


def test_zero_perturbation(field):
    assert float(jnp.max(jnp.abs(delta_psi(field, ZERO, X0)))) == 0
    assert np.allclose(eform_to_array(delta_sigma(field, ZERO, X0)), 0)
    assert np.allclose(eform_to_array(linearized_torsion(field, ZERO, X0)), 0)


# ----------------------------------------------------------------------
# delta Psi and delta Sigma


def test_delta_psi_symmetric_trace_free_and_routes_agree(field):
    b = rand_one_form(4)
    phi = np.asarray(delta_psi(field, b, X0))
    rich = np.asarray(delta_psi(field, b, X0, method="richardson"))
    assert np.allclose(phi, phi.T, atol=1e-7) and abs(np.trace(phi)) < 1e-7
    assert np.allclose(phi, rich, atol=1e-7)
    assert np.abs(phi).max() > 1e-3


def test_delta_psi_vanishes_on_vertical_gauge_directions(field):
    rng = np.random.default_rng(5)
    u = section(jnp.asarray(rng.normal(size=(3, 5))))
    a = cov_ext_d_field(field.A, u)
    assert float(jnp.max(jnp.abs(delta_psi(field, a, X0)))) < 1e-10


def test_delta_sigma_reconstructs_d_A_a(field):
    b = rand_one_form(6)
    d = field.data(X0)
    phi = delta_psi(field, b, X0)
    sig = eform_to_array(delta_sigma(field, b, X0))
    da = eform_to_array(cov_ext_d_field(field.A, b)(X0))
    rec = phi @ d.Sigma + (d.Psi - jnp.eye(3)) @ sig
    assert np.allclose(rec, da, atol=1e-10)


# ----------------------------------------------------------------------
# projector, gauge conditions, star lemma


def test_projector_properties(field):
    rng = np.random.default_rng(7)
    for p in INNER_POINTS:
        x = jnp.asarray(p)
        P = np.asarray(projector_at(field, x))
        d = field.data(x)
        pm = np.asarray(p_matrix(j_matrices(d.Sigma, d.g, field.orientation)))
        qm = np.asarray(q_matrix_v(field.curvature_values(x)))
        assert np.allclose(P @ P, P, atol=1e-9)
        assert np.allclose(pm @ P, 0, atol=1e-9) and np.allclose(P @ qm, 0, atol=1e-9)
        a = rng.normal(size=12)
        a_vert = a - pm.T @ np.linalg.solve(pm @ pm.T, pm @ a)
        assert np.allclose(P @ a_vert, a_vert, atol=1e-9)
    Pm = np.array(frames.projector_matrix(), dtype=float)
    assert np.allclose(np.asarray(projector_at(field, X0)), Pm, atol=1e-10)


def test_gauge_conditions(field):
    g0 = gauge_conditions(field, ZERO, INNER_POINTS)
    assert g0.vertical and g0.horizontal
    b = rand_one_form(8)
    assert not gauge_conditions(field, b, INNER_POINTS).vertical
    assert gauge_conditions(field, vertical_projection(field, b), INNER_POINTS).vertical


def test_star_lemma_and_its_control(field):
    b = rand_one_form(9)
    r9, r10 = star_lemma_check(field, b, INNER_POINTS)
    assert r9 < 1e-9 and r10 < 1e-9
    assert star_lemma_check(field, ZERO, INNER_POINTS) == (0.0, 0.0)
    # without the vertical gauge the first identity fails measurably
    d = field.data(X0)
    Sig = field.sigma_field()(X0)
    raw = star_e(d.g, field.orientation, b(X0)) - bracket(Sig, b(X0))
    assert float(jnp.max(jnp.abs(eform_to_array(raw)))) > 1e-3


# ----------------------------------------------------------------------
# integrals


def test_h_form_zero_and_q_functional(field):
    assert h_form(field, ZERO, ZERO, BOX, n=4).value == 0
    q = q_functional(field, rand_one_form(10), BOX, n=6)
    # torsion-free: Sigma_i ^ (d_A b)^i is exact, so the integral vanishes
    assert abs(q.value) <= q.error + 1e-10


# ----------------------------------------------------------------------
# matrix rigidity


def test_rigidity_examples():
    assert matrix_rigidity(-np.eye(3)) == 0
    assert matrix_rigidity(np.diag([-1.0, -1.0, 1.0]), check=False) == 2
    with pytest.raises(ValueError):
        matrix_rigidity(np.diag([-1.0, -1.0, 1.0]))


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_rigidity_for_negative_definite(seed):
    rng = np.random.default_rng(seed)
    X_ = rng.normal(size=(3, 3))
    assert matrix_rigidity(-(X_ @ X_.T) - 1e-3 * np.eye(3)) == 0
