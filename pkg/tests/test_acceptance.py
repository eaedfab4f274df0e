"""Acceptance gate: ten criteria, each checked at its stated tolerance.

Every test records a PASS/FAIL line through the ``criterion`` fixture; the
terminal summary lists one verdict per criterion.  Two parts compare against
printed formulas that the computation contradicts (the coefficient of ``R``
in the model normal operator and the complete indicial set of ``L_g``).
They are asserted as stated and marked strict xfail, so they fail visibly
without breaking the run; the derived values are checked next to them.
"""

import time

import jax
import jax.numpy as jnp
import numpy as np
import pytest
import sympy as sp

from chiral_einstein import bianchi as bi
from chiral_einstein.asymptotic import F_SLOPE_MIN, expansion_check
from chiral_einstein.definite import DefiniteField, metric_from_connection
from chiral_einstein.h4model import frames, grid, indicial, normal
from chiral_einstein.models import hyperbolic_connection, hyperbolic_half_space
from chiral_einstein.samples import INNER_POINTS, gauge_invariance, h_pairings
from chiral_einstein.symcalc import lambdify
from chiral_einstein.torsionlin import einstein_check, matrix_rigidity

SEED = 20240


def roots_distance(found, expected) -> float:
    found = sorted(float(np.real(complex(r))) for r in found)
    expected = sorted(expected)
    if len(found) != len(expected):
        return float("inf")
    return max((abs(a - b) for a, b in zip(found, expected)), default=0.0)


@pytest.fixture(scope="module")
def h4_field():
    return DefiniteField(frames.levi_civita(), INNER_POINTS[0])


# 1 ------------------------------------------------------------------------


def test_c01_hyperbolic_pipeline(criterion):
    t0 = time.perf_counter()
    A = hyperbolic_connection()
    data = metric_from_connection(A)
    g = hyperbolic_half_space()
    diff = data.g_A.matrix - g.matrix
    pts = g.chart.sample(32, SEED)
    f = lambdify(list(diff), g.chart)
    metric_res = max(float(np.max(np.abs(np.asarray(f(p), dtype=float)))) for p in pts)
    rep = einstein_check(A, n=8, seed=SEED)
    elapsed = time.perf_counter() - t0
    ok = (metric_res < 1e-7 and rep.torsion_residual < 1e-7 and rep.ricci_residual < 1e-7
          and abs(rep.scalar_curvature + 12) < 1e-7
          and np.allclose(rep.rm_plus_eigs, -1, atol=1e-7) and rep.sign == -1 and elapsed < 30)
    criterion(1, "H4 pipeline",
              ok, f"g_A-g {metric_res:.1e}, torsion {rep.torsion_residual:.1e}, Ric+3g {rep.ricci_residual:.1e}, "
              f"R {rep.scalar_curvature:.6f}, Rm+ {np.round(rep.rm_plus_eigs, 9).tolist()}, sign {rep.sign}, "
              f"{elapsed:.1f}s")
    assert ok


# 2 ------------------------------------------------------------------------


def test_c02_j_table(criterion):
    J = frames.model_J()
    table = frames.j_table(J)
    mismatched = [k for k, v in frames.J_TABLE_PRINTED.items() if table[k] != v]
    prod = np.array(J[0] * J[1] * J[2] + sp.eye(4), dtype=float)
    res = float(np.max(np.abs(prod)))
    ok = len(frames.J_TABLE_PRINTED) == 12 and not mismatched and res < 1e-12
    criterion(2, "J-table", ok, f"{12 - len(mismatched)}/12 entries exact, |J1J2J3 + Id| = {res:.1e}")
    assert ok


# 3 ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def normal_residuals():
    rng = np.random.default_rng(SEED)
    return np.array([normal.identity_residuals(normal.random_section(rng)) for _ in range(50)])


@pytest.mark.xfail(strict=True, reason="printed coefficient 1/2 of R disagrees with the composed operator (2)")
def test_c03_normal_operator_identity(criterion, normal_residuals):
    worst = float(normal_residuals[:, 0].max())
    ok = worst < 1e-8
    criterion(3, "normal-operator identity, R = (1/2) rho curl", ok, f"worst residual {worst:.3e} on 50 sections")
    assert ok


def test_c03_normal_operator_identity_derived_coefficient(normal_residuals):
    assert float(normal_residuals[:, 1].max()) < 1e-8


# 4 ------------------------------------------------------------------------


def test_c04_indicial_model_and_projector(criterion):
    model = indicial.indicial_roots(indicial.model_operator_op())
    pi_d = indicial.indicial_roots(indicial.pi_d_op())
    pi_d_adj = indicial.indicial_roots(indicial.pi_d_adjoint_op())
    dm = roots_distance(model.roots, [-1, 4])
    dp = roots_distance(pi_d.roots, [-1])
    sym = (indicial.adjoint_symmetric(pi_d.root_list, pi_d_adj.root_list)
           and indicial.adjoint_symmetric(model.root_list, model.root_list))
    ok = dm < 1e-8 and dp < 1e-8 and sym
    criterion(4, "model operator and Pi_C d_C", ok,
              f"model {model.distinct_roots}, Pi d {pi_d.distinct_roots}, adjoint {pi_d_adj.distinct_roots}, "
              f"3 - roots symmetric: {sym}")
    assert ok


@pytest.fixture(scope="module")
def lg_roots():
    return indicial.indicial_roots(indicial.lg_op())


@pytest.mark.xfail(strict=True, reason="L_g also has the trace-direction roots (3 +- sqrt 33)/2")
def test_c04_indicial_lg(criterion, lg_roots):
    d = roots_distance(lg_roots.roots, [-1, 0, 3, 4])
    ok = d < 1e-8
    criterion(4, "L_g roots {-1, 0, 3, 4}", ok, f"found {np.round(lg_roots.distinct_roots, 6).tolist()}")
    assert ok


def test_c04_indicial_lg_complete_set(lg_roots):
    full = [-1, 0, 3, 4, 1.5 - np.sqrt(33) / 2, 1.5 + np.sqrt(33) / 2]
    assert roots_distance(lg_roots.roots, full) < 1e-8
    assert indicial.adjoint_symmetric(lg_roots.root_list, lg_roots.root_list)


# 5 ------------------------------------------------------------------------


def test_c05_r_bound(criterion):
    r = grid.r_bound_check(samples=200, seed=SEED)
    ok = r.n_samples - r.n_skipped >= 200 and r.worst_ratio <= r.bound
    criterion(5, "|Ru|^2 <= 1/2 |du|^2", ok,
              f"max ratio {r.worst_ratio:.4f} <= {r.bound:.4f} over {r.n_samples - r.n_skipped} sections")
    assert ok


# 6 ------------------------------------------------------------------------


def test_c06_coercivity(criterion):
    cfg = grid.GridConfig(n_rho=64, n_y=32, levels=3, seed=SEED)
    t0 = time.perf_counter()
    co = grid.coercivity_probe(cfg)
    elapsed = time.perf_counter() - t0
    ok = (len(co.levels) >= 3 and co.positive and co.stabilized and co.control_near_kernel
          and co.levels[-1][:2] == (64, 32) and elapsed < 300)
    criterion(6, "coercivity of d*d + 4 + R", ok,
              f"sigma_min {np.round(co.sigmas, 4).tolist()}, variation {co.variation:.2%}, "
              f"control ratio {co.control_ratio:.1e}, {elapsed:.1f}s")
    assert ok


# 7 ------------------------------------------------------------------------


def test_c07_bochner_identities(criterion):
    rng = np.random.default_rng(SEED)
    pts = jnp.asarray(INNER_POINTS)
    g_h = lambda x: jnp.eye(4) / x[0] ** 2
    g_flat = lambda x: jnp.eye(4)
    g_pert = lambda x: jnp.diag(jnp.array([1 + 0.1 * (1 + x[1] ** 2 + x[1] * x[2]), 1.0, 1.0, 1.0])) / x[0] ** 2
    coef = jnp.asarray(rng.normal(size=(4, 5)))
    alpha = lambda x: (coef[:, 0] + coef[:, 1:] @ x) * (1 + x[1] * x[2])
    boch = max(bi.bochner_identity_residual(g, alpha, pts) for g in (g_h, g_flat, g_pert))

    def bd(cs, x):
        h = lambda y: (lambda m: m + m.T)(jnp.reshape(cs[:, 0] + cs[:, 1:] @ y, (4, 4)))
        return jnp.max(jnp.abs(bi.bianchi_op(g_h, bi.linearized_einstein(g_h, h))(x)))

    f = jax.jit(jax.vmap(bd, in_axes=(None, 0)))
    worst_bd = max(float(jnp.max(f(jnp.asarray(rng.normal(size=(16, 5))), pts))) for _ in range(20))

    v = lambda x: jnp.array([0.0, -x[2], x[1], 0.0])
    kill = bi.killing_bochner_residual(g_h, v, pts)
    ok = boch < 1e-6 and worst_bd < 1e-4 and kill < 1e-6
    criterion(7, "Bochner identities", ok,
              f"div* Bochner {boch:.1e}, B o D {worst_bd:.1e} (20 h), Killing {kill:.1e}")
    assert ok


# 8 ------------------------------------------------------------------------


def test_c08_gauge_invariance(criterion, h4_field):
    r = gauge_invariance(h4_field, n=20, seed=SEED)
    pairs = h_pairings(h4_field, n_samples=2, seed=SEED)
    worst = float(np.max(r))
    within = all(abs(g.value) <= g.error + 1e-10 for g, _ in pairs)
    resolved = all(abs(c.value) > 10 * c.error for _, c in pairs)
    ok = worst < 1e-6 and within and resolved
    detail = ", ".join(f"h = {g.value:.1e} (err {g.error:.1e})" for g, _ in pairs)
    criterion(8, "linearized-torsion gauge invariance", ok,
              f"max |D_A(d_A u + iota_v F)| {worst:.1e} on 20 pairs; {detail}; "
              f"generic control |h| {[round(abs(c.value), 3) for _, c in pairs]}")
    assert ok


# 9 ------------------------------------------------------------------------


def test_c09_matrix_rigidity(criterion):
    rng = np.random.default_rng(SEED)
    dims = []
    for _ in range(1000):
        X = rng.normal(size=(3, 3))
        dims.append(matrix_rigidity(-(X @ X.T + 0.05 * np.eye(3))))
    control = matrix_rigidity(np.diag([-1.0, 1.0, -2.0]), check=False)
    ok = max(dims) == 0 and control > 0
    criterion(9, "matrix rigidity", ok,
              f"max kernel dimension {max(dims)} over 1000 negative-definite M; indefinite control {control}")
    assert ok


# 10 -----------------------------------------------------------------------


def test_c10_asymptotic_expansion(criterion):
    rep = expansion_check()
    ok = rep.q_slope >= 1 and rep.f_slope >= F_SLOPE_MIN
    criterion(10, "asymptotic expansion", ok,
              f"Q slope {rep.q_slope:.3f}, F leading-term error slope {rep.f_slope:.3f} on r in "
              f"[{rep.r.min():.0e}, {rep.r.max():.0e}]")
    assert ok
