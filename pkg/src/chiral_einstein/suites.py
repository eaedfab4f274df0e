"""Named verification suites: batteries of checks over every module.

Each check returns :class:`~chiral_einstein.report.Check` objects with a
residual, a native tolerance and an anchor naming the identity under test.
Checks that compare against printed formulas known to disagree with the
computation (the normal-operator coefficient and the full indicial set of
``L_g``) are reported as they are, i.e. as failures.
"""

from __future__ import annotations

from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
import sympy as sp

from . import bianchi as bi
from .asymptotic import F_SLOPE_MIN, expansion_check
from .definite import DefiniteField, connection_sign
from .forms import Form, MetricAlgebra, ext_d, hodge_star
from .h4model import frames, grid, indicial, normal
from .models import (hyperbolic_connection, hyperbolic_half_space, perturbed_hyperbolic, poincare_ball, round_sphere,
                     selfdual_connection)
from .report import Check, Report
from .riemann4 import curvature_split, ricci
from .samples import INNER_POINTS, gauge_invariance, h_pairings, one_form
from .so3conn import rotate_connection
from .symcalc import half_space_chart, lambdify, parse_expr, random_polynomial, to_dsl
from .torsionlin import (einstein_check, linearized_torsion, matrix_rigidity, projector_at,
                         star_lemma_check, torsion_difference, eform_to_array, gauge_fixing_operator)

SUITES = ("algebra", "chiral", "linearized", "bianchi", "model")
DEFAULT_GRID = 16


class UnknownSuiteError(ValueError):
    pass


class Ctx:
    def __init__(self, seed: int, tol: float | None, grid_n: int):
        self.seed, self.tol, self.grid_n = seed, tol, grid_n
        self.checks: list[Check] = []

    def add(self, name: str, anchor: str, residual: float, native: float, **meta):
        tol = native if self.tol is None else self.tol
        self.checks.append(Check(name, anchor, float(residual), float(tol), float(native), meta))

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


def _sup(exprs, chart, pts) -> float:
    f = lambdify(list(exprs), chart)
    return float(max(np.max(np.abs(np.asarray(f(p), dtype=float))) for p in pts))


_H4_FIELD = None


def _h4_field() -> DefiniteField:
    global _H4_FIELD
    if _H4_FIELD is None:
        _H4_FIELD = DefiniteField(frames.levi_civita(), INNER_POINTS[0])
    return _H4_FIELD


# ----------------------------------------------------------------------
# algebra


def suite_algebra(c: Ctx):
    ch = half_space_chart()
    rng = c.rng(1)
    bad = 0
    for _ in range(25):
        e = random_polynomial(ch, 3, rng, 5)
        if sp.simplify(parse_expr(to_dsl(e), ch) - e) != 0:
            bad += 1
    c.add("algebra.dsl-round-trip", "parse(print(e)) = e", bad, 0, samples=25)

    f = random_polynomial(ch, 3, rng, 6) * sp.exp(ch.symbols[1]) / ch.symbols[0]
    dd = ext_d(ext_d(Form(0, [f]), ch.symbols), ch.symbols)
    c.add("algebra.d-squared", "d o d = 0", max(abs(sp.simplify(x)) != 0 for x in dd.comps), 0)

    _, e, _ = frames.model_frames()
    alg: MetricAlgebra = frames.model_metric().algebra
    pts = ch.sample(16, c.seed)
    res = _sup([x - y for ei in e for x, y in zip(hodge_star(alg, ei).comps, ei.comps)], ch, pts)
    c.add("algebra.selfdual-frame", "*e_i = e_i on the model frame", res, 1e-12)

    for label, make, k in (("hyperbolic", hyperbolic_half_space, -3), ("ball", poincare_ball, -3),
                           ("sphere", round_sphere, 3)):
        g = make()
        E = ricci(g) - k * g.matrix
        res = _sup(E, g.chart, g.chart.sample(32, c.seed))
        c.add(f"algebra.einstein-{label}", f"Ric = {k} g", res, 1e-8)

    g = hyperbolic_half_space()
    split = curvature_split(g)
    sp_ = split.numeric(g.chart, pts[0])
    res = max(np.max(np.abs(sp_.rm_plus + np.eye(3))), np.max(np.abs(sp_.mixed)), abs(sp_.scalar + 12))
    c.add("algebra.hyperbolic-curvature-split", "Rm+ = -Id, mixed block 0, R = -12", res, 1e-10)

    gp = perturbed_hyperbolic()
    mixed = curvature_split(gp).numeric(gp.chart, gp.chart.sample(1, c.seed)[0]).mixed
    size = float(np.max(np.abs(mixed)))
    c.add("algebra.perturbed-mixed-block-control", "non-Einstein metric has a mixed block",
          1e-6 / max(size, 1e-300), 1.0, mixed_block_size=size)


# ----------------------------------------------------------------------
# chiral


def suite_chiral(c: Ctx):
    rep = einstein_check(hyperbolic_connection(), n=8, seed=c.seed)
    res = max(rep.torsion_residual, rep.ricci_residual, abs(rep.scalar_curvature + 12),
              float(np.max(np.abs(np.asarray(rep.rm_plus_eigs) + 1))))
    if rep.sign != -1:
        res = float("inf")
    c.add("chiral.hyperbolic-pipeline", "torsion-free negative definite: Ric = -3g, R = -12, Rm+ = -Id",
          res, 1e-7, sign=rep.sign, scalar=rep.scalar_curvature, method=rep.method)

    rep = einstein_check(selfdual_connection(round_sphere()), n=8, seed=c.seed)
    res = max(rep.torsion_residual, rep.ricci_residual, abs(rep.scalar_curvature - 12),
              float(np.max(np.abs(np.asarray(rep.rm_plus_eigs) - 1))))
    if rep.sign != 1:
        res = float("inf")
    c.add("chiral.sphere-pipeline", "torsion-free positive definite: Ric = 3g, R = 12, Rm+ = Id",
          res, 1e-7, sign=rep.sign, scalar=rep.scalar_curvature, method=rep.method)

    J = frames.model_J()
    I4 = sp.eye(4)
    q = [J[i] * J[i] + I4 for i in range(3)] + [J[0] * J[1] - J[2], J[1] * J[2] - J[0], J[2] * J[0] - J[1],
                                                J[0] * J[1] * J[2] + I4]
    res = max(float(abs(sp.N(x))) for m in q for x in m)
    c.add("chiral.quaternion-relations", "J_i^2 = -1, J_1 J_2 = J_3, J_1 J_2 J_3 = -1", res, 1e-12)

    A = hyperbolic_connection()
    p = A.chart.sample(1, c.seed)[0]
    s0 = connection_sign(A, p)
    s1 = connection_sign(rotate_connection(A, sp.diag(1, 1, -1)), p)
    c.add("chiral.sign-orientation-invariant", "sign unchanged by reversing E", abs(s0 - s1), 0, sign=s0)

    rng = c.rng(2)
    worst = 0
    for _ in range(1000):
        X = rng.normal(size=(3, 3))
        M = -(X @ X.T + 0.05 * np.eye(3))
        worst = max(worst, matrix_rigidity(M))
    c.add("chiral.matrix-rigidity", "M^-1 S M + S = 0 has only S = 0 for M < 0", worst, 0, samples=1000)
    dim = matrix_rigidity(np.diag([-1.0, 1.0, -2.0]), check=False)
    c.add("chiral.matrix-rigidity-control", "indefinite M admits skew solutions", 1.0 / max(dim, 1e-300), 1.0,
          dimension=dim)

    for s in (1, -1):
        r = expansion_check(bracket_sign=s)
        tag = "" if s == 1 else "-flipped-bracket"
        c.add(f"chiral.asymptotic-Q{tag}", "Q(mu) = Id + O(r) near the boundary", max(0.0, 1 - r.q_slope), 0,
              slope=r.q_slope)
        c.add(f"chiral.asymptotic-F{tag}", "F_i = leading self-dual term + O(r)",
              max(0.0, F_SLOPE_MIN - r.f_slope), 0, slope=r.f_slope)


# ----------------------------------------------------------------------
# linearized


def suite_linearized(c: Ctx):
    field = _h4_field()
    r = gauge_invariance(field, n=20, seed=c.seed)
    c.add("linearized.gauge-invariance", "D_A(d_A u + iota_v F_A) = 0", r.max(), 1e-6, samples=20)

    pairs = h_pairings(field, n_samples=2, seed=c.seed)
    excess = max(max(0.0, abs(g.value) - g.error) for g, _ in pairs)
    c.add("linearized.h-gauge-pairing", "h_A(gauge direction, b) = 0", excess, 1e-10,
          values=[g.value for g, _ in pairs], errors=[g.error for g, _ in pairs])
    ratio = max(ctl.error / abs(ctl.value) for _, ctl in pairs)
    c.add("linearized.h-generic-control", "h_A(generic a, b) is resolved away from 0", ratio, 0.1,
          values=[ctl.value for _, ctl in pairs])

    rng = c.rng(3)
    b = one_form(jnp.asarray(rng.normal(size=(3, 4, 5))))
    worst = 0.0
    for p in INNER_POINTS[:2]:
        lin = eform_to_array(linearized_torsion(field, b, jnp.asarray(p)))
        fd = torsion_difference(field, b, jnp.asarray(p))
        worst = max(worst, float(jnp.max(jnp.abs(lin - fd))) / (1 + float(jnp.max(jnp.abs(lin)))))
    c.add("linearized.torsion-derivative", "D_A b = d/dt torsion(A + t b)", worst, 1e-6)

    Pm = np.array(frames.projector_matrix(), dtype=float)
    worst = 0.0
    for p in INNER_POINTS:
        P = np.asarray(projector_at(field, jnp.asarray(p)))
        worst = max(worst, np.max(np.abs(P - Pm)), np.max(np.abs(P @ P - P)), np.max(np.abs(P - P.T)))
    c.add("linearized.projector", "Pi^2 = Pi = Pi^*, and the model formula", worst, 1e-10)

    a = one_form(jnp.asarray(rng.normal(size=(3, 4, 5))))
    r9, r10 = star_lemma_check(field, a, INNER_POINTS)
    c.add("linearized.star-lemma", "*a = [Sigma ^ a] and d*_A a = -*[Sigma ^ d_A a]", max(r9, r10), 1e-8)


# ----------------------------------------------------------------------
# bianchi


def _poly_field(coef):
    return lambda x: coef[:, 0] + coef[:, 1:] @ x


def suite_bianchi(c: Ctx):
    rng = c.rng(4)
    pts = jnp.asarray(INNER_POINTS)
    g_h = lambda x: jnp.eye(4) / x[0] ** 2
    g_flat = lambda x: jnp.eye(4)
    g_pert = lambda x: jnp.diag(jnp.array([1 + 0.1 * (1 + x[1] ** 2 + x[1] * x[2]), 1.0, 1.0, 1.0])) / x[0] ** 2
    coef = jnp.asarray(rng.normal(size=(4, 5)))
    alpha = lambda x: _poly_field(coef)(x) * (1 + x[1] * x[2])
    for name, g in (("hyperbolic", g_h), ("flat", g_flat), ("perturbed", g_pert)):
        c.add(f"bianchi.bochner-{name}", "Bochner identity for div* on 1-forms",
              bi.bochner_identity_residual(g, alpha, pts), 1e-6)

    def bd(cs, x):
        h = lambda y: (lambda m: m + m.T)(jnp.reshape(cs[:, 0] + cs[:, 1:] @ y, (4, 4)))
        return jnp.max(jnp.abs(bi.bianchi_op(g_h, bi.linearized_einstein(g_h, h))(x)))

    f = jax.jit(jax.vmap(bd, in_axes=(None, 0)))
    worst = 0.0
    for _ in range(20):
        worst = max(worst, float(jnp.max(f(jnp.asarray(rng.normal(size=(16, 5))), pts))))
    c.add("bianchi.bianchi-of-linearization", "B_g o D_g = 0 at an Einstein metric", worst, 1e-4, samples=20)

    v = lambda x: jnp.array([0.0, -x[2], x[1], 0.0])
    c.add("bianchi.killing-bochner", "Killing field identity on the half-space",
          bi.killing_bochner_residual(g_h, v, pts), 1e-6)

    from .quadrature import bump
    cen, rad = jnp.array([1.0, 0, 0, 0]), jnp.array([0.4, 0.5, 0.5, 0.5])
    vw = lambda x: bump(x, cen, rad) * jnp.array([x[1], 1.0, x[0], x[2] * x[3]])
    box = [(0.6, 1.4), (-0.5, 0.5), (-0.5, 0.5), (-0.5, 0.5)]
    ld = bi.lie_divergence_identity(g_h, vw, box, n=8)
    c.add("bianchi.lie-divergence", "int <B(L_v g), v> = 1/2 |L_v g|^2 - |d* v|^2",
          abs(ld.lhs - ld.rhs), max(1e-6, 10 * ld.quad_error), lhs=ld.lhs, rhs=ld.rhs,
          rhs_printed=ld.rhs_printed)


# ----------------------------------------------------------------------
# model


def _roots_distance(found, expected) -> float:
    found = sorted(float(np.real(complex(r))) for r in found)
    expected = sorted(expected)
    if len(found) != len(expected):
        return float("inf")
    return max((abs(a - b) for a, b in zip(found, expected)), default=0.0)


def suite_model(c: Ctx):
    tab = frames.j_table()
    c.add("model.j-table", "J_i(alpha^b) table of the half-space model",
          sum(tab[k] != v for k, v in frames.J_TABLE_PRINTED.items()), 0, entries=12)

    rng = c.rng(5)
    n_sec = 10
    worst_p = worst_d = 0.0
    for _ in range(n_sec):
        u = normal.random_section(rng)
        rp, rd = normal.identity_residuals(u)
        worst_p, worst_d = max(worst_p, rp), max(worst_d, rd)
    c.add("model.normal-operator-printed", "(3/2) d*Pi d u = (d*d + 4) u + R u, R = (1/2) rho curl",
          worst_p, 1e-8, sections=n_sec)
    c.add("model.normal-operator-derived", "(3/2) d*Pi d u = (d*d + 4) u + 2 rho curl u",
          worst_d, 1e-8, sections=n_sec)

    d_model = indicial.indicial_roots(indicial.model_operator_op())
    c.add("model.indicial-model", "indicial roots -1 and 4",
          _roots_distance(d_model.roots, [-1, 4]), 1e-8, roots=str(d_model.polynomial))
    d_pi = indicial.indicial_roots(indicial.pi_d_op())
    c.add("model.indicial-pi-d", "Pi_C d_C has the single indicial root -1",
          _roots_distance(d_pi.roots, [-1]), 1e-8)
    d_adj = indicial.indicial_roots(indicial.pi_d_adjoint_op())
    ok = indicial.adjoint_symmetric(d_pi.root_list, d_adj.root_list) and indicial.adjoint_symmetric(
        d_model.root_list, d_model.root_list)
    c.add("model.indicial-adjoint-symmetry", "roots(D*) = 3 - roots(D)", 0 if ok else 1, 0)
    d_lg = indicial.indicial_roots(indicial.lg_op())
    c.add("model.indicial-lg", "L_g indicial roots -1, 0, 3, 4",
          _roots_distance(d_lg.roots, [-1, 0, 3, 4]), 1e-8, polynomial=str(d_lg.polynomial))
    full = [-1, 0, 3, 4, 1.5 - np.sqrt(33) / 2, 1.5 + np.sqrt(33) / 2]
    c.add("model.indicial-lg-complete", "L_g indicial roots incl. the trace pair (3 +- sqrt 33)/2",
          _roots_distance(d_lg.roots, full), 1e-8)
    num = indicial.numeric_roots(indicial.fit_indicial(indicial.model_indicial_numeric(), 2))
    c.add("model.indicial-numeric-route", "fitted rho^lambda response of the general operator",
          _roots_distance(sorted(set(np.round(num, 6))), [-1, 4]), 1e-6)

    v = indicial.zero_elliptic(indicial.model_operator_op(), n_dirs=200, seed=c.seed)
    ctl = indicial.zero_elliptic(indicial.rho_drho_op(), n_dirs=200, seed=c.seed)
    c.add("model.zero-elliptic", "0-symbol of d*Pi d invertible off zero", 0 if v.elliptic else 1, 0,
          min_ratio=v.min_ratio)
    c.add("model.zero-elliptic-control", "rho d_rho is not 0-elliptic", 0 if not ctl.elliptic else 1, 0)

    n = c.grid_n
    cfg = grid.GridConfig(n_rho=2 * n, n_y=n, seed=c.seed)
    rb = grid.r_bound_check(samples=50, seed=c.seed, config=cfg)
    c.add("model.r-bound", "|Ru|^2 <= 1/2 |du|^2", max(0.0, rb.worst_ratio - rb.bound), 0,
          worst_ratio=rb.worst_ratio, h=rb.h)
    co = grid.coercivity_probe(grid.GridConfig(n_rho=4 * n, n_y=2 * n, seed=c.seed))
    c.add("model.coercivity", "d*d + 4 + R bounded below, stable under refinement",
          0.0 if (co.positive and co.stabilized) else 1.0, 0, sigmas=co.sigmas, variation=co.variation)
    c.add("model.coercivity-control", "d*d - 4 has a near-kernel", co.control_ratio, 0.05)
    t = grid.t_grid(cfg.rho_min, cfg.rho_max, cfg.n_rho)
    worst = 0.0
    for _ in range(10):
        s = grid.random_section(rng, t, cfg.n_y, cfg.y_length)
        for coeff in (grid.R_COEFFS["printed"], grid.R_COEFFS["derived"]):
            ch = grid.chain_check(s, coeff)
            worst = max(worst, max(0.0, ch.rhs - ch.lhs) / ch.rhs)
    c.add("model.chain-inequality", "9/4 |Du|^2 >= 1/2 |d*du|^2 + 3 |du|^2 + 16 |u|^2", worst, 1e-9)

    field = _h4_field()
    x0 = jnp.asarray(INNER_POINTS[1])
    ch = frames.model_chart()
    rho, y1, y2, y3 = ch.symbols
    us = [rho**2 * y1, rho * y2 + y3**2, rho**3]
    lhs = normal.normal_operator(us)
    sym = np.array(lambdify(lhs, ch)(np.asarray(INNER_POINTS[1])), dtype=float)
    fs = [sp.lambdify(ch.symbols, e, "jax") for e in us]
    from .so3conn import EForm
    u = lambda x: EForm.scalars([f(*x) + 0.0 * x[0] for f in fs])
    out = gauge_fixing_operator(field, u)(x0)
    gen = 1.5 * np.array([float(cc.comps[0]) for cc in out.comps])
    c.add("model.general-operator-match", "general d*_A Pi_A d_A on the model equals the model operator",
          float(np.max(np.abs(gen - sym))), 1e-8)


RUNNERS: dict[str, Callable[[Ctx], None]] = {
    "algebra": suite_algebra,
    "chiral": suite_chiral,
    "linearized": suite_linearized,
    "bianchi": suite_bianchi,
    "model": suite_model,
}


def run_suite(name: str, seed: int = 0, tol: float | None = None, grid_n: int = DEFAULT_GRID) -> Report:
    if name != "all" and name not in RUNNERS:
        raise UnknownSuiteError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    ctx = Ctx(seed, tol, grid_n)
    for s in (SUITES if name == "all" else (name,)):
        RUNNERS[s](ctx)
    return Report(name, seed, tol, ctx.checks, {"grid": grid_n})
