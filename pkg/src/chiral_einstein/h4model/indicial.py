"""Indicial polynomials, indicial roots and 0-symbols of operators on the half-space.

An operator is described by a :class:`ZeroOperator`: a callable acting on
lists of scalar frame components (functions of ``rho, y``).  Substituting
``rho^s exp(eta . y) e_k`` and putting ``eta = t / rho`` turns an operator built
from ``rho d_rho`` and ``rho d_y`` into a matrix ``P(s, t)`` that is polynomial in
``(s, t)`` with coefficients smooth in ``(rho, y)``:

* the indicial matrix is ``I(lambda) = P(lambda, 0)`` at ``rho = 0``;
* the 0-symbol is the top-degree part of ``P`` at ``(i xi, i eta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, reduce
from itertools import combinations
from typing import Callable

import numpy as np
import sympy as sp
from scipy.linalg import eig
from scipy.optimize import minimize_scalar

from ..bianchi import sym_gauge_fixed_operator
from ..riemann4 import laplacian_scalar
from ..so3conn import EForm
from ..forms import Form
from .frames import model_chart, model_metric, model_projector, pi_d
from .normal import R_COEFF_PRINTED, codiff_C, normal_operator, normal_rhs

LAM = sp.Symbol("lambda")
S = sp.Symbol("s")
T = sp.symbols("t1:4")
ROOT_TOL = 1e-8
SYM_INDEX = [(a, b) for a in range(4) for b in range(a, 4)]


class NotZeroOperatorError(ValueError):
    """Coefficients are not smooth at rho = 0 in (rho d_rho, rho d_y) form."""


@dataclass(frozen=True, eq=False)
class ZeroOperator:
    name: str
    apply: Callable[[list], list]
    n_in: int
    n_out: int
    order: int
    adjoint: str | None = None


@dataclass
class IndicialData:
    matrix: sp.Matrix
    polynomial: sp.Expr
    roots: dict = field(default_factory=dict)
    residual: float = 0.0

    @property
    def root_list(self) -> list[float]:
        """Roots repeated by multiplicity, ascending."""
        out = []
        for r, m in self.roots.items():
            out += [complex(r)] * m
        return sorted(out, key=lambda z: (z.real, z.imag))

    @property
    def distinct_roots(self) -> list[float]:
        return sorted(float(sp.re(r)) for r in self.roots)


# ----------------------------------------------------------------------
# symbolic route


def _coords():
    return model_chart().symbols


def _column(op: ZeroOperator, k: int, s, with_eta: bool) -> list:
    rho, *y = _coords()
    base = rho**s
    if with_eta:
        eta = sp.symbols("eta1:4")
        base = base * sp.exp(sum(e * yy for e, yy in zip(eta, y)))
    u = [base if j == k else sp.Integer(0) for j in range(op.n_in)]
    out = op.apply(u)
    # the half-space chart only knows rho is real; rho > 0 removes Abs(rho)
    rp = sp.Symbol("rho_pos", positive=True)
    col = []
    for v in out:
        w = sp.powsimp(sp.expand((sp.sympify(v) / base).subs(rho, rp)), force=True)
        if with_eta:
            w = w.subs({e: t / rp for e, t in zip(eta, T)})
        col.append(sp.simplify(w).subs(rp, rho))
    return col


def symbol_polynomial(op: ZeroOperator) -> sp.Matrix:
    """``P(s, t)`` with rows = outputs, columns = inputs."""
    cols = [_column(op, k, S, True) for k in range(op.n_in)]
    P = sp.Matrix(op.n_out, op.n_in, lambda i, k: cols[k][i])
    for e in P:
        if not e.is_polynomial(S, *T):
            raise NotZeroOperatorError(f"{op.name}: symbol is not polynomial in (s, t)")
    return P


def _at_boundary(e) -> sp.Expr:
    rho = _coords()[0]
    e = sp.cancel(sp.together(e))
    v = e.subs(rho, 0)
    if v.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise NotZeroOperatorError("coefficient is singular at rho = 0")
    return sp.expand(v)


@lru_cache(maxsize=None)
def indicial_matrix(op: ZeroOperator) -> sp.Matrix:
    cols = [_column(op, k, LAM, False) for k in range(op.n_in)]
    M = sp.Matrix(op.n_out, op.n_in, lambda i, k: _at_boundary(cols[k][i]))
    if M.free_symbols - {LAM}:
        raise NotZeroOperatorError(f"{op.name}: indicial matrix depends on {M.free_symbols - {LAM}}")
    return M


def indicial_polynomial(M: sp.Matrix) -> sp.Expr:
    """``det I`` when square, else the gcd of the maximal minors (rank-drop locus)."""
    n_out, n_in = M.shape
    if n_out == n_in:
        return sp.factor(M.det(method="berkowitz"))
    m = min(n_out, n_in)
    minors = []
    for rows in combinations(range(n_out), m) if n_out > n_in else [tuple(range(n_out))]:
        for cols in combinations(range(n_in), m) if n_in > n_out else [tuple(range(n_in))]:
            d = sp.expand(M.extract(list(rows), list(cols)).det(method="berkowitz"))
            if d != 0:
                minors.append(sp.Poly(d, LAM))
    if not minors:
        return sp.Integer(0)
    g = reduce(sp.gcd, minors)
    return sp.factor(g.as_expr())


def indicial_roots(op: ZeroOperator) -> IndicialData:
    M = indicial_matrix(op)
    p = indicial_polynomial(M)
    if p == 0:
        raise NotZeroOperatorError(f"{op.name}: indicial matrix is rank deficient for every lambda")
    poly = sp.Poly(p, LAM)
    roots = sp.roots(poly)
    if sum(roots.values()) != poly.degree():
        roots = {}
        for r in poly.nroots():
            roots[r] = roots.get(r, 0) + 1
    f = sp.lambdify(LAM, M, "numpy")
    residual = 0.0
    for r in roots:
        A = np.asarray(f(complex(r)), dtype=complex)
        sv = np.linalg.svd(A, compute_uv=False)
        residual = max(residual, float(sv[-1] / max(1.0, sv[0])))
    return IndicialData(M, p, dict(roots), residual)


def adjoint_symmetric(roots_d, roots_adj, n: int = 3, tol: float = ROOT_TOL) -> bool:
    """``roots(D*) = n - roots(D)`` as multisets."""
    a = sorted(n - complex(r).real for r in roots_d)
    b = sorted(complex(r).real for r in roots_adj)
    return len(a) == len(b) and all(abs(x - y) < tol for x, y in zip(a, b))


# ----------------------------------------------------------------------
# numeric route: fit a polynomial to lambda -> rho^-lambda D(rho^lambda e_k) at rho = 1


def fit_indicial(fn: Callable[[float], np.ndarray], order: int, n_samples: int | None = None,
                 span: tuple[float, float] = (-2.0, 5.0)) -> np.ndarray:
    """Coefficients ``C[p]`` with ``I(lambda) ~ sum_p C[p] lambda^p`` by least squares."""
    n_samples = n_samples or 2 * order + 3
    lams = np.linspace(*span, n_samples)
    vals = np.stack([np.asarray(fn(l), dtype=float) for l in lams])
    V = np.vander(lams, order + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, vals.reshape(n_samples, -1), rcond=None)
    return coef.reshape((order + 1,) + vals.shape[1:])


def polynomial_eigenvalues(coef: np.ndarray) -> np.ndarray:
    """Eigenvalues of the square matrix polynomial ``sum_p C[p] lambda^p`` (block companion pencil)."""
    order, n = coef.shape[0] - 1, coef.shape[1]
    A = np.eye(order * n)
    B = np.zeros((order * n, order * n))
    B[: (order - 1) * n, n:] = np.eye((order - 1) * n)
    for p in range(order):
        B[(order - 1) * n:, p * n:(p + 1) * n] = -coef[p]
    A[(order - 1) * n:, (order - 1) * n:] = coef[order]
    w = eig(B, A, right=False)
    return w[np.isfinite(w)]


def numeric_roots(coef: np.ndarray, span: tuple[float, float] = (-6.0, 9.0), tol: float = 1e-5) -> list[float]:
    """Real lambda where the fitted ``I(lambda)`` loses rank."""
    order = coef.shape[0] - 1
    I = lambda l: np.tensordot(l ** np.arange(order + 1), coef, axes=1)
    smin = lambda l: np.linalg.svd(I(l), compute_uv=False)[-1]
    scale = lambda l: max(1.0, np.linalg.svd(I(l), compute_uv=False)[0])
    n_out, n_in = coef.shape[1:]
    if n_out == n_in:
        cands = [r.real for r in polynomial_eigenvalues(coef) if abs(r.imag) < 1e-6]
    else:
        grid = np.linspace(*span, 601)
        vals = np.array([smin(l) for l in grid])
        cands = []
        for j in range(1, len(grid) - 1):
            if vals[j] <= vals[j - 1] and vals[j] <= vals[j + 1]:
                res = minimize_scalar(smin, bounds=(grid[j - 1], grid[j + 1]), method="bounded",
                                      options={"xatol": 1e-12})
                cands.append(res.x)
    roots = sorted(c for c in cands if smin(c) < tol * scale(c))
    return roots


# ----------------------------------------------------------------------
# 0-symbol


def zero_symbol_function(op: ZeroOperator) -> Callable:
    """Callable ``(xi, eta, point) -> complex matrix``: principal 0-symbol."""
    P = symbol_polynomial(op)
    tau, xi = sp.symbols("tau xi")
    eta = sp.symbols("eta1:4")
    scaled = P.subs({S: tau * sp.I * xi, **{t: tau * sp.I * e for t, e in zip(T, eta)}}, simultaneous=True)
    top = scaled.applyfunc(lambda e: sp.expand(e).coeff(tau, op.order))
    f = sp.lambdify((xi, eta, _coords()), top, "numpy")
    return lambda x, e, point: np.asarray(f(x, tuple(e), tuple(point)), dtype=complex)


def zero_symbol(op: ZeroOperator, xi: float, eta, point=(0.7, 0.1, -0.2, 0.3)) -> np.ndarray:
    return zero_symbol_function(op)(xi, eta, point)


@dataclass
class EllipticityVerdict:
    elliptic: bool
    min_ratio: float
    n_dirs: int


def zero_elliptic(op: ZeroOperator, n_dirs: int = 1000, seed: int = 0, points=None,
                  tol: float = 1e-8) -> EllipticityVerdict:
    """Sample ``(xi, eta)`` on the unit sphere (plus the axis directions) and test injectivity."""
    f = zero_symbol_function(op)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, 4))
    dirs = np.vstack([np.eye(4), dirs / np.linalg.norm(dirs, axis=1, keepdims=True)])
    points = points if points is not None else [(0.7, 0.1, -0.2, 0.3), (1e-3, 0.0, 0.0, 0.0), (5.0, 1.0, 2.0, -1.0)]
    worst = np.inf
    for p in points:
        for d in dirs:
            sv = np.linalg.svd(np.atleast_2d(f(d[0], d[1:], p)), compute_uv=False)
            worst = min(worst, sv[-1] / max(sv[0], 1e-300) if sv[0] > 0 else 0.0)
    return EllipticityVerdict(bool(worst > tol), float(worst), len(dirs))


# ----------------------------------------------------------------------
# descriptors for the model operators

def _frame_1form(a: EForm) -> list:
    rho = _coords()[0]
    return [sp.simplify(rho * c) for f in a.comps for c in f.comps]


def _from_frame_1form(v: list) -> EForm:
    rho = _coords()[0]
    return EForm([Form(1, [sp.sympify(v[4 * i + b]) / rho for b in range(4)]) for i in range(3)])


def scalar_laplacian_op(shift=0) -> ZeroOperator:
    g = model_metric()
    return ZeroOperator(f"d*d + {shift}", lambda u: [laplacian_scalar(g, u[0]) + shift * u[0]], 1, 1, 2,
                        adjoint="self")


def model_operator_op() -> ZeroOperator:
    """``(3/2) d*_C Pi_C d_C``."""
    return ZeroOperator("(3/2) d*_C Pi_C d_C", normal_operator, 3, 3, 2, adjoint="self")


def normal_rhs_op(coeff=R_COEFF_PRINTED) -> ZeroOperator:
    return ZeroOperator(f"d*d + 4 + R[{coeff}]", lambda u: normal_rhs(u, coeff), 3, 3, 2, adjoint="self")


def pi_d_op() -> ZeroOperator:
    return ZeroOperator("Pi_C d_C", lambda u: _frame_1form(pi_d(u)), 3, 12, 1, adjoint="d*_C Pi_C")


def pi_d_adjoint_op() -> ZeroOperator:
    def apply(v):
        out = codiff_C(model_projector(_from_frame_1form(v)))
        return [c.comps[0] for c in out.comps]

    return ZeroOperator("d*_C Pi_C", apply, 12, 3, 1, adjoint="Pi_C d_C")


def lg_op() -> ZeroOperator:
    """Gauge-fixed linearized Einstein operator on symmetric 2-tensors (10 frame components)."""
    g = model_metric()
    rho = _coords()[0]

    def apply(v):
        h = sp.zeros(4, 4)
        for (a, b), c in zip(SYM_INDEX, v):
            h[a, b] = h[b, a] = sp.sympify(c) / rho**2
        L = sym_gauge_fixed_operator(g, h)
        return [sp.simplify(rho**2 * L[a, b]) for a, b in SYM_INDEX]

    return ZeroOperator("L_g", apply, 10, 10, 2, adjoint="self")


def rho_drho_op() -> ZeroOperator:
    """Degenerate control: ``rho d_rho`` alone."""
    rho = _coords()[0]
    return ZeroOperator("rho d_rho", lambda u: [rho * sp.diff(u[0], rho)], 1, 1, 1)


# ----------------------------------------------------------------------
# numeric operators at rho = 1 for the fitting route

NUMERIC_POINT = (1.0, 0.3, -0.2, 0.1)


def model_indicial_numeric(point=NUMERIC_POINT) -> Callable[[float], np.ndarray]:
    """``lambda -> (3/2) d*_A Pi_A d_A (rho^lambda e_k)`` at ``rho = 1`` through the
    general-connection code path (DefiniteField of the model connection)."""
    import jax
    import jax.numpy as jnp

    from ..definite import DefiniteField
    from ..torsionlin import gauge_fixing_operator
    from .frames import levi_civita

    field = DefiniteField(levi_civita(), point)
    x0 = jnp.asarray(point)

    @jax.jit
    def cols(lam):
        out = []
        for k in range(3):
            e = [0.0, 0.0, 0.0]
            u = lambda x, k=k: EForm.scalars([x[0] ** lam if j == k else 0.0 * x[0] for j in range(3)])
            v = gauge_fixing_operator(field, u)(x0)
            out.append(jnp.stack([c.comps[0] for c in v.comps]))
        return 1.5 * jnp.stack(out, axis=1)

    return lambda lam: np.asarray(cols(float(lam)))


def lg_indicial_numeric(point=NUMERIC_POINT) -> Callable[[float], np.ndarray]:
    """``lambda -> rho^2 L_g(rho^(lambda-2) E_ab)`` at ``rho = 1`` via the finite-difference
    linearization of Ricci."""
    import jax.numpy as jnp

    from ..bianchi import gauge_fixed_operator

    gfun = lambda x: jnp.eye(4) / x[0] ** 2
    x0 = jnp.asarray(point)

    def fn(lam):
        cols = []
        for a, b in SYM_INDEX:
            E = np.zeros((4, 4))
            E[a, b] = E[b, a] = 1.0
            E = jnp.asarray(E)
            h = lambda x, E=E: x[0] ** (lam - 2) * E
            L = np.asarray(gauge_fixed_operator(gfun, h)(x0))
            cols.append([L[c, d] for c, d in SYM_INDEX])
        return np.array(cols).T

    return fn
