"""Scalar expressions in chart coordinates.

Expressions are plain :mod:`sympy` trees restricted to the operations of the
text DSL (rationals, coordinates, ``+ - * / ^``, ``sqrt exp log sin cos``).
This module owns the DSL parser and printer, exact differentiation,
best-effort simplification, numeric evaluation and the zero test used to
decide identities.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy as sp

ScalarExpr = sp.Expr

FUNCTIONS = {"sqrt": sp.sqrt, "exp": sp.exp, "log": sp.log, "sin": sp.sin, "cos": sp.cos}

ZERO_TOL = 1e-10
MIN_ZERO_SAMPLES = 64
SINGULAR_DENOM = 1e-6


class DslError(ValueError):
    """Base class for DSL parse errors; ``column`` is 1-based."""

    def __init__(self, message: str, column: int, line: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.column = column
        self.line = line


class DslSyntaxError(DslError):
    pass


class DslNameError(DslError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Chart:
    """Four named coordinates with an optional boundary-defining coordinate.

    ``box`` gives the sampling interval of each coordinate; ``domain`` is an
    extra predicate on sample points (array of shape (n, 4) -> bool mask).
    """

    names: tuple[str, str, str, str]
    boundary: str | None = None
    box: tuple[tuple[float, float], ...] = ((0.5, 2.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    domain: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.names) != 4 or len(set(self.names)) != 4:
            raise ValueError(f"chart needs four distinct coordinate names, got {self.names}")
        for n in self.names:
            if not re.fullmatch(r"[a-zA-Z][a-zA-Z0-9_]*", n) or n in FUNCTIONS:
                raise ValueError(f"invalid coordinate name {n!r}")
        if self.boundary is not None and self.boundary not in self.names:
            raise ValueError(f"boundary coordinate {self.boundary!r} is not a chart coordinate")
        if len(self.box) != 4 or any(lo >= hi for lo, hi in self.box):
            raise ValueError("box needs four increasing intervals")

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(n, real=True) for n in self.names)

    def symbol(self, name: str) -> sp.Symbol:
        if name not in self.names:
            raise KeyError(f"{name!r} is not a coordinate of this chart")
        return sp.Symbol(name, real=True)

    def index(self, coord) -> int:
        name = coord if isinstance(coord, str) else coord.name
        return self.names.index(name)

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """Uniform points in the box satisfying the domain predicate."""
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        out = []
        have = 0
        for _ in range(1000):
            pts = lo + (hi - lo) * rng.random((max(n, 16), 4))
            if self.domain is not None:
                pts = pts[np.asarray(self.domain(pts), dtype=bool)]
            out.append(pts)
            have += len(pts)
            if have >= n:
                break
        pts = np.concatenate(out)[:n]
        if len(pts) < n:
            raise SamplingError("domain predicate rejects the sampling box")
        return pts


def half_space_chart(box=None) -> Chart:
    box = box or ((0.5, 2.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    return Chart(("rho", "y1", "y2", "y3"), boundary="rho", box=box, domain=lambda p: p[:, 0] > 0)


def cartesian_chart(names=("x1", "x2", "x3", "x4"), box=None) -> Chart:
    box = box or ((-0.5, 0.5),) * 4
    return Chart(tuple(names), box=box)


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([a-zA-Z][a-zA-Z0-9_]*)|(.))")


@dataclass
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    col: int


def _tokenize(text: str, line: int = 1, col0: int = 1) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        num, ident, other = m.groups()
        if num is not None:
            toks.append(_Tok("num", num, start + col0))
        elif ident is not None:
            toks.append(_Tok("ident", ident, start + col0))
        elif other is not None:
            if other not in "+-*/^()":
                raise DslSyntaxError(f"unexpected character {other!r}", start + col0, line)
            toks.append(_Tok("op", other, start + col0))
        pos = m.end()
    toks.append(_Tok("end", "", len(text) + col0))
    return toks


class _Parser:
    def __init__(self, text: str, names: dict[str, sp.Symbol], line: int, col0: int):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.names = names
        self.line = line

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, tok: _Tok, what: str = None):
        shown = tok.text or "end of input"
        raise DslSyntaxError(what or f"syntax error: unexpected {shown!r}", tok.col, self.line)

    def expect(self, text: str):
        t = self.take()
        if t.text != text:
            self.fail(t, f"syntax error: expected {text!r}, got {t.text or 'end of input'!r}")

    def parse(self) -> sp.Expr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(self.peek())
        return e

    def expr(self):
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self):
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            r = self.unary()
            e = e * r if op == "*" else e / r
        return e

    def unary(self):
        if self.peek().text == "-":
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            tok = self.take()
            exponent = self.unary()
            if exponent.free_symbols:
                raise DslSyntaxError("exponent must be a constant", tok.col, self.line)
            return sp.Pow(base, exponent)
        return base

    def atom(self):
        t = self.take()
        if t.kind == "num":
            return sp.Rational(Fraction(t.text))
        if t.kind == "ident":
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[t.text](arg)
            if t.text not in self.names:
                raise DslNameError(f"unknown symbol {t.text!r}", t.col, self.line)
            return self.names[t.text]
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(t)


def parse_expr(text: str, chart: Chart, *, line: int = 1, column: int = 1) -> ScalarExpr:
    """Parse a DSL expression over the chart's coordinates.

    >>> parse_expr("rho^(-2)", half_space_chart()).subs("rho", 2)
    1/4
    """
    names = {n: s for n, s in zip(chart.names, chart.symbols)}
    return _Parser(text, names, line, column).parse()


# --------------------------------------------------------------------------
# printer


def _fmt_rational(r: sp.Rational) -> str:
    if r.q == 1:
        return str(r.p)
    return f"{r.p}/{r.q}"


def _fmt_float(x: float) -> str:
    s = np.format_float_positional(float(x), unique=True, trim="0")
    return s if "." in s else s + ".0"


def to_dsl(e: ScalarExpr) -> str:
    """Print an expression in DSL syntax; ``parse_expr(to_dsl(e))`` evaluates like ``e``."""
    return _print(sp.sympify(e), 0)


# precedence: 0 sum, 1 product, 2 unary, 3 power, 4 atom
def _wrap(s: str, prec: int, ctx: int) -> str:
    return f"({s})" if prec < ctx else s


def _print(e, ctx: int) -> str:
    if e is sp.E:
        return "exp(1)"
    if isinstance(e, sp.Integer):
        s = str(e.p)
        return _wrap(s, 2, ctx) if e.p < 0 else s
    if isinstance(e, sp.Rational):
        s = _fmt_rational(e)
        return _wrap(s, 1 if e.p > 0 else 0, ctx)
    if isinstance(e, sp.Float):
        s = _fmt_float(e)
        return _wrap(s, 2, ctx) if float(e) < 0 else s
    if isinstance(e, sp.Symbol):
        return e.name
    if isinstance(e, sp.Add):
        terms = list(e.as_ordered_terms())
        out = _print(terms[0], 0)
        for t in terms[1:]:
            c, rest = t.as_coeff_Mul()
            if c.is_negative:
                out += " - " + _print(-t, 1)
            else:
                out += " + " + _print(t, 1)
        return _wrap(out, 0, ctx)
    if isinstance(e, sp.Mul):
        c, rest = e.as_coeff_Mul()
        if c.is_negative:
            return _wrap("-" + _print(-e, 2), 0, ctx)
        num, den = [], []
        for f in e.as_ordered_factors():
            if isinstance(f, sp.Pow) and f.exp.is_Rational and f.exp.is_negative:
                den.append(sp.Pow(f.base, -f.exp))
            elif isinstance(f, sp.Rational) and f.q != 1:
                if f.p != 1:
                    num.append(sp.Integer(f.p))
                den.append(sp.Integer(f.q))
            else:
                num.append(f)
        s = " * ".join(_print(f, 2) for f in num) if num else "1"
        for d in den:
            s += " / " + _print(d, 3)
        return _wrap(s, 1, ctx)
    if isinstance(e, sp.Pow):
        b, x = e.base, e.exp
        if x == sp.Rational(1, 2):
            return f"sqrt({_print(b, 0)})"
        if x == -1:
            return _wrap("1 / " + _print(b, 3), 1, ctx)
        if x == sp.Rational(-1, 2):
            return _wrap(f"1 / sqrt({_print(b, 0)})", 1, ctx)
        if b is sp.E:
            return f"exp({_print(x, 0)})"
        return _wrap(f"{_print(b, 4)}^({_print(x, 0)})", 3, ctx)
    for name, fn in (("exp", sp.exp), ("log", sp.log), ("sin", sp.sin), ("cos", sp.cos)):
        if isinstance(e, fn):
            return f"{name}({_print(e.args[0], 0)})"
    raise ValueError(f"expression node {type(e).__name__} has no DSL form: {e}")


# --------------------------------------------------------------------------
# calculus and simplification


def partial(e: ScalarExpr, coord, chart: Chart | None = None) -> ScalarExpr:
    """Exact partial derivative along a chart coordinate (name or symbol)."""
    if isinstance(coord, str):
        if chart is None:
            coord = sp.Symbol(coord, real=True)
        else:
            coord = chart.symbol(coord)
    elif chart is not None and coord.name not in chart.names:
        raise KeyError(f"{coord} is not a coordinate of this chart")
    return sp.diff(e, coord)


def _is_rational_function(e) -> bool:
    return not e.atoms(sp.Function) and all(
        p.exp.is_Integer for p in e.atoms(sp.Pow)
    )


def simplify(e: ScalarExpr) -> ScalarExpr:
    """Best-effort simplification: rational cancellation, power merging, trig identities."""
    e = sp.sympify(e)
    if e.is_Number or e.is_Symbol:
        return e
    if _is_rational_function(e):
        return sp.cancel(e)
    out = sp.powsimp(sp.expand(e))
    if out.atoms(sp.sin, sp.cos):
        out = sp.trigsimp(out)
    return out


def lambdify(exprs, chart: Chart, modules="numpy"):
    """Vectorised evaluator ``f(points) -> values`` for points of shape (n, 4)."""
    syms = chart.symbols
    f = sp.lambdify(syms, exprs, modules=modules)

    def call(points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return f(*pts)
        return f(*pts.T)

    return call


def evaluate(e: ScalarExpr, chart: Chart, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    f = sp.lambdify(chart.symbols, e, modules="numpy")
    with np.errstate(all="ignore"):
        val = np.asarray(f(*pts.T), dtype=float)
    return np.broadcast_to(val, (len(pts),)).copy()


def _singular_parts(e) -> list[sp.Expr]:
    parts = []
    for p in e.atoms(sp.Pow):
        if p.exp.is_negative or (p.exp.is_Rational and not p.exp.is_Integer):
            parts.append(p.base)
    for lg in e.atoms(sp.log):
        parts.append(lg.args[0])
    return parts


def sample_regular(exprs: Sequence[sp.Expr], chart: Chart, n: int, seed: int = 0) -> np.ndarray:
    """Sample points where no denominator / root / log argument is near zero."""
    parts = []
    for e in exprs:
        parts.extend(_singular_parts(sp.sympify(e)))
    if not parts:
        return chart.sample(n, seed)
    f = sp.lambdify(chart.symbols, parts, modules="numpy")
    good = []
    have = 0
    for k in range(200):
        pts = chart.sample(max(2 * n, 32), seed + 7919 * k)
        with np.errstate(all="ignore"):
            vals = [np.broadcast_to(np.asarray(v, dtype=float), (len(pts),)) for v in f(*pts.T)]
        ok = np.ones(len(pts), dtype=bool)
        for v in vals:
            ok &= np.isfinite(v) & (np.abs(v) >= SINGULAR_DENOM)
        good.append(pts[ok])
        have += ok.sum()
        if have >= n:
            return np.concatenate(good)[:n]
    raise SamplingError("could not find enough regular sample points")


@dataclass(frozen=True)
class ZeroTest:
    is_zero: bool
    method: str  # "symbolic" or "sampled"
    max_residual: float = 0.0
    n_samples: int = 0
    warning: str | None = None

    def __bool__(self):
        return self.is_zero


def _scale(e, f_terms, pts) -> np.ndarray:
    if f_terms is None:
        return np.ones(len(pts))
    with np.errstate(all="ignore"):
        vals = [np.abs(np.broadcast_to(np.asarray(v, dtype=float), (len(pts),))) for v in f_terms(*pts.T)]
    return np.maximum(1.0, np.max(vals, axis=0))


def is_identically_zero(e: ScalarExpr, chart: Chart, *, n_samples: int = MIN_ZERO_SAMPLES,
                        tol: float = ZERO_TOL, seed: int = 0) -> ZeroTest:
    """Decide ``e == 0`` symbolically, falling back to relative sampling.

    The sampled verdict compares ``|e|`` against ``tol`` times the largest
    magnitude of the top-level terms of ``e`` (at least 1).
    """
    e = sp.sympify(e)
    if e == 0:
        return ZeroTest(True, "symbolic")
    try:
        s = simplify(e)
    except Exception:  # pragma: no cover - sympy internal failures
        s = e
    if s == 0:
        return ZeroTest(True, "symbolic")
    n = max(n_samples, MIN_ZERO_SAMPLES)
    pts = sample_regular([e], chart, n, seed)
    val = evaluate(e, chart, pts)
    if not np.all(np.isfinite(val)):
        raise SamplingError("expression not finite at regular sample points")
    terms = list(sp.Add.make_args(sp.expand(e))) if isinstance(e, sp.Add) else None
    f_terms = sp.lambdify(chart.symbols, terms, modules="numpy") if terms else None
    rel = np.abs(val) / _scale(e, f_terms, pts)
    worst = float(rel.max())
    ok = worst < tol
    msg = None
    if ok:
        msg = "symbolic simplification did not reach 0; identity accepted by sampling"
        warnings.warn(msg, stacklevel=2)
    return ZeroTest(ok, "sampled", worst, n, msg)


def free_coords(e: ScalarExpr) -> set[str]:
    return {s.name for s in sp.sympify(e).free_symbols}


def as_expr(x, chart: Chart | None = None) -> ScalarExpr:
    if isinstance(x, str):
        if chart is None:
            raise ValueError("parsing a string needs a chart")
        return parse_expr(x, chart)
    return sp.nsimplify(x) if isinstance(x, float) else sp.sympify(x)


def exprs_equal(a, b, chart: Chart, **kw) -> ZeroTest:
    return is_identically_zero(sp.sympify(a) - sp.sympify(b), chart, **kw)


def random_polynomial(chart: Chart, degree: int, rng: np.random.Generator,
                      n_terms: int = 6, denom: int = 8) -> ScalarExpr:
    """Random polynomial with small rational coefficients."""
    syms = chart.symbols
    e = sp.Integer(0)
    for _ in range(n_terms):
        powers = rng.integers(0, degree + 1, size=4)
        while powers.sum() > degree:
            powers[rng.integers(0, 4)] -= 1
        coef = sp.Rational(int(rng.integers(-denom, denom + 1)), denom)
        term = coef
        for s, p in zip(syms, powers):
            term *= s ** int(p)
        e += term
    return e


def iter_exprs(obj) -> Iterable[sp.Expr]:
    if isinstance(obj, sp.Basic):
        yield obj
    elif isinstance(obj, (list, tuple)):
        for o in obj:
            yield from iter_exprs(o)
    elif hasattr(obj, "tolist"):
        yield from iter_exprs(obj.tolist())
