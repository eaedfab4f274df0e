"""Scene files: a chart plus named metrics, connections and sections.

Grammar (statements end with ``;``, ``#`` starts a comment)::

    chart rho y1 y2 y3;
    boundary rho;
    box rho 0.5 2;
    metric g = [[rho^-2, 0, 0, 0], [0, rho^-2, 0, 0], ...];
    connection A = (a1: [0, 0, 0, 1/rho], a2: [...], a3: [...]);
    section u = (rho, 0, y1);

Connection entries are the ``dx^a`` components of ``A^1, A^2, A^3``.  Every
error carries the line and column of the offending text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import sympy as sp

from .forms import Form
from .riemann4 import Metric
from .so3conn import So3Connection
from .symcalc import Chart, DslError, DslSyntaxError, parse_expr

DEFAULT_BOX = (0.5, 2.0)


class SceneError(DslError):
    pass


@dataclass
class _Span:
    text: str
    line: int
    col: int

    def at(self, offset: int) -> tuple[int, int]:
        """Line and column of ``text[offset]``."""
        before = self.text[:offset]
        nl = before.count("\n")
        if nl:
            return self.line + nl, offset - before.rfind("\n")
        return self.line, self.col + offset


def _statements(src: str) -> list[_Span]:
    out, depth, start = [], 0, 0
    line, col = 1, 1
    s_line, s_col = 1, 1
    clean = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), src)
    for i, ch in enumerate(clean):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise SceneError(f"unbalanced {ch!r}", col, line)
        elif ch == ";" and depth == 0:
            out.append(_Span(clean[start:i], s_line, s_col))
            start = i + 1
            s_line, s_col = (line, col + 1)
        if ch == "\n":
            line, col = line + 1, 1
            if start == i + 1:
                s_line, s_col = line, 1
        else:
            col += 1
    tail = clean[start:]
    if tail.strip():
        sp_ = _Span(tail, s_line, s_col)
        l, c = sp_.at(len(tail) - len(tail.lstrip()))
        raise SceneError("statement is missing its terminating ';'", c, l)
    return [s for s in out if s.text.strip()]


def _split_top(span: _Span, start: int, end: int) -> list[tuple[int, int]]:
    """Comma-separated pieces of ``text[start:end]`` at bracket depth 0."""
    parts, depth, a = [], 0, start
    for i in range(start, end):
        ch = span.text[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((a, i))
            a = i + 1
    parts.append((a, end))
    return parts


def _strip(span: _Span, a: int, b: int) -> tuple[int, int]:
    while a < b and span.text[a].isspace():
        a += 1
    while b > a and span.text[b - 1].isspace():
        b -= 1
    return a, b


def _bracketed(span: _Span, a: int, b: int, open_: str, close: str) -> tuple[int, int]:
    a, b = _strip(span, a, b)
    if a >= b or span.text[a] != open_ or span.text[b - 1] != close:
        l, c = span.at(a)
        raise DslSyntaxError(f"expected {open_}...{close}", c, l)
    return a + 1, b - 1


@dataclass
class Scene:
    chart: Chart
    metrics: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def get(self, name: str):
        for table in (self.metrics, self.connections, self.sections):
            if name in table:
                return table[name]
        raise KeyError(f"no such target {name!r}")

    @property
    def names(self) -> list[str]:
        return sorted([*self.metrics, *self.connections, *self.sections])


_HEAD = re.compile(r"\s*([a-z]+)\b")
_DEF = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=")


class _Builder:
    def __init__(self):
        self.names = None
        self.boundary = None
        self.box = {}
        self.chart = None
        self.scene = None

    def _need_chart(self, span):
        if self.names is None:
            l, c = span.at(0)
            raise SceneError("a chart declaration must come first", c, l)
        if self.chart is None:
            box = tuple(self.box.get(n, DEFAULT_BOX) for n in self.names)
            dom = None
            if self.boundary:
                k = self.names.index(self.boundary)
                dom = lambda p, k=k: p[:, k] > 0
            self.chart = Chart(tuple(self.names), boundary=self.boundary, box=box, domain=dom)
            self.scene = Scene(self.chart)

    def expr(self, span: _Span, a: int, b: int):
        a, b = _strip(span, a, b)
        l, c = span.at(a)
        if a >= b:
            raise DslSyntaxError("empty expression", c, l)
        return parse_expr(span.text[a:b], self.chart, line=l, column=c)

    def statement(self, span: _Span):
        m = _HEAD.match(span.text)
        if not m:
            l, c = span.at(len(span.text) - len(span.text.lstrip()))
            raise DslSyntaxError("expected a keyword", c, l)
        kw, rest = m.group(1), m.end()
        words = span.text[rest:].split()
        if kw == "chart":
            if self.names is not None:
                raise SceneError("chart declared twice", *span.at(m.start(1))[::-1])
            if len(words) != 4 or len(set(words)) != 4:
                l, c = span.at(rest)
                raise SceneError("chart needs four distinct coordinate names", c, l)
            self.names = words
            return
        if kw == "boundary":
            if self.names is None or self.chart is not None or len(words) != 1 or words[0] not in self.names:
                l, c = span.at(rest)
                raise SceneError("boundary must name a declared coordinate, before any definition", c, l)
            self.boundary = words[0]
            return
        if kw == "box":
            if self.names is None or self.chart is not None or len(words) != 3 or words[0] not in self.names:
                l, c = span.at(rest)
                raise SceneError("box takes a declared coordinate and two numbers, before any definition", c, l)
            try:
                lo, hi = float(words[1]), float(words[2])
            except ValueError:
                l, c = span.at(rest)
                raise SceneError("box bounds must be numbers", c, l) from None
            if not lo < hi:
                l, c = span.at(rest)
                raise SceneError("box bounds must increase", c, l)
            self.box[words[0]] = (lo, hi)
            return
        if kw not in ("metric", "connection", "section"):
            l, c = span.at(m.start(1))
            raise DslSyntaxError(f"unknown statement {kw!r}", c, l)
        self._need_chart(span)
        d = _DEF.match(span.text, rest)
        if not d:
            l, c = span.at(rest)
            raise DslSyntaxError(f"expected '{kw} NAME = ...'", c, l)
        name, body = d.group(1), d.end()
        if name in self.scene.names:
            l, c = span.at(d.start(1))
            raise SceneError(f"{name!r} defined twice", c, l)
        end = len(span.text)
        if kw == "metric":
            a, b = _bracketed(span, body, end, "[", "]")
            rows = _split_top(span, a, b)
            if len(rows) != 4:
                l, c = span.at(a)
                raise SceneError("metric needs four rows", c, l)
            mat = []
            for ra, rb in rows:
                ia, ib = _bracketed(span, ra, rb, "[", "]")
                cells = _split_top(span, ia, ib)
                if len(cells) != 4:
                    l, c = span.at(ia)
                    raise SceneError("metric rows need four entries", c, l)
                mat.append([self.expr(span, x, y) for x, y in cells])
            try:
                self.scene.metrics[name] = Metric(sp.Matrix(mat), self.chart)
            except ValueError as e:
                l, c = span.at(body)
                raise SceneError(str(e), c, l) from None
        elif kw == "connection":
            a, b = _bracketed(span, body, end, "(", ")")
            items = _split_top(span, a, b)
            comps = {}
            for ia, ib in items:
                ia, ib = _strip(span, ia, ib)
                km = re.match(r"(a[123])\s*:", span.text[ia:ib])
                if not km:
                    l, c = span.at(ia)
                    raise DslSyntaxError("expected 'a1:', 'a2:' or 'a3:'", c, l)
                la, lb = _bracketed(span, ia + km.end(), ib, "[", "]")
                cells = _split_top(span, la, lb)
                if len(cells) != 4:
                    l, c = span.at(la)
                    raise SceneError("a connection 1-form needs four components", c, l)
                comps[km.group(1)] = Form(1, [self.expr(span, x, y) for x, y in cells])
            if sorted(comps) != ["a1", "a2", "a3"]:
                l, c = span.at(a)
                raise SceneError("connection needs a1, a2 and a3", c, l)
            self.scene.connections[name] = So3Connection((comps["a1"], comps["a2"], comps["a3"]), self.chart)
        else:
            a, b = _bracketed(span, body, end, "(", ")")
            cells = _split_top(span, a, b)
            if len(cells) != 3:
                l, c = span.at(a)
                raise SceneError("a section has three components", c, l)
            self.scene.sections[name] = [self.expr(span, x, y) for x, y in cells]


def parse_scene(src: str) -> Scene:
    b = _Builder()
    for st in _statements(src):
        b.statement(st)
    if b.names is None:
        raise SceneError("scene declares no chart", 1, 1)
    if b.chart is None:
        b._need_chart(_Span("", 1, 1))
    return b.scene


def load_scene(path) -> Scene:
    return parse_scene(Path(path).read_text())


HYPERBOLIC_SCENE = """\
# hyperbolic half-space and its self-dual Levi-Civita connection
chart rho y1 y2 y3;
boundary rho;
metric g = [[rho^-2, 0, 0, 0], [0, rho^-2, 0, 0], [0, 0, rho^-2, 0], [0, 0, 0, rho^-2]];
connection A = (a1: [0, 1/rho, 0, 0], a2: [0, 0, 1/rho, 0], a3: [0, 0, 0, 1/rho]);
"""
