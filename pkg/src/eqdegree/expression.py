"""Polynomial expression trees: parsing, exact evaluation, symbolic
differentiation and expansion into sparse monomial arrays for the kernels.

Variables are ``x1..xn`` and, for otopies, ``t`` (stored as index n).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ExpressionSyntaxError


class Node:
    precedence = 100

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        return Pow(self, int(k))


def _coerce(v):
    return v if isinstance(v, Node) else Const(v)


@dataclass(frozen=True)
class Const(Node):
    value: object

    def fmt(self, names):
        v = self.value
        if isinstance(v, Fraction):
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return repr(float(v))


@dataclass(frozen=True)
class Var(Node):
    index: int

    def fmt(self, names):
        return names[self.index]


@dataclass(frozen=True)
class Add(Node):
    a: Node
    b: Node
    precedence = 1

    def fmt(self, names):
        return f"{_wrap(self.a, names, 1)} + {_wrap(self.b, names, 1)}"


@dataclass(frozen=True)
class Sub(Node):
    a: Node
    b: Node
    precedence = 1

    def fmt(self, names):
        return f"{_wrap(self.a, names, 1)} - {_wrap(self.b, names, 2)}"


@dataclass(frozen=True)
class Mul(Node):
    a: Node
    b: Node
    precedence = 2

    def fmt(self, names):
        return f"{_wrap(self.a, names, 2)}*{_wrap(self.b, names, 3)}"


@dataclass(frozen=True)
class Neg(Node):
    a: Node
    precedence = 2

    def fmt(self, names):
        return f"-{_wrap(self.a, names, 3)}"


@dataclass(frozen=True)
class Pow(Node):
    a: Node
    k: int
    precedence = 4

    def fmt(self, names):
        return f"{_wrap(self.a, names, 5)}^{self.k}"


def _wrap(node, names, need):
    s = node.fmt(names)
    prec = node.precedence
    if isinstance(node, Const) and (
        (isinstance(node.value, Fraction) and (node.value < 0 or node.value.denominator != 1))
        or (not isinstance(node.value, Fraction) and float(node.value) < 0)
    ):
        prec = 0
    return f"({s})" if prec < need else s


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _is_const(n, v=None):
    return isinstance(n, Const) and (v is None or n.value == v)


# --- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<var>x\d+|t)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected input at {text[pos:]!r}")
        pos = m.end()
        kind = m.lastgroup
        val = m.group(kind)
        out.append((kind, "^" if val == "**" else val))
    return out


class _Parser:
    def __init__(self, text, n, allow_t):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n
        self.allow_t = allow_t
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.i != len(self.toks):
            raise ExpressionSyntaxError(f"trailing input in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                node = Mul(node, rhs)
            else:
                c = _constant_value(rhs)
                if c is None or c == 0:
                    raise ExpressionSyntaxError(
                        f"division only by nonzero constants in {self.text!r}"
                    )
                node = Mul(node, Const(1 / c)) if not _is_const(node) else Const(node.value / c)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            if self.peek()[1] == "-":
                raise ExpressionSyntaxError("negative exponents are not polynomial")
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise ExpressionSyntaxError(f"exponent must be a non-negative integer in {self.text!r}")
            k = int(val)
            return Pow(base, k)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "var":
            if val == "t":
                if not self.allow_t:
                    raise ExpressionSyntaxError(f"'t' is only allowed in otopy expressions: {self.text!r}")
                return Var(self.n)
            k = int(val[1:])
            if not 1 <= k <= self.n:
                raise ExpressionSyntaxError(f"variable {val} out of range 1..{self.n}")
            return Var(k - 1)
        if val == "(":
            node = self.expr()
            if self.take()[1] != ")":
                raise ExpressionSyntaxError(f"missing ')' in {self.text!r}")
            return node
        raise ExpressionSyntaxError(f"unexpected token {val!r} in {self.text!r}")


def _constant_value(node):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        v = _constant_value(node.a)
        return None if v is None else -v
    return None


def parse(text: str, n: int, allow_t: bool = False) -> Node:
    return _Parser(text, n, allow_t).parse()


# --- differentiation ------------------------------------------------------------

def diff(node: Node, i: int) -> Node:
    """d node / d var_i, with light constant folding."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == i else ZERO
    if isinstance(node, Add):
        return _add(diff(node.a, i), diff(node.b, i))
    if isinstance(node, Sub):
        return _sub(diff(node.a, i), diff(node.b, i))
    if isinstance(node, Neg):
        d = diff(node.a, i)
        return ZERO if _is_const(d, 0) else _neg(d)
    if isinstance(node, Mul):
        return _add(_mul(diff(node.a, i), node.b), _mul(node.a, diff(node.b, i)))
    if isinstance(node, Pow):
        if node.k == 0:
            return ZERO
        inner = diff(node.a, i)
        if node.k == 1:
            return inner
        lead = Pow(node.a, node.k - 1) if node.k > 2 else node.a
        return _mul(_mul(Const(Fraction(node.k)), lead), inner)
    raise TypeError(node)


def _add(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return _neg(b)
    return Sub(a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def _mul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


# --- expansion into monomials ---------------------------------------------------

def _padd(p, q, sign=1):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + sign * c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _pmul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            v = out.get(m, 0) + c1 * c2
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _ppow(p, k, nv):
    out = {(0,) * nv: Fraction(1)}
    base = p
    while k:
        if k & 1:
            out = _pmul(out, base)
        k >>= 1
        if k:
            base = _pmul(base, base)
    return out


def expand(node: Node, nvars: int, subs=None) -> dict:
    """Monomial dict {exponent tuple: coefficient} of a tree.

    ``subs`` optionally maps each variable index to a polynomial dict (in a
    possibly different variable count ``nvars``), realising substitution.
    """
    if isinstance(node, Const):
        return {} if node.value == 0 else {(0,) * nvars: node.value}
    if isinstance(node, Var):
        if subs is not None:
            return dict(subs[node.index])
        m = [0] * nvars
        m[node.index] = 1
        return {tuple(m): Fraction(1)}
    if isinstance(node, Add):
        return _padd(expand(node.a, nvars, subs), expand(node.b, nvars, subs))
    if isinstance(node, Sub):
        return _padd(expand(node.a, nvars, subs), expand(node.b, nvars, subs), -1)
    if isinstance(node, Neg):
        return {m: -c for m, c in expand(node.a, nvars, subs).items()}
    if isinstance(node, Mul):
        return _pmul(expand(node.a, nvars, subs), expand(node.b, nvars, subs))
    if isinstance(node, Pow):
        return _ppow(expand(node.a, nvars, subs), node.k, nvars)
    raise TypeError(node)


def poly_to_tree(p: dict) -> Node:
    out = None
    for m in sorted(p, reverse=True):
        c = p[m]
        neg = c < 0
        c = -c if neg else c
        node = None
        for i, e in enumerate(m):
            if e:
                f = Pow(Var(i), e) if e > 1 else Var(i)
                node = f if node is None else Mul(node, f)
        if node is None:
            node = Const(c)
        elif c != 1:
            node = Mul(Const(c), node)
        if out is None:
            out = Neg(node) if neg else node
        else:
            out = Sub(out, node) if neg else Add(out, node)
    return ZERO if out is None else out


def evaluate_tree(node: Node, x):
    """Direct evaluation; exact when x and constants are Fractions."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, Add):
        return evaluate_tree(node.a, x) + evaluate_tree(node.b, x)
    if isinstance(node, Sub):
        return evaluate_tree(node.a, x) - evaluate_tree(node.b, x)
    if isinstance(node, Neg):
        return -evaluate_tree(node.a, x)
    if isinstance(node, Mul):
        return evaluate_tree(node.a, x) * evaluate_tree(node.b, x)
    if isinstance(node, Pow):
        return evaluate_tree(node.a, x) ** node.k
    raise TypeError(node)


def _compile(polys, nvars):
    exps, coefs, rows = [], [], []
    for r, p in enumerate(polys):
        for m, c in sorted(p.items()):
            exps.append(m)
            coefs.append(float(c))
            rows.append(r)
    return (
        np.array(exps, dtype=np.int64).reshape(-1, nvars),
        np.array(coefs, dtype=float),
        np.array(rows, dtype=np.int64),
    )


def _all_exact(p):
    return all(isinstance(c, Fraction) for c in p.values())


@dataclass(frozen=True, eq=False)
class MapExpression:
    """n polynomial outputs in n inputs (plus ``t`` when ``has_t``)."""

    components: tuple
    n: int
    has_t: bool = False

    @classmethod
    def parse(cls, texts, n: int | None = None, allow_t: bool = False) -> "MapExpression":
        texts = list(texts)
        n = len(texts) if n is None else n
        if len(texts) != n:
            raise ExpressionSyntaxError(f"expected {n} component expressions, got {len(texts)}")
        comps = tuple(parse(s, n, allow_t) for s in texts)
        return cls(comps, n, allow_t and any(_uses_var(c, n) for c in comps))

    @classmethod
    def from_polys(cls, polys, n: int, has_t: bool = False) -> "MapExpression":
        return cls(tuple(poly_to_tree(p) for p in polys), n, has_t)

    @property
    def nvars(self) -> int:
        return self.n + (1 if self.has_t else 0)

    @property
    def names(self):
        return [f"x{i + 1}" for i in range(self.n)] + ["t"]

    def to_strings(self):
        return [c.fmt(self.names) for c in self.components]

    @cached_property
    def polys(self):
        return tuple(expand(c, self.nvars) for c in self.components)

    @cached_property
    def is_exact(self) -> bool:
        return all(_all_exact(p) for p in self.polys)

    @cached_property
    def derivative_trees(self):
        """Symbolic Jacobian: entry [k][i] = d f_k / d x_i."""
        return tuple(tuple(diff(c, i) for i in range(self.n)) for c in self.components)

    @cached_property
    def compiled(self):
        return _compile(self.polys, self.nvars)

    @cached_property
    def compiled_jacobian(self):
        flat = [expand(d, self.nvars) for row in self.derivative_trees for d in row]
        return _compile(flat, self.nvars)

    def degree(self) -> int:
        return max((sum(m) for p in self.polys for m in p), default=0)

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        exps, coefs, rows = self.compiled
        return kernels.poly_eval(X, exps, coefs, rows, len(self.components))

    def jacobian(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        exps, coefs, rows = self.compiled_jacobian
        out = kernels.poly_eval(X, exps, coefs, rows, len(self.components) * self.n)
        return out.reshape(-1, len(self.components), self.n)

    def evaluate_exact(self, x):
        return tuple(evaluate_tree(c, x) for c in self.components)

    def substitute_t(self, t) -> "MapExpression":
        if not self.has_t:
            return self
        n = self.n
        subs = []
        for i in range(n + 1):
            if i < n:
                m = [0] * n
                m[i] = 1
                subs.append({tuple(m): Fraction(1)})
            else:
                subs.append({} if t == 0 else {(0,) * n: t})
        return MapExpression.from_polys([expand(c, n, subs) for c in self.components], n)

    def linear_substitute(self, M, out_map=None) -> "MapExpression":
        """u -> out_map @ f(M u): x = M u with M of shape (n, d)."""
        rows = [list(r) for r in M]
        d = len(rows[0]) if rows else 0
        subs = []
        for i in range(self.n):
            p = {}
            for j in range(d):
                c = rows[i][j]
                if c != 0:
                    m = [0] * d
                    m[j] = 1
                    p[tuple(m)] = c
            subs.append(p)
        inner = [expand(c, d, subs) for c in self.components]
        if out_map is None:
            return MapExpression.from_polys(inner, d)
        outs = []
        for row in out_map:
            acc = {}
            for c, p in zip(row, inner):
                if c != 0:
                    acc = _padd(acc, {m: c * v for m, v in p.items()})
            outs.append(acc)
        return MapExpression.from_polys(outs, d)

    def scaled_sum(self, other: "MapExpression", a, b) -> "MapExpression":
        """a*self + b*other, as a new expression."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        nv = max(self.nvars, other.nvars)
        out = []
        for p, q in zip(_lift(self.polys, nv), _lift(other.polys, nv)):
            acc = {m: a * c for m, c in p.items() if a * c != 0}
            acc = _padd(acc, {m: b * c for m, c in q.items() if b * c != 0})
            out.append(acc)
        return MapExpression.from_polys(out, self.n, nv > self.n)


def _lift(polys, nv):
    return [
        {m + (0,) * (nv - len(m)): c for m, c in p.items()} for p in polys
    ]


def _uses_var(node, i):
    if isinstance(node, Var):
        return node.index == i
    if isinstance(node, Const):
        return False
    return any(_uses_var(getattr(node, f), i) for f in ("a", "b") if hasattr(node, f))
