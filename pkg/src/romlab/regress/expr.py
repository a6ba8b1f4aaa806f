"""Expression trees for symbolic closures.

Leaves are constants or *weighted variables* ``w*u_k`` (a variable terminal
carries its own coefficient, which the constant optimizer tunes).  Internal
nodes apply one primitive.  Trees print to, and parse from, a small infix
grammar::

    ((0.5u1 * u2) - (0.29999999999999999 * sin(u1)))

Numbers written directly in front of a variable (``0.5u1``) denote a weighted
variable; ``*`` denotes a multiplication node.  The parser also accepts the
typeset forms ``u_1``, ``\\sin``, ``^2`` and implicit multiplication.
"""

import re

import numpy as np

from ..errors import ParseError

EXP_CLAMP = 50.0
LOG_EPS = 1e-12

ARITY = {"add": 2, "sub": 2, "mul": 2, "sin": 1, "cos": 1, "exp": 1,
         "log": 1, "square": 1}
UNARY = ("sin", "cos", "exp", "log", "square")
COUNTED = UNARY

PRIMITIVE_SETS = {
    1: ("add", "sub", "mul"),
    2: ("add", "sub", "mul", "sin"),
    3: ("add", "sub", "mul", "exp", "sin"),
    4: ("add", "sub", "mul", "sin", "cos"),
    5: ("add", "sub", "mul", "exp", "sin", "cos"),
    6: ("add", "sub", "mul", "exp", "sin", "cos", "square", "log"),
}


class Node:
    """One tree node: ``op`` is ``const``, ``var`` or a primitive name."""

    __slots__ = ("op", "children", "value", "index")

    def __init__(self, op, children=(), value=0.0, index=0):
        self.op = op
        self.children = list(children)
        self.value = float(value)
        self.index = index

    @classmethod
    def const(cls, value):
        return cls("const", value=value)

    @classmethod
    def var(cls, index, weight=1.0):
        return cls("var", value=weight, index=index)

    @property
    def is_leaf(self):
        return self.op in ("const", "var")

    def copy(self):
        return Node(self.op, [c.copy() for c in self.children], self.value, self.index)

    def __repr__(self):
        return f"Node({to_string(self)!r})"

    def __eq__(self, other):
        return isinstance(other, Node) and to_string(self) == to_string(other)

    __hash__ = None


def nodes(tree):
    """Pre-order list of nodes."""
    out = []
    stack = [tree]
    while stack:
        n = stack.pop()
        out.append(n)
        stack.extend(reversed(n.children))
    return out


def length(tree):
    return len(nodes(tree))


def depth(tree):
    """Number of nodes on the longest root-to-leaf path (a leaf has depth 1)."""
    if not tree.children:
        return 1
    return 1 + max(depth(c) for c in tree.children)


def parameters(tree):
    """Leaves in pre-order; each carries one tunable number."""
    return [n for n in nodes(tree) if n.is_leaf]


def get_params(tree):
    return np.array([n.value for n in parameters(tree)])


def set_params(tree, values):
    for n, v in zip(parameters(tree), values):
        n.value = float(v)


def count_constants(tree):
    """Numeric constants as they appear in the printed expression."""
    return sum(1 for n in nodes(tree)
               if n.op == "const" or (n.op == "var" and n.value != 1.0))


def _apply(op, a, b=None):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "sin":
        return np.sin(a)
    if op == "cos":
        return np.cos(a)
    if op == "exp":
        return np.exp(np.minimum(a, EXP_CLAMP))
    if op == "log":
        return np.log(np.abs(a) + LOG_EPS)
    if op == "square":
        return a * a
    raise ValueError(f"unknown primitive {op!r}")


def _derivative(op, a, value):
    if op == "sin":
        return np.cos(a)
    if op == "cos":
        return -np.sin(a)
    if op == "exp":
        return np.where(a < EXP_CLAMP, value, 0.0)
    if op == "log":
        return np.sign(a) / (np.abs(a) + LOG_EPS)
    if op == "square":
        return 2.0 * a
    raise ValueError(f"unknown primitive {op!r}")


def evaluate(tree, X):
    """Evaluate on the rows of ``X`` (``X[:, k]`` is ``u_{k+1}``)."""
    X = np.atleast_2d(X)
    op = tree.op
    if op == "const":
        return np.full(X.shape[0], tree.value)
    if op == "var":
        return tree.value * X[:, tree.index]
    if len(tree.children) == 2:
        return _apply(op, evaluate(tree.children[0], X), evaluate(tree.children[1], X))
    return _apply(op, evaluate(tree.children[0], X))


def evaluate_with_jacobian(tree, X):
    """Values and derivatives with respect to :func:`parameters` (pre-order).

    The parameters of a subtree are contiguous in pre-order, so every node
    returns the Jacobian block of its own subtree.
    """
    op = tree.op
    if op == "const":
        ones = np.ones(X.shape[0])
        return tree.value * ones, ones[:, None]
    if op == "var":
        x = X[:, tree.index]
        return tree.value * x, x[:, None]
    if len(tree.children) == 2:
        a, Ja = evaluate_with_jacobian(tree.children[0], X)
        b, Jb = evaluate_with_jacobian(tree.children[1], X)
        if op == "add":
            return a + b, np.hstack((Ja, Jb))
        if op == "sub":
            return a - b, np.hstack((Ja, -Jb))
        return a * b, np.hstack((Ja * b[:, None], Jb * a[:, None]))
    a, Ja = evaluate_with_jacobian(tree.children[0], X)
    v = _apply(op, a)
    return v, Ja * _derivative(op, a, v)[:, None]


# -- printing -----------------------------------------------------------------

def _num(x):
    return format(float(x), ".17g")


def to_string(tree):
    """Fully parenthesized infix form; constants keep 17 significant digits."""
    op = tree.op
    if op == "const":
        return _num(tree.value)
    if op == "var":
        name = f"u{tree.index + 1}"
        return name if tree.value == 1.0 else _num(tree.value) + name
    if op in UNARY:
        return f"{op}({to_string(tree.children[0])})"
    sym = {"add": "+", "sub": "-", "mul": "*"}[op]
    return f"({to_string(tree.children[0])} {sym} {to_string(tree.children[1])})"


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>u_?\{?(?P<idx>\d+)\}?)
  | (?P<func>\\?(?:sin|cos|exp|log|square))
  | (?P<op>[-+*^()]|\\cdot)
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        pos = m.end()
        if m.group("ws"):
            continue
        if m.group("num"):
            out.append(("num", m.group("num")))
        elif m.group("var"):
            idx = int(m.group("idx"))
            if idx < 1:
                raise ParseError(f"variable indices start at 1, got u{idx}")
            out.append(("var", idx - 1))
        elif m.group("func"):
            out.append(("func", m.group("func").lstrip("\\")))
        else:
            tok = m.group("op")
            out.append(("op", "*" if tok == "\\cdot" else tok))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, v = self.take()
        if v != value:
            raise ParseError(f"expected {value!r}, found {v!r} in {self.text!r}")

    def parse(self):
        if not self.toks:
            raise ParseError("empty expression")
        tree = self.expression()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return tree

    def expression(self):
        left = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, sym = self.take()
            right = self.term()
            left = Node("add" if sym == "+" else "sub", [left, right])
        return left

    def _starts_factor(self):
        kind, v = self.peek()
        return kind in ("num", "var", "func") or (kind, v) == ("op", "(")

    def term(self):
        left = self.factor()
        while True:
            if self.peek() == ("op", "*"):
                self.take()
            elif not self._starts_factor():
                return left
            left = Node("mul", [left, self.factor()])

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.factor()
            if inner.op in ("const", "var"):
                inner.value = -inner.value
                return inner
            return Node("mul", [Node.const(-1.0), inner])
        return self.power(self.primary())

    def power(self, base):
        if self.peek() == ("op", "^"):
            self.take()
            kind, v = self.take()
            if kind != "num" or float(v) != 2.0:
                raise ParseError(f"only ^2 is supported, found ^{v}")
            base = Node("square", [base])
        return base

    def primary(self):
        kind, v = self.take()
        if kind == "num":
            if self.peek()[0] == "var":
                _, idx = self.take()
                if self.peek() == ("op", "^"):
                    # 0.5u1^2 means 0.5 * u1^2
                    return Node("mul", [Node.const(float(v)), self.power(Node.var(idx))])
                return Node.var(idx, float(v))
            return Node.const(float(v))
        if kind == "var":
            return Node.var(v)
        if kind == "func":
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Node(v, [arg])
        if (kind, v) == ("op", "("):
            inner = self.expression()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {v!r} in {self.text!r}")


def parse(text):
    """Parse an infix expression into a tree."""
    return _Parser(text).parse()


# -- simplification -----------------------------------------------------------

def _is_const(n, value=None):
    return n.op == "const" and (value is None or n.value == value)


def _signed_terms(n, sign, out):
    if n.op == "add":
        _signed_terms(n.children[0], sign, out)
        _signed_terms(n.children[1], sign, out)
    elif n.op == "sub":
        _signed_terms(n.children[0], sign, out)
        _signed_terms(n.children[1], -sign, out)
    else:
        out.append((sign, n))
    return out


def _rebuild_sum(terms):
    const = 0.0
    rest = []
    for sign, t in terms:
        if t.op == "const":
            const += sign * t.value
        else:
            rest.append((sign, t))
    if const != 0.0 or not rest:
        rest.append((1.0, Node.const(const)))
    sign, first = rest[0]
    if sign < 0:
        first = _negate(first)
    out = first
    for sign, t in rest[1:]:
        if t.op in ("const", "var") and sign > 0 and t.value < 0:
            out = Node("sub", [out, Node(t.op, value=-t.value, index=t.index)])
        else:
            out = Node("add" if sign > 0 else "sub", [out, t])
    return out


def _negate(n):
    if n.op in ("const", "var"):
        return Node(n.op, value=-n.value, index=n.index)
    if n.op == "mul" and _is_const(n.children[0]):
        return _mul(Node.const(-n.children[0].value), n.children[1])
    return Node("mul", [Node.const(-1.0), n])


def _mul(a, b):
    if _is_const(b) and not _is_const(a):
        a, b = b, a
    if _is_const(a):
        c = a.value
        if _is_const(b):
            return Node.const(c * b.value)
        if c == 0.0:
            return Node.const(0.0)
        if c == 1.0:
            return b
        if b.op == "var":
            return Node.var(b.index, c * b.value)
        if b.op == "mul" and _is_const(b.children[0]):
            return _mul(Node.const(c * b.children[0].value), b.children[1])
    return Node("mul", [a, b])


def simplify(tree):
    """Algebraically normalized copy of ``tree``.

    Folds constants, drops additive zeros and unit factors, merges constant
    factors into weighted variables and flattens nested sums into one chain
    with a single trailing constant.
    """
    op = tree.op
    if op == "const":
        return Node.const(tree.value)
    if op == "var":
        return Node.const(0.0) if tree.value == 0.0 else Node.var(tree.index, tree.value)
    kids = [simplify(c) for c in tree.children]
    if op in UNARY:
        if _is_const(kids[0]):
            with np.errstate(all="ignore"):
                return Node.const(float(_apply(op, np.float64(kids[0].value))))
        return Node(op, kids)
    if op == "mul":
        return _mul(*kids)
    return _rebuild_sum(_signed_terms(Node(op, kids), 1.0, []))


def count_occurrences(tree):
    """Occurrences of each variable (``'u1'``, ...) and of the counted primitives."""
    counts = {}
    for n in nodes(tree):
        if n.op == "var":
            key = f"u{n.index + 1}"
        elif n.op in COUNTED:
            key = n.op
        else:
            continue
        counts[key] = counts.get(key, 0) + 1
    return counts
