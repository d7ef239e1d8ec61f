"""A small arithmetic expression language for chart functions.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ('-')? atom)*
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Binary operators are left-associative, including ``^`` (so ``2^3^2`` is
``(2^3)^2``).  Function names are sin, cos, exp, log, sqrt.  The names
``pi`` and ``e`` are constants.  Variables are ``x1 .. xd``; the name ``t``
is reserved for family parameters; anything else is a parameter.

Evaluation is duck-typed: the environment may bind floats, numpy arrays or
:class:`mixcurv.jets.Jet` values and derivatives propagate through every
node.
"""

import math
import re

import numpy as np

from . import jets
from .jets import Jet

FUNCS = ("sin", "cos", "exp", "log", "sqrt")
CONSTS = {"pi": math.pi, "e": math.e}
_VAR_RE = re.compile(r"^x([1-9][0-9]*)$")


class ExprSyntaxError(ValueError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ValueError):
    pass


class DomainError(ArithmeticError):
    def __init__(self, msg, node):
        super().__init__(f"{msg} in '{node}'")
        self.node = node


# -- nodes -----------------------------------------------------------------

class Expr:
    """Base class for expression nodes; supports operator overloading."""

    def __add__(self, o):
        return Bin("+", self, _lift(o))

    def __radd__(self, o):
        return Bin("+", _lift(o), self)

    def __sub__(self, o):
        return Bin("-", self, _lift(o))

    def __rsub__(self, o):
        return Bin("-", _lift(o), self)

    def __mul__(self, o):
        return Bin("*", self, _lift(o))

    def __rmul__(self, o):
        return Bin("*", _lift(o), self)

    def __truediv__(self, o):
        return Bin("/", self, _lift(o))

    def __rtruediv__(self, o):
        return Bin("/", _lift(o), self)

    def __pow__(self, o):
        return Bin("^", self, _lift(o))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return to_text(self)

    def names(self):
        out = set()
        _collect(self, out)
        return out

    def variables(self):
        return {n for n in self.names() if _VAR_RE.match(n)}

    def parameters(self):
        return {n for n in self.names() if not _VAR_RE.match(n) and n != "t"}

    def __call__(self, env):
        return evaluate(self, env)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def __eq__(self, o):
        return isinstance(o, Const) and o.value == self.value

    def __hash__(self):
        return hash(("c", self.value))

    def __repr__(self):
        return f"Const({self.value!r})"


class Name(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __eq__(self, o):
        return isinstance(o, Name) and o.name == self.name

    def __hash__(self):
        return hash(("n", self.name))

    def __repr__(self):
        return f"Name({self.name!r})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg

    def __eq__(self, o):
        return isinstance(o, Neg) and o.arg == self.arg

    def __hash__(self):
        return hash(("neg", self.arg))

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Func(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn, arg):
        if fn not in FUNCS:
            raise ValueError(f"unknown function {fn}")
        self.fn, self.arg = fn, arg

    def __eq__(self, o):
        return isinstance(o, Func) and (o.fn, o.arg) == (self.fn, self.arg)

    def __hash__(self):
        return hash((self.fn, self.arg))

    def __repr__(self):
        return f"Func({self.fn!r}, {self.arg!r})"


class Bin(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        self.op, self.left, self.right = op, left, right

    def __eq__(self, o):
        return (isinstance(o, Bin)
                and (o.op, o.left, o.right) == (self.op, self.left, self.right))

    def __hash__(self):
        return hash((self.op, self.left, self.right))

    def __repr__(self):
        return f"Bin({self.op!r}, {self.left!r}, {self.right!r})"


def _lift(o):
    if isinstance(o, Expr):
        return o
    if isinstance(o, str):
        return Name(o)
    return Const(o)


def var(k):
    return Name(f"x{k}")


def _collect(node, out):
    if isinstance(node, Name):
        if node.name not in CONSTS:
            out.add(node.name)
    elif isinstance(node, (Neg, Func)):
        _collect(node.arg, out)
    elif isinstance(node, Bin):
        _collect(node.left, out)
        _collect(node.right, out)


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break  # only trailing whitespace remains
        if m.group(1):
            toks.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(("name", m.group(2), m.start(2)))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExprSyntaxError(f"unexpected character {ch!r}", m.start(3))
            toks.append(("op", ch, m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, ch):
        tok = self.take()
        if tok[0] != "op" or tok[1] != ch:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {ch!r}, found {what}", tok[2])

    def is_op(self, chars):
        tok = self.peek()
        return tok[0] == "op" and tok[1] in chars

    def expr(self):
        node = self.term()
        while self.is_op("+-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.is_op("*/"):
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.is_op("-"):
            self.take()
            return Neg(self.unary())
        if self.is_op("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        while self.is_op("^"):
            self.take()
            if self.is_op("-"):
                self.take()
                rhs = Neg(self.atom())
            else:
                rhs = self.atom()
            node = Bin("^", node, rhs)
        return node

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            return Name(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", off)
        raise ExprSyntaxError(f"unexpected {text!r}", off)


def parse(text, dim=None, params=None, allow_t=False):
    """Parse ``text`` into an expression tree.

    With ``dim`` given, variables must be among x1..x{dim}; with ``params``
    given, every other name must be a declared parameter (or ``t`` when
    ``allow_t``).
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    try:
        text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ExprSyntaxError("non-ASCII input", exc.start) from None
    p = _Parser(text)
    node = p.expr()
    tok = p.peek()
    if tok[0] != "end":
        raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
    check_names(node, dim, params, allow_t)
    return node


def check_names(node, dim=None, params=None, allow_t=False):
    for name in sorted(node.names()):
        m = _VAR_RE.match(name)
        if m:
            if dim is not None and int(m.group(1)) > dim:
                raise UnknownIdentifier(f"variable {name} exceeds chart dimension {dim}")
            continue
        if name == "t":
            if params is not None and not allow_t:
                raise UnknownIdentifier("'t' is reserved for metric families")
            continue
        if params is not None and name not in params:
            raise UnknownIdentifier(f"unknown identifier {name!r}")


# -- printer ---------------------------------------------------------------

def to_text(node):
    """Fully parenthesized text that parses back to an identical tree."""
    if isinstance(node, Const):
        v = node.value
        if v < 0 or math.copysign(1.0, v) < 0:
            return f"(-{repr(-v)})"
        return repr(v)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Func):
        return f"{node.fn}({to_text(node.arg)})"
    return f"({to_text(node.left)}{node.op}{to_text(node.right)})"


# -- evaluator -------------------------------------------------------------

def _val(x):
    return jets.value(x)


def _fail_if(cond, msg, node):
    if np.any(cond):
        raise DomainError(msg, to_text(node))


def evaluate(node, env):
    """Evaluate ``node`` with names bound by ``env``."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Name):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTS:
            return CONSTS[node.name]
        raise UnknownIdentifier(f"unbound name {node.name!r}")
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Func):
        a = evaluate(node.arg, env)
        av = _val(a)
        if node.fn == "log":
            _fail_if(av <= 0, "log of non-positive value", node)
        elif node.fn == "sqrt":
            bad = av < 0
            if isinstance(a, Jet) and a.order >= 1:
                bad = av <= 0
            _fail_if(bad, "sqrt of negative value", node)
        fn = getattr(jets, node.fn)
        if isinstance(a, float):
            return float(fn(a))
        return fn(a)
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        _fail_if(_val(b) == 0, "division by zero", node)
        return a / b
    # power
    if isinstance(b, Jet):
        _fail_if(_val(a) <= 0, "power with non-positive base", node)
        return a ** b
    bv = np.asarray(b, dtype=float)
    if bv.ndim or not float(bv).is_integer():
        _fail_if(_val(a) <= 0, "power with non-positive base", node)
    elif float(bv) < 0:
        _fail_if(_val(a) == 0, "division by zero", node)
    if isinstance(a, Jet):
        if bv.ndim:
            return jets.exp(jets.log(a) * bv)
        return a ** float(bv)
    if isinstance(a, float) and not bv.ndim:
        return math.pow(a, float(bv))
    return np.power(np.asarray(a, dtype=float), bv)


def lambdify(node, names):
    """Return a function of positional arguments bound to ``names``."""
    names = list(names)

    def f(*args, **extra):
        env = dict(zip(names, args))
        env.update(extra)
        return evaluate(node, env)
    return f


def diff(node, name):
    """Symbolic derivative with respect to ``name`` (no simplification)."""
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Name):
        return Const(1.0 if node.name == name else 0.0)
    if isinstance(node, Neg):
        return Neg(diff(node.arg, name))
    if isinstance(node, Func):
        a, da = node.arg, diff(node.arg, name)
        outer = {
            "sin": lambda: Func("cos", a),
            "cos": lambda: Neg(Func("sin", a)),
            "exp": lambda: node,
            "log": lambda: Bin("/", Const(1.0), a),
            "sqrt": lambda: Bin("/", Const(0.5), node),
        }[node.fn]()
        return Bin("*", outer, da)
    a, b = node.left, node.right
    da, db = diff(a, name), diff(b, name)
    if node.op in "+-":
        return Bin(node.op, da, db)
    if node.op == "*":
        return Bin("+", Bin("*", da, b), Bin("*", a, db))
    if node.op == "/":
        return Bin("/", Bin("-", Bin("*", da, b), Bin("*", a, db)), Bin("^", b, Const(2.0)))
    # a^b with constant exponent, else the general rule
    if name not in b.names():
        return Bin("*", Bin("*", b, Bin("^", a, Bin("-", b, Const(1.0)))), da)
    return Bin("*", node, Bin("+", Bin("*", db, Func("log", a)), Bin("/", Bin("*", b, da), a)))
