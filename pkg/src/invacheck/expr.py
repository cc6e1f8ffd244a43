"""Scalar expressions over variables ``x1..xn``.

Grammar (whitespace insensitive, no implicit multiplication)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" exponent ] ;
    exponent = [ "-" ] integer | "(" [ "-" ] integer ")" ;
    atom     = number | variable | func "(" expr ")" | "(" expr ")" ;
    func     = "sqrt" | "exp" | "log" | "sin" | "cos" ;
    variable = "x" digit { digit } ;

Evaluation never raises on domain violations: ``sqrt`` of a negative,
``log`` of a nonpositive number, division by zero and ``0^-k`` all give
NaN, which propagates through the rest of the tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, ExprSyntaxError

UNARY_OPS = ("neg", "sqrt", "exp", "log", "sin", "cos")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


class Expr:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)

    def max_index(self) -> int:
        """Largest variable index appearing in the tree (0 if none)."""
        return _max_index(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: float

    def __post_init__(self):
        # numpy scalars would leak their repr into generated code and printing
        object.__setattr__(self, "value", float(self.value))

    def __repr__(self) -> str:
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    index: int

    def __repr__(self) -> str:
        return f"Var({self.index})"


@dataclass(frozen=True, repr=False)
class Unary(Expr):
    op: str
    child: Expr

    def __repr__(self) -> str:
        return f"Unary({self.op!r}, {self.child!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __repr__(self) -> str:
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def _max_index(e: Expr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return _max_index(e.child)
    if isinstance(e, Binary):
        return max(_max_index(e.left), _max_index(e.right))
    return 0


def is_const(e: Expr, value: float | None = None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# ---------------------------------------------------------------------------
# scalar semantics shared by the recursive evaluator and constant folding


def _unary_scalar(op: str, a: float) -> float:
    if math.isnan(a):
        return math.nan
    if op == "neg":
        return -a
    if op == "sqrt":
        return math.sqrt(a) if a >= 0 else math.nan
    if op == "log":
        return math.log(a) if a > 0 else math.nan
    if op == "exp":
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    if op in ("sin", "cos"):
        if math.isinf(a):
            return math.nan
        return math.sin(a) if op == "sin" else math.cos(a)
    raise ValueError(f"unknown unary op {op!r}")


def _binary_scalar(op: str, a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b if b != 0 else math.nan
    if op == "pow":
        k = int(b)
        if k < 0 and a == 0:
            return math.nan
        try:
            return float(a**k)
        except OverflowError:
            return math.inf if (a > 0 or k % 2 == 0) else -math.inf
    raise ValueError(f"unknown binary op {op!r}")


# ---------------------------------------------------------------------------
# smart constructors (constant folding only)


def const(v: float) -> Const:
    return Const(float(v))


def var(i: int) -> Var:
    if i < 1:
        raise DimensionError(f"variable index must be >= 1, got {i}")
    return Var(i)


def _fold(value: float) -> Const | None:
    return Const(value) if math.isfinite(value) else None


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.child
    return Unary("neg", a)


def unary(op: str, a: Expr) -> Expr:
    if op == "neg":
        return neg(a)
    if op not in UNARY_OPS:
        raise ValueError(f"unknown unary op {op!r}")
    if isinstance(a, Const):
        folded = _fold(_unary_scalar(op, a.value))
        if folded is not None:
            return folded
    return Unary(op, a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    if isinstance(a, Const):
        a, b = b, a
    if isinstance(b, Const) and isinstance(a, Binary) and isinstance(a.right, Const):
        # (e + c1) + c2 and (e - c1) + c2 collapse the constants
        if a.op == "add":
            return add(a.left, Const(a.right.value + b.value))
        if a.op == "sub":
            return add(a.left, Const(b.value - a.right.value))
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    if isinstance(b, Const) and isinstance(a, Binary) and isinstance(a.right, Const):
        if a.op == "add":
            return add(a.left, Const(a.right.value - b.value))
        if a.op == "sub":
            return sub(a.left, Const(a.right.value + b.value))
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    if isinstance(b, Const):
        a, b = b, a
    if (
        isinstance(a, Const)
        and isinstance(b, Binary)
        and b.op == "mul"
        and isinstance(b.left, Const)
    ):
        return mul(Const(a.value * b.left.value), b.right)
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(_binary_scalar("div", a.value, b.value))
        if folded is not None:
            return folded
        return Binary("div", a, b)
    if is_const(b, 1.0):
        return a
    if is_const(a, 0.0):
        return ZERO
    return Binary("div", a, b)


def power(a: Expr, k: int) -> Expr:
    if k != int(k):
        raise ValueError("exponent must be an integer")
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        folded = _fold(_binary_scalar("pow", a.value, float(k)))
        if folded is not None:
            return folded
    return Binary("pow", a, Const(float(k)))


def binary(op: str, a: Expr, b: Expr) -> Expr:
    if op == "add":
        return add(a, b)
    if op == "sub":
        return sub(a, b)
    if op == "mul":
        return mul(a, b)
    if op == "div":
        return div(a, b)
    if op == "pow":
        if not isinstance(b, Const):
            raise ValueError("exponent must be an integer constant")
        return power(a, int(b.value))
    raise ValueError(f"unknown binary op {op!r}")


def total(terms: Iterable[Expr]) -> Expr:
    out: Expr = ZERO
    for t in terms:
        out = add(out, t)
    return out


def linear_form(coeffs: Sequence[float], constant: float = 0.0) -> Expr:
    """``sum_j coeffs[j] * x_{j+1} + constant`` with zero terms dropped."""
    out: Expr = ZERO
    for j, c in enumerate(coeffs):
        if c != 0.0:
            out = add(out, mul(Const(float(c)), Var(j + 1)))
    return add(out, Const(float(constant)))


def dot(coeffs: Sequence[float], exprs: Sequence[Expr]) -> Expr:
    return total(mul(Const(float(c)), e) for c, e in zip(coeffs, exprs) if c != 0.0)


def quadratic_form(Q: np.ndarray, exprs: Sequence[Expr]) -> Expr:
    """``exprs^T Q exprs`` built symbolically."""
    Q = np.asarray(Q, dtype=float)
    n = len(exprs)
    terms = []
    for i in range(n):
        if Q[i, i] != 0.0:
            terms.append(mul(Const(Q[i, i]), power(exprs[i], 2)))
        for j in range(i + 1, n):
            c = Q[i, j] + Q[j, i]
            if c != 0.0:
                terms.append(mul(Const(c), mul(exprs[i], exprs[j])))
    return total(terms)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(stripped, f"unexpected character {text[stripped]!r}")
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.dim = dim

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(pos, f"expected {value!r}, found {found}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(pos, f"unexpected {text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            child = self.unary()
            if isinstance(child, Const):
                return Const(-child.value)
            return Unary("neg", child)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("pow", base, Const(float(self.exponent())))
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        kind, text, pos = self.take()
        if kind != "num":
            raise ExprSyntaxError(pos, "exponent must be an integer constant")
        value = float(text)
        if value != int(value):
            raise ExprSyntaxError(pos, f"exponent {text} is not an integer")
        if paren:
            self.expect(")")
        return sign * int(value)

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            m = re.fullmatch(r"x(\d+)", text)
            if m is None:
                raise ExprSyntaxError(pos, f"unknown name {text!r}")
            idx = int(m.group(1))
            if idx < 1 or idx > self.dim:
                raise DimensionError(
                    f"variable {text} out of range for dimension {self.dim}"
                )
            return Var(idx)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(pos, f"unexpected {found}")


def parse_expr(text: str, dim: int) -> Expr:
    """Parse infix ``text`` over variables ``x1..x{dim}`` into an AST.

    Raises:
        ExprSyntaxError: malformed input (carries the character position).
        DimensionError: a variable index exceeds ``dim``.
    """
    if dim < 1:
        raise DimensionError("dimension must be positive")
    if not text or not text.strip():
        raise ExprSyntaxError(0, "empty expression")
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------------------
# printing


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        return 3 if (e.value < 0 or math.copysign(1.0, e.value) < 0) else 5
    if isinstance(e, Var):
        return 5
    if isinstance(e, Unary):
        return 3 if e.op == "neg" else 5
    return _PREC[e.op]


def to_string(e: Expr) -> str:
    """Infix form that parses back to the same tree."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.child)
            return f"-{inner}" if _prec(e.child) >= 3 else f"-({inner})"
        return f"{e.op}({to_string(e.child)})"
    if e.op == "pow":
        base = to_string(e.left)
        if _prec(e.left) < 5:
            base = f"({base})"
        return f"{base}^{int(e.right.value)}"
    p = _PREC[e.op]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {_SYMBOL[e.op]} {right}"


# ---------------------------------------------------------------------------
# evaluation


def _eval(e: Expr, x: Sequence[float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Unary):
        return _unary_scalar(e.op, _eval(e.child, x))
    return _binary_scalar(e.op, _eval(e.left, x), _eval(e.right, x))


def evaluate(e: Expr, point: Sequence[float], dim: int | None = None) -> float:
    """Evaluate ``e`` at ``point``; domain violations give NaN.

    Raises:
        DimensionError: ``point`` is shorter than the largest variable index,
            or its length differs from ``dim`` when given.
    """
    point = [float(v) for v in np.ravel(point)]
    if dim is not None and len(point) != dim:
        raise DimensionError(f"point has length {len(point)}, expected {dim}")
    if e.max_index() > len(point):
        raise DimensionError(
            f"expression uses x{e.max_index()} but point has length {len(point)}"
        )
    return _eval(e, point)


# vectorised evaluation via generated numpy code


def _np_div(a, b):
    with np.errstate(all="ignore"):
        out = np.true_divide(a, b)
    return np.where(b == 0, np.nan, out)


def _np_pow(a, k):
    with np.errstate(all="ignore"):
        out = np.power(a, float(k))
    if k < 0:
        out = np.where(a == 0, np.nan, out)
    return out


def _np_sqrt(a):
    with np.errstate(all="ignore"):
        return np.sqrt(np.where(a >= 0, a, np.nan))


def _np_log(a):
    with np.errstate(all="ignore"):
        return np.log(np.where(a > 0, a, np.nan))


def _np_exp(a):
    with np.errstate(all="ignore"):
        return np.exp(a)


def _np_sin(a):
    with np.errstate(all="ignore"):
        return np.sin(a)


def _np_cos(a):
    with np.errstate(all="ignore"):
        return np.cos(a)


_NP_ENV = {
    "_div": _np_div,
    "_pow": _np_pow,
    "sqrt": _np_sqrt,
    "log": _np_log,
    "exp": _np_exp,
    "sin": _np_sin,
    "cos": _np_cos,
    "nan": math.nan,
    "inf": math.inf,
}


def _codegen(e: Expr, memo: dict) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"X[{e.index - 1}]"
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Unary):
        inner = _codegen(e.child, memo)
        code = f"(-{inner})" if e.op == "neg" else f"{e.op}({inner})"
    elif e.op == "div":
        code = f"_div({_codegen(e.left, memo)}, {_codegen(e.right, memo)})"
    elif e.op == "pow":
        code = f"_pow({_codegen(e.left, memo)}, {int(e.right.value)})"
    else:
        code = f"({_codegen(e.left, memo)} {_SYMBOL[e.op]} {_codegen(e.right, memo)})"
    memo[key] = code
    return code


@lru_cache(maxsize=4096)
def _compile_many(exprs: tuple[Expr, ...]) -> Callable:
    body = ", ".join(_codegen(e, {}) for e in exprs)
    src = f"def _f(X):\n    return ({body},)\n"
    env = dict(_NP_ENV)
    exec(compile(src, "<invacheck-expr>", "exec"), env)
    return env["_f"]


def compile_exprs(exprs: Sequence[Expr]) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised evaluator for several expressions at once.

    The returned function maps ``X`` of shape ``(n, k)`` (or ``(n,)``) to an
    array of shape ``(len(exprs), k)`` (or ``(len(exprs),)``).
    """
    raw = _compile_many(tuple(exprs))

    def f(X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        shape = X.shape[1:]
        with np.errstate(all="ignore"):
            cols = raw(X)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in cols])

    return f


def compile_expr(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised evaluator: ``X`` of shape ``(n, k)`` to values of shape ``(k,)``."""
    many = compile_exprs([e])
    return lambda X: many(X)[0]


# ---------------------------------------------------------------------------
# calculus and substitution


def diff(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative with respect to ``x_i``."""
    return _diff(e, i, {})


def _diff(e: Expr, i: int, memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key][1]
    out = _diff_node(e, i, memo)
    memo[key] = (e, out)  # keep e alive so id() stays unique
    return out


def _diff_node(e: Expr, i: int, memo: dict) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Unary):
        u = e.child
        du = _diff(u, i, memo)
        if is_const(du, 0.0):
            return ZERO
        if e.op == "neg":
            return neg(du)
        if e.op == "sqrt":
            return div(du, mul(Const(2.0), e))
        if e.op == "exp":
            return mul(du, e)
        if e.op == "log":
            return div(du, u)
        if e.op == "sin":
            return mul(du, unary("cos", u))
        if e.op == "cos":
            return neg(mul(du, unary("sin", u)))
        raise ValueError(e.op)
    a, b = e.left, e.right
    if e.op == "pow":
        k = int(b.value)
        da = _diff(a, i, memo)
        return mul(mul(Const(float(k)), power(a, k - 1)), da)
    da = _diff(a, i, memo)
    db = _diff(b, i, memo)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, b), mul(a, db))
    if e.op == "div":
        if is_const(db, 0.0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    raise ValueError(e.op)


def gradient(e: Expr, dim: int) -> list[Expr]:
    return [diff(e, i) for i in range(1, dim + 1)]


def derivatives(e: Expr, dim: int) -> tuple[list[Expr], list[list[Expr]]]:
    """Symbolic gradient and Hessian of ``e`` in ``x1..x{dim}``.

    Each Hessian entry above the diagonal is computed once and the same
    object is placed in the mirrored slot.
    """
    grad = gradient(e, dim)
    hess: list[list[Expr]] = [[ZERO] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            h = diff(grad[i], j + 1)
            hess[i][j] = h
            hess[j][i] = h
    return grad, hess


def substitute(e: Expr, mapping: dict[int, Expr]) -> Expr:
    """Replace ``Var(i)`` by ``mapping[i]`` and re-fold constants."""
    memo: dict = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key][1]
        if isinstance(node, Const):
            out: Expr = node
        elif isinstance(node, Var):
            out = mapping.get(node.index, node)
        elif isinstance(node, Unary):
            out = unary(node.op, go(node.child))
        else:
            out = binary(node.op, go(node.left), go(node.right))
        memo[key] = (node, out)
        return out

    return go(e)


def substitute_affine(e: Expr, M: np.ndarray, c: np.ndarray | None = None) -> Expr:
    """Rewrite ``e(x)`` as an expression in new variables ``z`` with ``x = M z + c``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    mapping = {i + 1: linear_form(M[i], c[i]) for i in range(n)}
    return substitute(e, mapping)


def fold(e: Expr) -> Expr:
    """Rebuild ``e`` through the smart constructors (constant folding pass)."""
    return substitute(e, {})


def is_constant(e: Expr) -> bool:
    return isinstance(e, Const)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """A map ``R^n -> R^n`` given by ``dim`` component expressions."""

    dim: int
    components: tuple[Expr, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dimension must be positive")
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.dim:
            raise DimensionError(
                f"{len(self.components)} components for dimension {self.dim}"
            )
        for c in self.components:
            if c.max_index() > self.dim:
                raise DimensionError(
                    f"component uses x{c.max_index()} beyond dimension {self.dim}"
                )

    @classmethod
    def parse(cls, texts: Sequence[str], dim: int | None = None) -> "VectorField":
        dim = len(texts) if dim is None else dim
        return cls(dim, tuple(parse_expr(t, dim) for t in texts))

    @classmethod
    def linear(cls, A) -> "VectorField":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("linear map must be square")
        return cls(n, tuple(linear_form(A[i]) for i in range(n)))

    @classmethod
    def zero(cls, dim: int) -> "VectorField":
        return cls(dim, (ZERO,) * dim)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise DimensionError(f"point has length {x.shape[0]}, expected {self.dim}")
        return self.compiled()(x)

    def compiled(self) -> Callable[[np.ndarray], np.ndarray]:
        return compile_exprs(self.components)

    def compose(self, e: Expr) -> Expr:
        """``e(f(x))`` as an expression in ``x``."""
        return substitute(e, {i + 1: c for i, c in enumerate(self.components)})

    def strings(self) -> list[str]:
        return [to_string(c) for c in self.components]

    def as_matrix(self) -> np.ndarray | None:
        """The matrix ``A`` if every component is linear homogeneous, else ``None``."""
        A = np.zeros((self.dim, self.dim))
        for i, c in enumerate(self.components):
            grad, hess = derivatives(c, self.dim)
            if not all(isinstance(g, Const) for g in grad):
                return None
            if evaluate(c, np.zeros(self.dim)) != 0.0:
                return None
            A[i] = [g.value for g in grad]
        return A
