"""Tiny expression language for user-supplied generator functions.

Expressions are written in a single variable ``t`` and may use numeric
literals, ``+ - * / ^``, unary minus and the functions ``ln``, ``exp``,
``sqrt`` and ``pow``.  Parsed trees are immutable and can be evaluated
pointwise (raising :class:`ExprDomainError` outside the domain), compiled
to vectorised numpy callables, printed back to text and differentiated
symbolically.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Expr", "Var", "Num", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "ExprError", "ExprSyntaxError", "UnknownIdentifierError", "ExprDomainError",
    "parse", "evaluate", "compile_expr", "differentiate", "to_string",
]

FUNCTIONS = {"ln": 1, "exp": 1, "sqrt": 1, "pow": 2}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str]):
        self.offset = offset
        self.expected = expected
        exp = ", ".join(sorted(expected))
        super().__init__(f"{message} at byte {offset} (expected one of: {exp})")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier `{name}` at byte {offset}")


class ExprDomainError(ExprError, ArithmeticError):
    """Raised by :func:`evaluate` when a subexpression leaves its domain."""

    def __init__(self, subexpr: "Expr", t: float, reason: str):
        self.subexpr = subexpr
        self.t = t
        self.reason = reason
        super().__init__(f"{reason} in `{to_string(subexpr)}` at t={t!r}")


# --------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Var, Num, Neg, Add, Sub, Mul, Div, Pow, Call]

# ------------------------------------------------------------------ lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | ident | op | end
    text: str
    offset: int  # byte offset into the utf-8 source


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            off = len(src[:pos].encode())
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", off,
                                  frozenset({"number", "t", "function", "operator", "("}))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), len(src[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(src.encode())))
    return toks


# ----------------------------------------------------------------- parsing

_PRIMARY_START = frozenset({"number", "t", "function", "(", "-"})


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected) -> None:
        tok = self.tok
        what = "end of input" if tok.kind == "end" else f"token {tok.text!r}"
        raise ExprSyntaxError(f"unexpected {what}", tok.offset, frozenset(expected))

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            self._fail({text})

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            if self._accept("+"):
                left = Add(left, self.term())
            elif self._accept("-"):
                left = Sub(left, self.term())
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            if self._accept("*"):
                left = Mul(left, self.unary())
            elif self._accept("/"):
                left = Div(left, self.unary())
            else:
                return left

    def unary(self) -> Expr:
        if self._accept("-"):
            arg = self.unary()
            # negative literals are stored as literals
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self._accept("^"):
            return Pow(base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text == "t":
                self.i += 1
                return Var()
            if tok.text in FUNCTIONS:
                self.i += 1
                self._expect("(")
                args = [self.expr()]
                while self._accept(","):
                    args.append(self.expr())
                arity = FUNCTIONS[tok.text]
                if len(args) != arity:
                    raise ExprSyntaxError(
                        f"{tok.text} takes {arity} argument(s), got {len(args)}",
                        tok.offset, frozenset({")"} if arity < len(args) else {","}))
                self._expect(")")
                return Call(tok.text, tuple(args))
            raise UnknownIdentifierError(tok.text, tok.offset)
        if self._accept("("):
            e = self.expr()
            self._expect(")")
            return e
        self._fail(_PRIMARY_START - {"-"})


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree.

    Precedence from tightest: ``^`` (right associative), unary minus,
    ``* /``, ``+ -``.  A minus applied directly to a literal is folded into
    the literal, so ``"t^-0.5"`` gives ``Pow(Var(), Num(-0.5))``.
    """
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0, _PRIMARY_START)
    return _Parser(src).parse()


# ---------------------------------------------------------------- printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_OPS = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}


def _fmt_num(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec(e: Expr) -> int:
    if isinstance(e, Num):
        return 3 if e.value < 0 else 5
    return _PREC.get(type(e), 5)


def to_string(e: Expr) -> str:
    """Render ``e`` with the minimum parentheses needed to re-parse it."""
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_string(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < 3:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        expo = to_string(e.exponent)
        if _prec(e.exponent) < 3:
            expo = f"({expo})"
        return f"{base}^{expo}"
    p = _PREC[type(e)]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left}{_OPS[type(e)]}{right}"


# -------------------------------------------------------------- evaluation


def _pow_scalar(node, a: float, b: float, t: float) -> float:
    if a == 0.0 and b < 0:
        raise ExprDomainError(node, t, "zero raised to a negative power")
    if a < 0 and not float(b).is_integer():
        raise ExprDomainError(node, t, "negative base with non-integer exponent")
    try:
        return math.pow(a, b)
    except OverflowError:
        return math.inf


def evaluate(e: Expr, t: float) -> float:
    """Evaluate ``e`` at the scalar ``t``.

    Leaving the domain of ``ln``, ``sqrt``, division or powers raises
    :class:`ExprDomainError` naming the offending subexpression.
    """
    if isinstance(e, Var):
        return float(t)
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        return -evaluate(e.arg, t)
    if isinstance(e, Add):
        return evaluate(e.left, t) + evaluate(e.right, t)
    if isinstance(e, Sub):
        return evaluate(e.left, t) - evaluate(e.right, t)
    if isinstance(e, Mul):
        return evaluate(e.left, t) * evaluate(e.right, t)
    if isinstance(e, Div):
        den = evaluate(e.right, t)
        if den == 0.0:
            raise ExprDomainError(e, t, "division by zero")
        return evaluate(e.left, t) / den
    if isinstance(e, Pow):
        return _pow_scalar(e, evaluate(e.base, t), evaluate(e.exponent, t), t)
    if isinstance(e, Call):
        a = evaluate(e.args[0], t)
        if e.name == "ln":
            if a <= 0:
                raise ExprDomainError(e, t, "logarithm of a non-positive number")
            return math.log(a)
        if e.name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                return math.inf
        if e.name == "sqrt":
            if a < 0:
                raise ExprDomainError(e, t, "square root of a negative number")
            return math.sqrt(a)
        return _pow_scalar(e, a, evaluate(e.args[1], t), t)
    raise TypeError(f"not an expression node: {e!r}")


def _vec(e: Expr, t: np.ndarray) -> np.ndarray:
    if isinstance(e, Var):
        return t
    if isinstance(e, Num):
        return np.full_like(t, e.value)
    if isinstance(e, Neg):
        return -_vec(e.arg, t)
    if isinstance(e, Add):
        return _vec(e.left, t) + _vec(e.right, t)
    if isinstance(e, Sub):
        return _vec(e.left, t) - _vec(e.right, t)
    if isinstance(e, Mul):
        return _vec(e.left, t) * _vec(e.right, t)
    if isinstance(e, Div):
        den = _vec(e.right, t)
        return np.where(den == 0.0, np.nan, _vec(e.left, t) / den)
    if isinstance(e, (Pow, Call)) and (isinstance(e, Pow) or e.name == "pow"):
        a, b = (_vec(e.base, t), _vec(e.exponent, t)) if isinstance(e, Pow) else \
            (_vec(e.args[0], t), _vec(e.args[1], t))
        bad = ((a == 0.0) & (b < 0)) | ((a < 0) & (b != np.round(b)))
        return np.where(bad, np.nan, np.power(a, b))
    if isinstance(e, Call):
        a = _vec(e.args[0], t)
        if e.name == "ln":
            return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
        if e.name == "exp":
            return np.exp(a)
        return np.where(a >= 0, np.sqrt(np.abs(a)), np.nan)
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Return a vectorised callable; points outside the domain map to NaN."""

    def f(t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = _vec(e, np.atleast_1d(arr))
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    f.__name__ = f"expr[{to_string(e)}]"
    return f


# --------------------------------------------------------- differentiation

ZERO, ONE = Num(0.0), Num(1.0)


def _num(e) -> float | None:
    return e.value if isinstance(e, Num) else None


def _fold(fn, *xs: float) -> Expr | None:
    try:
        with np.errstate(all="raise"):
            r = fn(*xs)
    except (ArithmeticError, ValueError, FloatingPointError):
        return None
    if isinstance(r, complex) or not math.isfinite(r):
        return None
    return Num(float(r))


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    x, y = _num(a), _num(b)
    if x is not None and y is not None:
        return Num(x + y)
    if x == 0:
        return b
    if y == 0:
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    if y is not None and y < 0:
        return Sub(a, Num(-y))
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    x, y = _num(a), _num(b)
    if x is not None and y is not None:
        return Num(x - y)
    if y == 0:
        return a
    if x == 0:
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    x, y = _num(a), _num(b)
    if x is not None and y is not None:
        return Num(x * y)
    if x == 0 or y == 0:
        return ZERO
    if x == 1:
        return b
    if y == 1:
        return a
    if x == -1:
        return neg(b)
    if y == -1:
        return neg(a)
    if y is not None:  # keep constants on the left
        a, b = b, a
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    if isinstance(a, Num) and isinstance(b, Mul) and isinstance(b.left, Num):
        return mul(Num(a.value * b.left.value), b.right)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    x, y = _num(a), _num(b)
    if x is not None and y is not None and y != 0:
        return Num(x / y)
    if x == 0:
        return ZERO
    if y == 1:
        return a
    return Div(a, b)


def power(a: Expr, b: Expr) -> Expr:
    x, y = _num(a), _num(b)
    if x is not None and y is not None:
        folded = _fold(math.pow, x, y)
        if folded is not None:
            return folded
    if y == 0:
        return ONE
    if y == 1:
        return a
    return Pow(a, b)


def call(name: str, *args: Expr) -> Expr:
    if all(isinstance(a, Num) for a in args):
        fn = {"ln": math.log, "exp": math.exp, "sqrt": math.sqrt, "pow": math.pow}[name]
        folded = _fold(fn, *(a.value for a in args))
        if folded is not None:
            return folded
    return Call(name, tuple(args))


def _d_pow(base: Expr, expo: Expr, node: Expr) -> Expr:
    db, de = differentiate(base), differentiate(expo)
    c = _num(expo)
    if c is not None:
        return mul(mul(Num(c), power(base, Num(c - 1.0))), db)
    # d(a^b) = a^b (b' ln a + b a'/a)
    return mul(node, add(mul(de, call("ln", base)), div(mul(expo, db), base)))


def differentiate(e: Expr) -> Expr:
    """Symbolic d/dt with constant folding and trivial-factor elimination."""
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Neg):
        return neg(differentiate(e.arg))
    if isinstance(e, Add):
        return add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Mul):
        return add(mul(differentiate(e.left), e.right), mul(e.left, differentiate(e.right)))
    if isinstance(e, Div):
        num = sub(mul(differentiate(e.left), e.right), mul(e.left, differentiate(e.right)))
        return div(num, power(e.right, Num(2.0)))
    if isinstance(e, Pow):
        return _d_pow(e.base, e.exponent, e)
    if isinstance(e, Call):
        a = e.args[0]
        da = differentiate(a)
        if e.name == "ln":
            return div(da, a)
        if e.name == "exp":
            return mul(e, da)
        if e.name == "sqrt":
            return div(da, mul(Num(2.0), e))
        return _d_pow(a, e.args[1], e)
    raise TypeError(f"not an expression node: {e!r}")
