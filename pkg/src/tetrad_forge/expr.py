"""Scalar expressions over coordinates and parameters.

Expressions are small immutable ASTs.  They are parsed from infix text,
differentiated exactly, printed back to text, and evaluated either by a
tree walk (slow, precise error reporting) or through a compiled Python
function (fast).  Simplification is limited to constant folding and
elimination of 0/1 identities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Expression", "Const", "Sym", "Unary", "Binary", "SymbolTable",
    "ExprSyntaxError", "UndeclaredSymbolError", "DomainError",
    "parse", "differentiate", "evaluate", "derivative", "to_text",
    "compile_many", "const", "sym",
]

UNARY_FUNCS = ("sin", "cos", "exp", "ln", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")
NAMED_CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    """Malformed expression text.  ``offset`` is the 1-based character column."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UndeclaredSymbolError(ValueError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"undeclared symbol '{name}' at offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the real domain of an operation."""

    def __init__(self, message: str, subexpression: "Expression"):
        super().__init__(f"{message} in '{to_text(subexpression)}'")
        self.subexpression = subexpression


@dataclass(frozen=True)
class SymbolTable:
    coordinates: tuple[str, ...]
    parameters: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        names = self.coordinates + self.parameters
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in {names}")
        for n in names:
            if n in UNARY_FUNCS or n in NAMED_CONSTANTS:
                raise ValueError(f"symbol name '{n}' is reserved")

    def kind(self, name: str) -> str | None:
        if name in self.coordinates:
            return "coord"
        if name in self.parameters:
            return "param"
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return self.coordinates + self.parameters


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Expression:
    __slots__ = ()

    def free_symbols(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)

    # convenience algebra, mainly for building test fields
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __pow__(self, other):
        return power(self, _lift(other))


def _lift(x) -> Expression:
    if isinstance(x, Expression):
        return x
    return Const(float(x))


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: float

    def free_symbols(self):
        return frozenset()


@dataclass(frozen=True, eq=True)
class Sym(Expression):
    name: str
    kind: str = "coord"  # "coord" | "param"

    def free_symbols(self):
        return frozenset((self.name,))


@dataclass(frozen=True, eq=True)
class Unary(Expression):
    op: str
    arg: Expression
    _free: frozenset = field(default=None, compare=False, repr=False)
    _hash: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in UNARY_FUNCS + ("neg",):
            raise ValueError(f"unknown unary operator {self.op!r}")
        object.__setattr__(self, "_free", self.arg.free_symbols())
        object.__setattr__(self, "_hash", hash((self.op, self.arg)))

    def __hash__(self):
        return self._hash

    def free_symbols(self):
        return self._free


@dataclass(frozen=True, eq=True)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression
    _free: frozenset = field(default=None, compare=False, repr=False)
    _hash: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")
        object.__setattr__(
            self, "_free", self.left.free_symbols() | self.right.free_symbols())
        object.__setattr__(self, "_hash", hash((self.op, self.left, self.right)))

    def __hash__(self):
        return self._hash

    def free_symbols(self):
        return self._free


def const(v: float) -> Const:
    return Const(float(v))


def sym(name: str, kind: str = "coord") -> Sym:
    return Sym(name, kind)


ZERO = Const(0.0)
ONE = Const(1.0)


def _is(e: Expression, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


# Smart constructors: constant folding and 0/1 identities only.

def neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def add(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Binary("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return Binary("-", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return Binary("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return Binary("/", a, b)


def power(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(_pow(a.value, b.value))
        except (ValueError, ZeroDivisionError, OverflowError):
            return Binary("^", a, b)
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    return Binary("^", a, b)


def unary(op: str, a: Expression) -> Expression:
    if op == "neg":
        return neg(a)
    if isinstance(a, Const):
        try:
            return Const(_UNARY_IMPL[op](a.value))
        except (ValueError, ZeroDivisionError, OverflowError):
            pass
    return Unary(op, a)


def _pow(a: float, b: float) -> float:
    if float(b).is_integer():
        if a == 0.0 and b < 0:
            raise ZeroDivisionError("zero to a negative power")
        return a ** int(b)
    if a <= 0.0:
        if a == 0.0 and b > 0:
            return 0.0
        raise ValueError("non-integer power of a non-positive base")
    return a ** b


def _ln(a: float) -> float:
    if a <= 0.0:
        raise ValueError("ln of a non-positive number")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise ValueError("sqrt of a negative number")
    return math.sqrt(a)


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise ZeroDivisionError("division by zero")
    return a / b


_UNARY_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp,
    "ln": _ln, "sqrt": _sqrt, "neg": lambda v: -v,
}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@dataclass
class _Tok:
    kind: str  # num, name, op, lpar, rpar, comma, end
    text: str
    pos: int  # 0-based


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            lit = text[i:j]
            try:
                float(lit)
            except ValueError:
                raise ExprSyntaxError(f"bad number '{lit}'", i + 1, text) from None
            toks.append(_Tok("num", lit, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            toks.append(_Tok("op", "^", i))
            i += 2
            continue
        if c in "+-*/^":
            toks.append(_Tok("op", c, i))
        elif c == "(":
            toks.append(_Tok("lpar", c, i))
        elif c == ")":
            toks.append(_Tok("rpar", c, i))
        else:
            raise ExprSyntaxError(f"unexpected character '{c}'", i + 1, text)
        i += 1
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    # add := mul (('+'|'-') mul)*
    # mul := unary (('*'|'/') unary)*
    # unary := '-' unary | '+' unary | pow
    # pow := atom ('^' unary)?          (right associative, binds tighter than '-')

    def __init__(self, text: str, symbols: SymbolTable):
        self.text = text
        self.symbols = symbols
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        what = "end of input" if tok.kind == "end" else f"'{tok.text}'"
        raise ExprSyntaxError(f"{msg}, found {what}", tok.pos + 1, self.text)

    def parse(self) -> Expression:
        e = self.add()
        if self.tok.kind != "end":
            self.error("expected operator")
        return e

    def add(self) -> Expression:
        e = self.mul()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            r = self.mul()
            e = Binary(op, e, r)
        return e

    def mul(self) -> Expression:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            r = self.unary()
            e = Binary(op, e, r)
        return e

    def unary(self) -> Expression:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            a = self.unary()
            return Unary("neg", a) if op == "-" else a
        return self.pow()

    def pow(self) -> Expression:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "lpar":
            self.i += 1
            e = self.add()
            if self.tok.kind != "rpar":
                self.error("expected ')'")
            self.i += 1
            return e
        if tok.kind == "name":
            self.i += 1
            if tok.text in UNARY_FUNCS:
                if self.tok.kind != "lpar":
                    self.error(f"expected '(' after {tok.text}")
                self.i += 1
                arg = self.add()
                if self.tok.kind != "rpar":
                    self.error("expected ')'")
                self.i += 1
                return Unary(tok.text, arg)
            if tok.text in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[tok.text])
            kind = self.symbols.kind(tok.text)
            if kind is None:
                raise UndeclaredSymbolError(tok.text, tok.pos + 1)
            return Sym(tok.text, kind)
        self.error("expected operand")


def parse(text: str, symbols: SymbolTable) -> Expression:
    """Parse infix ``text`` into an Expression.

    Only names declared in ``symbols`` (plus ``pi`` and the unary
    functions sin, cos, exp, ln, sqrt) are accepted.  Both ``^`` and
    ``**`` denote powers.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 1, text or "")
    return _Parser(text, symbols).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_text(e: Expression) -> str:
    """Render ``e`` as text that parses back to an evaluation-equivalent tree."""
    return _fmt(e)[0]


def _fmt(e: Expression) -> tuple[str, int]:
    if isinstance(e, Const):
        v = e.value
        s = repr(v) if not v.is_integer() or abs(v) >= 1e16 else str(int(v))
        if v < 0:
            return "(" + s + ")", 5
        return s, 5
    if isinstance(e, Sym):
        return e.name, 5
    if isinstance(e, Unary):
        if e.op == "neg":
            s, p = _fmt(e.arg)
            if p <= _PREC["neg"]:
                s = f"({s})"
            return "-" + s, _PREC["neg"]
        return f"{e.op}({_fmt(e.arg)[0]})", 5
    if isinstance(e, Binary):
        p = _PREC[e.op]
        ls, lp = _fmt(e.left)
        rs, rp = _fmt(e.right)
        if e.op == "^":
            if lp <= p:
                ls = f"({ls})"
            if rp < p:
                rs = f"({rs})"
        else:
            if lp < p:
                ls = f"({ls})"
            if rp < p or (rp == p and e.op in "-/"):
                rs = f"({rs})"
        return f"{ls} {e.op} {rs}" if p == 1 else f"{ls}{e.op}{rs}", p
    raise TypeError(f"not an Expression: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def differentiate(e: Expression, coord: str) -> Expression:
    """Exact partial derivative of ``e`` with respect to coordinate ``coord``."""
    if coord not in e.free_symbols():
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == coord and e.kind == "coord" else ZERO
    if isinstance(e, Unary):
        a = e.arg
        da = differentiate(a, coord)
        op = e.op
        if op == "neg":
            return neg(da)
        if op == "sin":
            return mul(unary("cos", a), da)
        if op == "cos":
            return neg(mul(unary("sin", a), da))
        if op == "exp":
            return mul(e, da)
        if op == "ln":
            return div(da, a)
        if op == "sqrt":
            return div(da, mul(Const(2.0), e))
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da = differentiate(a, coord)
        db = differentiate(b, coord)
        op = e.op
        if op == "+":
            return add(da, db)
        if op == "-":
            return sub(da, db)
        if op == "*":
            return add(mul(da, b), mul(a, db))
        if op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
        if op == "^":
            if coord not in b.free_symbols():
                # d(a^c) = c a^(c-1) da
                return mul(mul(b, power(a, sub(b, ONE))), da)
            # d(a^b) = a^b (db ln a + b da / a)
            return mul(e, add(mul(db, unary("ln", a)), div(mul(b, da), a)))
    raise TypeError(f"cannot differentiate {e!r}")


def derivative(e: Expression, coords: Sequence[str]) -> Expression:
    """Repeated partial derivative along each name of ``coords`` in turn."""
    for c in sorted(coords):
        e = differentiate(e, c)
    return e


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(e: Expression, point: Sequence[float] | Mapping[str, float],
             params: Mapping[str, float] | None = None,
             coordinates: Sequence[str] | None = None) -> float:
    """Evaluate ``e`` by tree walk.

    ``point`` is either a mapping name -> value, or four values matched to
    ``coordinates`` (defaults to the coordinate symbols in ``e`` sorted,
    which is only meaningful when the caller passes the coordinate names).
    """
    env = _environment(point, params, coordinates)
    return _walk(e, env)


def _environment(point, params, coordinates) -> dict[str, float]:
    if isinstance(point, Mapping):
        env = dict(point)
    else:
        if coordinates is None:
            raise ValueError("coordinate names required for positional points")
        if len(point) != len(coordinates):
            raise ValueError("point and coordinate names differ in length")
        env = {c: float(v) for c, v in zip(coordinates, point)}
    if params:
        env.update(params)
    return env


def _walk(e: Expression, env: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Sym):
        try:
            return float(env[e.name])
        except KeyError:
            raise KeyError(f"symbol '{e.name}' is not bound") from None
    if isinstance(e, Unary):
        a = _walk(e.arg, env)
        try:
            return _UNARY_IMPL[e.op](a)
        except (ValueError, OverflowError) as exc:
            raise DomainError(str(exc), e) from None
    if isinstance(e, Binary):
        a = _walk(e.left, env)
        b = _walk(e.right, env)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return _div(a, b)
            return _pow(a, b)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(str(exc), e) from None
    raise TypeError(f"not an Expression: {e!r}")


def _pysrc(e: Expression, names: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Sym):
        return names[e.name]
    if isinstance(e, Unary):
        a = _pysrc(e.arg, names)
        if e.op == "neg":
            return f"(-{a})"
        return f"_{e.op}({a})"
    a = _pysrc(e.left, names)
    b = _pysrc(e.right, names)
    if e.op == "/":
        return f"_div({a}, {b})"
    if e.op == "^":
        if isinstance(e.right, Const) and e.right.value == 2.0:
            return f"({a})*({a})"
        return f"_pow({a}, {b})"
    return f"({a} {e.op} {b})"


_FUNC_ENV = {
    "_sin": math.sin, "_cos": math.cos, "_exp": math.exp, "_ln": _ln,
    "_sqrt": _sqrt, "_div": _div, "_pow": _pow,
}


def compile_many(exprs: Iterable[Expression], argnames: Sequence[str]
                 ) -> Callable[..., list[float]]:
    """Compile expressions into one function of ``argnames`` returning a list.

    Domain failures are re-run through the tree walker so that the raised
    DomainError names the offending subexpression.
    """
    exprs = list(exprs)
    names = {n: f"a{i}" for i, n in enumerate(argnames)}
    body = ", ".join(_pysrc(e, names) for e in exprs)
    src = f"def _f({', '.join(names.values())}):\n    return [{body}]\n"
    ns = dict(_FUNC_ENV)
    exec(compile(src, "<tetrad_forge.expr>", "exec"), ns)
    fast = ns["_f"]

    def run(*args: float) -> list[float]:
        try:
            return fast(*args)
        except (ValueError, ZeroDivisionError, OverflowError):
            env = dict(zip(argnames, args))
            for e in exprs:
                _walk(e, env)
            raise
    return run
