"""
Truncated Taylor (jet) arithmetic, a finite-difference oracle, and the
expression language used by curve and field files.

A Jet stores normalized Taylor coefficients c_alpha = d^alpha f / alpha! over
all monomials of total degree <= order in a closed variable set:

  - chart variables     rho, t, theta
  - Cartesian variables x1, x2, x3, x4

Mixing the two sets in one jet is rejected.

Expression grammar (whitespace ignored):

  expr  := term (("+" | "-") term)*
  term  := unary (("*" | "/") unary)*
  unary := "-" unary | power
  power := atom ("^" ["-"] integer)?
  atom  := number | ident | ident "(" expr ")" | "(" expr ")"

Functions: sin, cos, exp, sqrt. The identifier `pi` is a constant.
"""

from __future__ import annotations

import logging
import math
import numbers
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DomainError,
    ExprSyntaxError,
    JetError,
    StepUnderflow,
    UnboundVariable,
    UnknownFunction,
    VariableSetError,
)

log = logging.getLogger("hypersurface_laplacians.jetcalc")

CHART_VARIABLES: Tuple[str, ...] = ("rho", "t", "theta")
CARTESIAN_VARIABLES: Tuple[str, ...] = ("x1", "x2", "x3", "x4")
VARIABLE_SETS = (CHART_VARIABLES, CARTESIAN_VARIABLES)
MAX_ORDER = 3
CONSTANTS = {"pi": math.pi}


# -----------------------------------------------------------------------------
# Monomial tables
# -----------------------------------------------------------------------------
@lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> Tuple[Tuple[int, ...], ...]:
    """All exponent tuples of total degree <= order, sorted by degree."""
    out: List[Tuple[int, ...]] = []
    for deg in range(order + 1):
        same = [m for m in product(range(deg + 1), repeat=nvars) if sum(m) == deg]
        out.extend(sorted(same, reverse=True))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> Dict[Tuple[int, ...], int]:
    return {m: i for i, m in enumerate(monomials(nvars, order))}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    mons = monomials(nvars, order)
    idx = _index(nvars, order)
    ii: List[int] = []
    jj: List[int] = []
    kk: List[int] = []
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            if sum(a) + sum(b) > order:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(idx[tuple(x + y for x, y in zip(a, b))])
    return np.array(ii), np.array(jj), np.array(kk), len(mons)


@lru_cache(maxsize=None)
def _diff_table(nvars: int, order: int, var: int) -> Tuple[np.ndarray, np.ndarray]:
    src = _index(nvars, order)
    mons = monomials(nvars, order - 1)
    pos: List[int] = []
    fac: List[float] = []
    for m in mons:
        up = list(m)
        up[var] += 1
        pos.append(src[tuple(up)])
        fac.append(float(m[var] + 1))
    return np.array(pos), np.array(fac)


def _size(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


def canonical_variables(names: Sequence[str]) -> Tuple[str, ...]:
    """Order `names` inside their closed variable set; reject mixtures."""
    names = list(dict.fromkeys(names))
    for vs in VARIABLE_SETS:
        if all(n in vs for n in names):
            return tuple(v for v in vs if v in names)
    raise VariableSetError(f"variables {names} mix or leave the closed sets {VARIABLE_SETS}")


# -----------------------------------------------------------------------------
# Jet
# -----------------------------------------------------------------------------
Scalar = Union[float, int]


class Jet:
    """Truncated multivariate Taylor expansion at a fixed point."""

    __slots__ = ("variables", "order", "coeffs")

    def __init__(self, variables: Tuple[str, ...], order: int, coeffs: np.ndarray):
        if not 0 <= order <= MAX_ORDER:
            raise JetError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        self.variables = tuple(variables)
        self.order = int(order)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != (_size(len(self.variables), self.order),):
            raise JetError("coefficient table does not match variables/order")

    # -- constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, value: Scalar, variables: Sequence[str], order: int) -> "Jet":
        c = np.zeros(_size(len(variables), order))
        c[0] = float(value)
        return cls(tuple(variables), order, c)

    @classmethod
    def variable(cls, name: str, value: Scalar, variables: Sequence[str], order: int) -> "Jet":
        variables = tuple(variables)
        if name not in variables:
            raise VariableSetError(f"'{name}' is not one of {variables}")
        jet = cls.constant(value, variables, order)
        if order >= 1:
            unit = tuple(1 if v == name else 0 for v in variables)
            jet.coeffs[_index(len(variables), order)[unit]] = 1.0
        return jet

    # -- accessors ------------------------------------------------------------
    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, multi_index: Sequence[int]) -> float:
        return float(self.coeffs[_index(len(self.variables), self.order)[tuple(multi_index)]])

    def derivative(self, *names: str) -> float:
        """Partial derivative, e.g. jet.derivative("t", "t") is d^2/dt^2."""
        alpha = [0] * len(self.variables)
        for n in names:
            alpha[self.variables.index(n)] += 1
        if sum(alpha) > self.order:
            raise JetError(f"derivative of order {sum(alpha)} exceeds jet order {self.order}")
        scale = math.prod(math.factorial(a) for a in alpha)
        return self.coefficient(alpha) * scale

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise JetError("cannot raise the order of a jet")
        n = _size(len(self.variables), order)
        return Jet(self.variables, order, self.coeffs[:n].copy())

    def d(self, name: str) -> "Jet":
        """Differentiate in `name`; the result has order - 1."""
        if self.order == 0:
            raise JetError("cannot differentiate an order-0 jet")
        var = self.variables.index(name)
        pos, fac = _diff_table(len(self.variables), self.order, var)
        return Jet(self.variables, self.order - 1, self.coeffs[pos] * fac)

    def embed(self, variables: Sequence[str]) -> "Jet":
        """Re-express this jet in a superset of its variables."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        slots = [variables.index(v) for v in self.variables]
        idx = _index(len(variables), self.order)
        out = np.zeros(_size(len(variables), self.order))
        for m, c in zip(monomials(len(self.variables), self.order), self.coeffs):
            big = [0] * len(variables)
            for s, e in zip(slots, m):
                big[s] = e
            out[idx[tuple(big)]] = c
        return Jet(variables, self.order, out)

    # -- arithmetic -----------------------------------------------------------
    def _align(self, other: "Jet") -> Tuple["Jet", "Jet"]:
        if other.variables != self.variables:
            raise VariableSetError(f"jets over {self.variables} and {other.variables} cannot be combined")
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order)

    def __add__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.variables, a.order, a.coeffs + b.coeffs)
        if isinstance(other, numbers.Real):
            c = self.coeffs.copy()
            c[0] += float(other)
            return Jet(self.variables, self.order, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.variables, self.order, -self.coeffs)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other: Any) -> "Jet":
        if isinstance(other, (Jet, numbers.Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other: Any) -> "Jet":
        if isinstance(other, numbers.Real):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            a, b = self._align(other)
            ii, jj, kk, n = _mul_table(len(a.variables), a.order)
            return Jet(a.variables, a.order, np.bincount(kk, weights=a.coeffs[ii] * b.coeffs[jj], minlength=n))
        if isinstance(other, numbers.Real):
            return Jet(self.variables, self.order, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, numbers.Real):
            if other == 0:
                raise DomainError("division by zero")
            return Jet(self.variables, self.order, self.coeffs / float(other))
        return NotImplemented

    def __rtruediv__(self, other: Any) -> "Jet":
        if isinstance(other, numbers.Real):
            return self.reciprocal() * float(other)
        return NotImplemented

    def __pow__(self, exponent: Any) -> "Jet":
        if isinstance(exponent, numbers.Integral) or (isinstance(exponent, numbers.Real) and float(exponent).is_integer()):
            n = int(exponent)
            if n < 0:
                return self.reciprocal() ** (-n)
            result = Jet.constant(1.0, self.variables, self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if isinstance(exponent, numbers.Real):
            return self.power(float(exponent))
        return NotImplemented

    # -- univariate composition ----------------------------------------------
    def compose(self, taylor: Sequence[float]) -> "Jet":
        """g(self) from taylor[k] = g^(k)(self.value) for k = 0..order."""
        delta = Jet(self.variables, self.order, self.coeffs.copy())
        delta.coeffs[0] = 0.0
        return Jet.series(
            [taylor[k] / math.factorial(k) for k in range(self.order + 1)], delta
        )

    @staticmethod
    def series(coeffs: Sequence[float], inner: "Jet") -> "Jet":
        """sum_k coeffs[k] * inner^k by Horner; inner must have zero value."""
        result = Jet.constant(coeffs[-1] if len(coeffs) else 0.0, inner.variables, inner.order)
        for c in reversed(list(coeffs)[:-1]):
            result = result * inner + float(c)
        return result

    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self.compose([s, c, -s, -c][: self.order + 1])

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self.compose([c, -s, -c, s][: self.order + 1])

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def power(self, r: float) -> "Jet":
        x = self.value
        if x <= 0.0 and not (x == 0.0 and self.order == 0 and r >= 0):
            raise DomainError(f"non-integer power {r} of non-positive value {x}")
        taylor = []
        falling = 1.0
        for k in range(self.order + 1):
            taylor.append(falling * x ** (r - k))
            falling *= r - k
        return self.compose(taylor)

    def sqrt(self) -> "Jet":
        if self.value < 0.0 or (self.value == 0.0 and self.order > 0):
            raise DomainError(f"sqrt of value {self.value}")
        return self.power(0.5)

    def reciprocal(self) -> "Jet":
        x = self.value
        if x == 0.0:
            raise DomainError("division by a jet with zero value part")
        taylor = []
        falling = 1.0
        for k in range(self.order + 1):
            taylor.append(falling / x ** (k + 1))
            falling *= -(k + 1)
        return self.compose(taylor)

    def __repr__(self) -> str:
        return f"Jet(vars={self.variables}, order={self.order}, value={self.value:.6g})"


def jet_vector(items: Sequence[Any]) -> np.ndarray:
    """Pack jets (or floats) into a 1-D object array."""
    out = np.empty(len(items), dtype=object)
    for i, it in enumerate(items):
        out[i] = it
    return out


def values(vec: Sequence[Any]) -> np.ndarray:
    """Float values of a vector of jets/floats."""
    return np.array([v.value if isinstance(v, Jet) else float(v) for v in vec])


def value_of(x: Any) -> float:
    return x.value if isinstance(x, Jet) else float(x)


# -----------------------------------------------------------------------------
# Function table (floats/arrays via numpy, jets via Jet methods)
# -----------------------------------------------------------------------------
def _np_sqrt(x: Any) -> Any:
    if np.any(np.asarray(x) < 0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(x)


FUNCTIONS: Dict[str, Tuple[Callable[[Any], Any], Callable[[Jet], Jet]]] = {
    "sin": (np.sin, Jet.sin),
    "cos": (np.cos, Jet.cos),
    "exp": (np.exp, Jet.exp),
    "sqrt": (_np_sqrt, Jet.sqrt),
}


def apply_function(name: str, x: Any) -> Any:
    num_fn, jet_fn = FUNCTIONS[name]
    return jet_fn(x) if isinstance(x, Jet) else num_fn(x)


def _divide(a: Any, b: Any) -> Any:
    if not isinstance(b, Jet) and np.any(np.asarray(b) == 0):
        raise DomainError("division by zero")
    return a / b


def _power(base: Any, n: int) -> Any:
    if isinstance(base, Jet):
        return base ** n
    if n < 0 and np.any(np.asarray(base) == 0):
        raise DomainError("negative power of zero")
    return base ** n if n >= 0 else 1.0 / base ** (-n)


# -----------------------------------------------------------------------------
# Expression trees
# -----------------------------------------------------------------------------
Span = Tuple[int, int]


class ExprTree:
    """Base of the expression node types; equality ignores source spans."""

    prec = 5

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        raise NotImplementedError

    def free_variables(self) -> frozenset:
        raise NotImplementedError

    def derivative(self, var: str) -> "ExprTree":
        raise NotImplementedError

    def __str__(self) -> str:
        return print_expr(self)


@dataclass(frozen=True, eq=True)
class Num(ExprTree):
    value: float
    span: Span = field(default=(0, 0), compare=False, repr=False)

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        return self.value

    def free_variables(self) -> frozenset:
        return frozenset()

    def derivative(self, var: str) -> ExprTree:
        return Num(0.0)


@dataclass(frozen=True, eq=True)
class Var(ExprTree):
    name: str
    span: Span = field(default=(0, 0), compare=False, repr=False)

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        if self.name in env:
            return env[self.name]
        if self.name in CONSTANTS:
            return CONSTANTS[self.name]
        raise UnboundVariable(self.name)

    def free_variables(self) -> frozenset:
        return frozenset() if self.name in CONSTANTS else frozenset([self.name])

    def derivative(self, var: str) -> ExprTree:
        return Num(1.0 if self.name == var else 0.0)


@dataclass(frozen=True, eq=True)
class Neg(ExprTree):
    operand: ExprTree
    span: Span = field(default=(0, 0), compare=False, repr=False)
    prec = 3

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        return -self.operand.evaluate(env)

    def free_variables(self) -> frozenset:
        return self.operand.free_variables()

    def derivative(self, var: str) -> ExprTree:
        return _neg(self.operand.derivative(var))


@dataclass(frozen=True, eq=True)
class BinOp(ExprTree):
    op: str
    left: ExprTree
    right: ExprTree
    span: Span = field(default=(0, 0), compare=False, repr=False)

    @property
    def prec(self) -> int:  # type: ignore[override]
        return 1 if self.op in "+-" else 2

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return _divide(a, b)

    def free_variables(self) -> frozenset:
        return self.left.free_variables() | self.right.free_variables()

    def derivative(self, var: str) -> ExprTree:
        da, db = self.left.derivative(var), self.right.derivative(var)
        if self.op == "+":
            return _add(da, db)
        if self.op == "-":
            return _sub(da, db)
        if self.op == "*":
            return _add(_mul(da, self.right), _mul(self.left, db))
        # (a/b)' = a'/b - a b'/b^2
        return _sub(_div(da, self.right), _div(_mul(self.left, db), Pow(self.right, 2)))


@dataclass(frozen=True, eq=True)
class Pow(ExprTree):
    base: ExprTree
    exponent: int
    span: Span = field(default=(0, 0), compare=False, repr=False)
    prec = 4

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        return _power(self.base.evaluate(env), self.exponent)

    def free_variables(self) -> frozenset:
        return self.base.free_variables()

    def derivative(self, var: str) -> ExprTree:
        db = self.base.derivative(var)
        if self.exponent == 0:
            return Num(0.0)
        lowered = self.base if self.exponent == 2 else Pow(self.base, self.exponent - 1)
        return _mul(_mul(Num(float(self.exponent)), lowered), db)


@dataclass(frozen=True, eq=True)
class Call(ExprTree):
    func: str
    arg: ExprTree
    span: Span = field(default=(0, 0), compare=False, repr=False)

    def evaluate(self, env: Mapping[str, Any]) -> Any:
        return apply_function(self.func, self.arg.evaluate(env))

    def free_variables(self) -> frozenset:
        return self.arg.free_variables()

    def derivative(self, var: str) -> ExprTree:
        da = self.arg.derivative(var)
        if self.func == "sin":
            outer: ExprTree = Call("cos", self.arg)
        elif self.func == "cos":
            outer = _neg(Call("sin", self.arg))
        elif self.func == "exp":
            outer = self
        else:
            outer = _div(Num(0.5), self)
        return _mul(outer, da)


def _is_num(e: ExprTree, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _neg(a: ExprTree) -> ExprTree:
    if isinstance(a, Num):
        return Num(-a.value) if a.value != 0 else Num(0.0)
    return Neg(a)


def _add(a: ExprTree, b: ExprTree) -> ExprTree:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a: ExprTree, b: ExprTree) -> ExprTree:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a: ExprTree, b: ExprTree) -> ExprTree:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a: ExprTree, b: ExprTree) -> ExprTree:
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


# -----------------------------------------------------------------------------
# Printer
# -----------------------------------------------------------------------------
def _format_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def print_expr(e: ExprTree) -> str:
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({print_expr(e.arg)})"
    if isinstance(e, Neg):
        inner = print_expr(e.operand)
        return f"-({inner})" if e.operand.prec < Neg.prec else f"-{inner}"
    if isinstance(e, Pow):
        base = print_expr(e.base)
        if e.base.prec < 5:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, BinOp):
        left = print_expr(e.left)
        right = print_expr(e.right)
        if e.left.prec < e.prec:
            left = f"({left})"
        if e.right.prec <= e.prec:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# -----------------------------------------------------------------------------
# Tokenizer + recursive-descent parser
# -----------------------------------------------------------------------------
TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | end
    text: str
    offset: int


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            pos = len(source)
            break
        m = TOKEN_RE.match(source, pos)
        if not m or m.lastgroup is None:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad, source)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None) -> ExprSyntaxError:
        tok = tok or self.peek()
        return ExprSyntaxError(message, tok.offset, self.source)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected '{text}', found {found}")
        return self.advance()

    def parse(self) -> ExprTree:
        if self.peek().kind == "end":
            raise self.error("empty expression")
        tree = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected token {self.peek().text!r}")
        return tree

    def expr(self) -> ExprTree:
        left = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            right = self.term()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def term(self) -> ExprTree:
        left = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            right = self.unary()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> ExprTree:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            operand = self.unary()
            return Neg(operand, (tok.offset, operand.span[1]))
        return self.power()

    def power(self) -> ExprTree:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.advance()
                sign = -1
            num = self.peek()
            if num.kind != "number" or not num.text.isdigit():
                raise self.error("integer exponent expected", num)
            self.advance()
            return Pow(base, sign * int(num.text), (base.span[0], num.offset + len(num.text)))
        return base

    def atom(self) -> ExprTree:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), (tok.offset, tok.offset + len(tok.text)))
        if tok.kind == "ident":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunction(tok.text, tok.offset)
                self.advance()
                arg = self.expr()
                close = self.expect(")")
                return Call(tok.text, arg, (tok.offset, close.offset + 1))
            return Var(tok.text, (tok.offset, tok.offset + len(tok.text)))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {tok.text!r}")


def parse_expr(text: str) -> ExprTree:
    """Parse `text` into an ExprTree (raises ExprSyntaxError/UnknownFunction)."""
    return _Parser(text).parse()


def as_expr(expr: Union[str, ExprTree, float, int]) -> ExprTree:
    if isinstance(expr, ExprTree):
        return expr
    if isinstance(expr, numbers.Real):
        return parse_expr(_format_number(float(expr)))
    return parse_expr(str(expr))


# -----------------------------------------------------------------------------
# Lifting and the finite-difference oracle
# -----------------------------------------------------------------------------
def jet_lift(
    expr: Union[str, ExprTree],
    point: Mapping[str, float],
    order: int,
    variables: Optional[Sequence[str]] = None,
) -> Jet:
    """Taylor coefficients of `expr` at `point` up to `order`."""
    tree = as_expr(expr)
    if not 0 <= order <= MAX_ORDER:
        raise JetError(f"order must be in 0..{MAX_ORDER}, got {order}")
    variables = canonical_variables(variables if variables is not None else list(point))
    for name in tree.free_variables():
        if name not in point:
            raise UnboundVariable(name)
    env = {name: Jet.variable(name, point[name], variables, order) for name in variables if name in point}
    out = tree.evaluate(env)
    if isinstance(out, Jet):
        return out
    return Jet.constant(float(out), variables, order)


@dataclass(frozen=True)
class FDEstimate:
    value: Any
    error: float
    step: float


MIN_STEP = 1e-10


def fd_directional(
    f: Callable[[np.ndarray], Any],
    point: Sequence[float],
    direction: Sequence[float],
    order: int = 1,
    step: Optional[float] = None,
) -> FDEstimate:
    """
    Central differences at steps h and h/2 with one Richardson level.

    The derivative is taken along `direction` as given (not normalized), so
    for order 2 the result is d^2/ds^2 f(point + s*direction) at s = 0.
    """
    if order not in (1, 2):
        raise JetError(f"finite-difference order must be 1 or 2, got {order}")
    x = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        raise JetError("finite-difference direction must be nonzero")
    h = 1e-4 * max(1.0, float(np.linalg.norm(x))) if step is None else float(step)
    if h / 2 < MIN_STEP:
        raise StepUnderflow(f"requested step {h:.3e} is below {MIN_STEP:.0e}")
    u = d / norm

    def central(hh: float) -> np.ndarray:
        fp = np.asarray(f(x + hh * u), dtype=float)
        fm = np.asarray(f(x - hh * u), dtype=float)
        if order == 1:
            return (fp - fm) / (2 * hh)
        return (fp - 2 * np.asarray(f(x), dtype=float) + fm) / (hh * hh)

    coarse = central(h)
    fine = central(h / 2)
    extrapolated = fine + (fine - coarse) / 3.0
    err = float(np.max(np.abs(fine - coarse))) / 3.0
    scale = norm ** order
    value = extrapolated * scale
    if np.ndim(value) == 0:
        value = float(value)
    return FDEstimate(value=value, error=err * scale, step=h)
