"""Expression trees for even-coordinate coefficient functions.

The AST covers constants, variables, the rational operations, integer
powers, unary negation and the function heads exp/log/sin/cos.  That is
enough to express every coefficient in the scenarios we care about while
keeping symbolic differentiation closed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainEvalError, ExprSyntaxError, UndeclaredVariableError

FUNCTIONS = ("exp", "log", "sin", "cos")

_REAL_FUNCS = {"exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}
_COMPLEX_FUNCS = {"exp": cmath.exp, "log": cmath.log, "sin": cmath.sin, "cos": cmath.cos}


class Expr:
    __slots__ = ()

    def __str__(self):
        return to_str(self)

    def __repr__(self):
        return f"<Expr {to_str(self)}>"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: complex

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    operand: Expr

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Call(Expr):
    func: str
    arg: Expr

    def __str__(self):
        return to_str(self)


def _cached_hash(self):
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash(
            (type(self),) + tuple(getattr(self, f) for f in self.__dataclass_fields__)
        )
        object.__setattr__(self, "_hash", h)
    return h


# nodes are immutable and hashed constantly by the memoisation caches;
# cache the hash on first use instead of rehashing the whole subtree
for _cls in (Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call):
    _cls.__hash__ = _cached_hash
del _cls


ZERO = Const(0)
ONE = Const(1)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


# -- smart constructors (constant folding, 0/1 identities) --------------------


def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return ZERO
    if is_one(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and exponent < 0:
            return Pow(base, exponent)  # fold would divide by zero; keep symbolic
        return Const(base.value**exponent)
    return Pow(base, exponent)


def const(value) -> Expr:
    return Const(value)


def var(name) -> Expr:
    return Var(name)


# -- differentiation ----------------------------------------------------------


def diff(e: Expr, name: str) -> Expr:
    """Exact symbolic derivative of e with respect to the variable name."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == name else ZERO
    if isinstance(e, Add):
        return add(diff(e.left, name), diff(e.right, name))
    if isinstance(e, Sub):
        return sub(diff(e.left, name), diff(e.right, name))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, name), e.right), mul(e.left, diff(e.right, name)))
    if isinstance(e, Div):
        num = sub(mul(diff(e.left, name), e.right), mul(e.left, diff(e.right, name)))
        return div(num, power(e.right, 2))
    if isinstance(e, Pow):
        return mul(
            mul(Const(e.exponent), power(e.base, e.exponent - 1)), diff(e.base, name)
        )
    if isinstance(e, Neg):
        return neg(diff(e.operand, name))
    if isinstance(e, Call):
        inner = diff(e.arg, name)
        if e.func == "exp":
            outer = Call("exp", e.arg)
        elif e.func == "log":
            return mul(div(ONE, e.arg), inner)
        elif e.func == "sin":
            outer = Call("cos", e.arg)
        elif e.func == "cos":
            outer = neg(Call("sin", e.arg))
        else:  # pragma: no cover
            raise ValueError(f"unknown function head {e.func}")
        return mul(outer, inner)
    raise TypeError(f"not an Expr: {e!r}")


def substitute_expr(e: Expr, mapping: dict) -> Expr:
    """Replace variables by expressions (mapping: name -> Expr)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Add):
        return add(substitute_expr(e.left, mapping), substitute_expr(e.right, mapping))
    if isinstance(e, Sub):
        return sub(substitute_expr(e.left, mapping), substitute_expr(e.right, mapping))
    if isinstance(e, Mul):
        return mul(substitute_expr(e.left, mapping), substitute_expr(e.right, mapping))
    if isinstance(e, Div):
        return div(substitute_expr(e.left, mapping), substitute_expr(e.right, mapping))
    if isinstance(e, Pow):
        return power(substitute_expr(e.base, mapping), e.exponent)
    if isinstance(e, Neg):
        return neg(substitute_expr(e.operand, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute_expr(e.arg, mapping))
    raise TypeError(f"not an Expr: {e!r}")


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Add, Sub, Mul, Div)):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Pow):
        return free_vars(e.base)
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, Call):
        return free_vars(e.arg)
    raise TypeError(f"not an Expr: {e!r}")


# -- evaluation ---------------------------------------------------------------


def eval_expr(e: Expr, point: dict, field: str = "real"):
    """Evaluate at point (name -> number) over the given ground field."""
    return compile_expr(e, field)(point)


@lru_cache(maxsize=None)
def compile_expr(e: Expr, field: str):
    """Compile an Expr into a fast closure env -> number.

    Domain failures (division by zero, log of zero/negative in the real
    field, overflow) surface as DomainEvalError carrying the offending
    subexpression.
    """
    funcs = _REAL_FUNCS if field == "real" else _COMPLEX_FUNCS

    if isinstance(e, Const):
        v = e.value
        if field == "real":
            if isinstance(v, complex):
                if v.imag != 0:
                    raise DomainEvalError("complex constant in real field", to_str(e))
                v = v.real
        else:
            v = complex(v)
        return lambda env, v=v: v
    if isinstance(e, Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, (Add, Sub, Mul, Div)):
        f = compile_expr(e.left, field)
        g = compile_expr(e.right, field)
        if isinstance(e, Add):
            return lambda env: f(env) + g(env)
        if isinstance(e, Sub):
            return lambda env: f(env) - g(env)
        if isinstance(e, Mul):
            return lambda env: f(env) * g(env)
        src = to_str(e)

        def _div(env):
            denom = g(env)
            if denom == 0:
                raise DomainEvalError("division by zero", src)
            return f(env) / denom

        return _div
    if isinstance(e, Pow):
        f = compile_expr(e.base, field)
        n = e.exponent
        src = to_str(e)

        def _pow(env):
            b = f(env)
            if b == 0 and n < 0:
                raise DomainEvalError("zero raised to a negative power", src)
            try:
                return b**n
            except OverflowError as exc:
                raise DomainEvalError(str(exc), src) from exc

        return _pow
    if isinstance(e, Neg):
        f = compile_expr(e.operand, field)
        return lambda env: -f(env)
    if isinstance(e, Call):
        f = compile_expr(e.arg, field)
        fn = funcs[e.func]
        src = to_str(e)

        def _call(env):
            x = f(env)
            try:
                return fn(x)
            except (ValueError, OverflowError) as exc:
                raise DomainEvalError(str(exc), src) from exc

        return _call
    raise TypeError(f"not an Expr: {e!r}")


# -- polynomial normal form ---------------------------------------------------


def as_polynomial(e: Expr, varnames: tuple):
    """Expand into {exponent tuple -> coefficient}, or None if not polynomial.

    Division is only accepted by nonzero constants; powers must be
    nonnegative.  Used by the exact branch of the equality policy.
    """
    idx = {n: i for i, n in enumerate(varnames)}
    zero = tuple(0 for _ in varnames)

    def go(e):
        if isinstance(e, Const):
            return {zero: complex(e.value)} if e.value != 0 else {}
        if isinstance(e, Var):
            if e.name not in idx:
                return None
            mono = list(zero)
            mono[idx[e.name]] = 1
            return {tuple(mono): 1.0 + 0j}
        if isinstance(e, (Add, Sub)):
            a, b = go(e.left), go(e.right)
            if a is None or b is None:
                return None
            s = 1 if isinstance(e, Add) else -1
            out = dict(a)
            for k, v in b.items():
                out[k] = out.get(k, 0) + s * v
            return {k: v for k, v in out.items() if v != 0}
        if isinstance(e, Mul):
            a, b = go(e.left), go(e.right)
            if a is None or b is None:
                return None
            out = {}
            for ka, va in a.items():
                for kb, vb in b.items():
                    k = tuple(x + y for x, y in zip(ka, kb))
                    out[k] = out.get(k, 0) + va * vb
            return {k: v for k, v in out.items() if v != 0}
        if isinstance(e, Div):
            if isinstance(e.right, Const) and e.right.value != 0:
                a = go(e.left)
                if a is None:
                    return None
                return {k: v / e.right.value for k, v in a.items()}
            return None
        if isinstance(e, Pow):
            if e.exponent < 0:
                return None
            a = go(e.base)
            if a is None:
                return None
            out = {zero: 1.0 + 0j}
            for _ in range(e.exponent):
                nxt = {}
                for ka, va in out.items():
                    for kb, vb in a.items():
                        k = tuple(x + y for x, y in zip(ka, kb))
                        nxt[k] = nxt.get(k, 0) + va * vb
                out = nxt
            return out
        if isinstance(e, Neg):
            a = go(e.operand)
            if a is None:
                return None
            return {k: -v for k, v in a.items()}
        if isinstance(e, Call):
            return None
        raise TypeError(f"not an Expr: {e!r}")

    return go(e)


def is_polynomial(e: Expr, varnames: tuple) -> bool:
    return as_polynomial(e, varnames) is not None


# -- printing -----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4, Call: 5, Const: 5, Var: 5}


def _const_str(v) -> str:
    if isinstance(v, complex):
        if v.imag == 0:
            v = v.real
        elif v.real == 0:
            return f"{_const_str(v.imag)}i"
        else:
            # general complex constants print as a sum; parenthesised by caller
            re, im = _const_str(v.real), _const_str(v.imag)
            return f"({re} + {im}i)" if v.imag >= 0 else f"({re} - {_const_str(-v.imag)}i)"
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_str(e: Expr) -> str:
    """Print so that parse(to_str(e)) returns a structurally equal AST."""

    def wrap(child, parent_prec, force=False):
        s = to_str(child)
        if force or _PREC[type(child)] < parent_prec or s.startswith("-"):
            return f"({s})"
        return s

    if isinstance(e, Const):
        s = _const_str(e.value)
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        # right operand parenthesised when it is an Add/Sub so that the
        # reparse reproduces the original association
        return f"{wrap(e.left, 1)} + {wrap(e.right, 1, force=isinstance(e.right, (Add, Sub)))}"
    if isinstance(e, Sub):
        return f"{wrap(e.left, 1)} - {wrap(e.right, 1, force=isinstance(e.right, (Add, Sub)))}"
    if isinstance(e, Mul):
        return f"{wrap(e.left, 2)}*{wrap(e.right, 2, force=isinstance(e.right, (Mul, Div)))}"
    if isinstance(e, Div):
        return f"{wrap(e.left, 2)}/{wrap(e.right, 2, force=isinstance(e.right, (Mul, Div)))}"
    if isinstance(e, Pow):
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{wrap(e.base, 4, force=isinstance(e.base, (Pow, Call)))}^{exp}"
    if isinstance(e, Neg):
        return f"-{wrap(e.operand, 3)}"
    if isinstance(e, Call):
        return f"{e.func}({to_str(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")


# -- parsing ------------------------------------------------------------------


class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text):
    toks = []
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
            if j < n and text[j] in "eE" and j + 1 < n and (
                text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())
            ):
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            imag = j < n and text[j] == "i"
            toks.append(_Tok("num", text[i:j] + ("i" if imag else ""), i))
            i = j + (1 if imag else 0)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^()":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character '{c}'", i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text, varnames):
        self.toks = _tokenize(text)
        self.pos = 0
        self.vars = frozenset(varnames)

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t.kind != kind:
            raise ExprSyntaxError(f"expected '{kind}', got '{t.text or 'end'}'", t.pos)
        return t

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExprSyntaxError(f"unexpected '{t.text}'", t.pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek().kind == "-":
            self.next()
            inner = self.unary()
            # fold a literal directly under unary minus so printing a folded
            # negative constant round-trips
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "^":
            self.next()
            base = Pow(base, self.exponent())
        return base

    def exponent(self):
        t = self.peek()
        if t.kind == "(":
            self.next()
            sign = 1
            if self.peek().kind == "-":
                self.next()
                sign = -1
            num = self.expect("num")
            self.expect(")")
            return sign * self._int(num)
        if t.kind == "-":
            self.next()
            return -self._int(self.expect("num"))
        return self._int(self.expect("num"))

    @staticmethod
    def _int(tok):
        if "." in tok.text or "i" in tok.text or "e" in tok.text or "E" in tok.text:
            raise ExprSyntaxError("exponent must be an integer", tok.pos)
        return int(tok.text)

    def atom(self):
        t = self.next()
        if t.kind == "num":
            text = t.text
            if text.endswith("i"):
                return Const(complex(0, float(text[:-1])))
            v = float(text)
            return Const(int(v) if v.is_integer() else v)
        if t.kind == "ident":
            if self.peek().kind == "(":
                if t.text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function '{t.text}'", t.pos)
                self.next()
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if t.text not in self.vars:
                raise UndeclaredVariableError(t.text, t.pos)
            return Var(t.text)
        if t.kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected '{t.text or 'end'}'", t.pos)


def parse_expr(text: str, varnames) -> Expr:
    """Parse an expression over the declared variable names."""
    return _Parser(text, tuple(varnames)).parse()
