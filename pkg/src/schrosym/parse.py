"""Parsing and printing of expressions.

Grammar (round-trips with ``print_expr``):

    expr     := ['-'] term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' exponent)?
    exponent := INT | '-' INT | '(' ['-'] INT ['/' INT] ')'
    base     := INT | IDENT | IDENT '(' args ')'
              | 'D' digits '[' IDENT ']' '(' args ')'
              | '(' expr ')'
    args     := expr (',' expr)*

Numbers are integers; rationals are written with '/'.  ``i`` is the
imaginary unit.  Coordinates are t, x1, x2, x3.  Shorthand coordinates
expand at parse time:

    r     -> (x1^2+x2^2+x3^2)^(1/2)      spherical radius
    rt    -> (x1^2+x2^2)^(1/2)           cylindrical radius
    rho   -> ln(rt)
    phi   -> arctan(x2/x1)
    theta -> arctan(rt/x3)

Builtin functions: exp, ln, sqrt, sin, cos, tan, tanh, arctan.  Opaque
function symbols and parameters must be declared in the ParseContext.
``D12[F](a,b)`` denotes the derivative of F once in each argument slot;
digits name slots (1-based) with repetition for higher order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    COORD_NAMES, Expr, GQ, I, Poly, UnsupportedExpression,
    coord, exp_of, fnapp, integer, ln_of, param, powr, sqrt_of, trig_of,
)

__all__ = ["ParseContext", "ParseError", "parse_expr", "print_expr",
           "tokenize", "DEFAULT_PARAMS"]

DEFAULT_PARAMS = frozenset({
    "e", "g", "w", "w1", "w2", "w3", "kappa", "kappa1", "kappa2", "kappa3",
    "mu", "nu", "alpha", "lam",
})

_BUILTIN_TRIG = ("sin", "cos", "tan", "tanh", "arctan")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class ParseContext:
    params: frozenset = DEFAULT_PARAMS
    functions: dict = field(default_factory=dict)  # name -> arity

    def with_functions(self, **fns) -> "ParseContext":
        merged = dict(self.functions)
        merged.update(fns)
        return ParseContext(self.params, merged)

    def with_params(self, *names) -> "ParseContext":
        return ParseContext(self.params | set(names), dict(self.functions))


# ---------------------------------------------------------------------------
# Tokenizer

_PUNCT = "+-*/^()[],"


def tokenize(text: str):
    out = []
    n = len(text)
    k = 0
    while k < n:
        ch = text[k]
        if ch.isspace():
            k += 1
            continue
        if ch.isdigit():
            j = k
            while j < n and text[j].isdigit():
                j += 1
            out.append(("num", int(text[k:j]), k))
            k = j
            continue
        if ch.isalpha() or ch == "_":
            j = k
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(("ident", text[k:j], k))
            k = j
            continue
        if ch in _PUNCT:
            out.append((ch, ch, k))
            k += 1
            continue
        raise ParseError(f"unexpected character {ch!r} at position {k}")
    out.append(("end", None, n))
    return out


# ---------------------------------------------------------------------------
# Generic recursive-descent parser over pluggable semantics
#
# The same grammar serves scalar expressions and operator combinations;
# semantics objects build the values.

class Parser:
    def __init__(self, tokens, sem):
        self.toks = tokens
        self.pos = 0
        self.sem = sem

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(
                f"expected {kind!r}, found {tok[1]!r} at position {tok[2]}")
        return tok

    def parse(self):
        v = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(
                f"trailing input {tok[1]!r} at position {tok[2]}")
        return v

    def expr(self):
        neg = False
        if self.peek()[0] == "-":
            self.next()
            neg = True
        v = self.term()
        if neg:
            v = self.sem.neg(v)
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            rhs = self.term()
            v = self.sem.add(v, rhs) if op == "+" else self.sem.sub(v, rhs)
        return v

    def term(self):
        v = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            rhs = self.factor()
            v = self.sem.mul(v, rhs) if op == "*" else self.sem.div(v, rhs)
        return v

    def factor(self):
        v = self.base()
        if self.peek()[0] == "^":
            self.next()
            v = self.sem.pow(v, self.exponent())
        return v

    def exponent(self) -> Fraction:
        tok = self.next()
        if tok[0] == "num":
            return Fraction(tok[1])
        if tok[0] == "-":
            return -Fraction(self.expect("num")[1])
        if tok[0] == "(":
            sign = 1
            if self.peek()[0] == "-":
                self.next()
                sign = -1
            p = self.expect("num")[1]
            q = 1
            if self.peek()[0] == "/":
                self.next()
                q = self.expect("num")[1]
            self.expect(")")
            return Fraction(sign * p, q)
        raise ParseError(f"bad exponent at position {tok[2]}")

    def base(self):
        tok = self.next()
        if tok[0] == "num":
            return self.sem.number(tok[1])
        if tok[0] == "(":
            v = self.expr()
            self.expect(")")
            return v
        if tok[0] == "ident":
            name = tok[1]
            if (len(name) >= 2 and name[0] == "D" and name[1:].isdigit()
                    and self.peek()[0] == "["):
                self.next()
                fname = self.expect("ident")[1]
                self.expect("]")
                self.expect("(")
                args = self.args()
                self.expect(")")
                return self.sem.deriv(fname, name[1:], args, tok[2])
            if self.peek()[0] == "(":
                self.next()
                args = self.args()
                self.expect(")")
                return self.sem.call(name, args, tok[2])
            return self.sem.ident(name, tok[2])
        raise ParseError(f"unexpected token {tok[1]!r} at position {tok[2]}")

    def args(self):
        out = [self.expr()]
        while self.peek()[0] == ",":
            self.next()
            out.append(self.expr())
        return out


class ScalarSemantics:
    def __init__(self, ctx: ParseContext):
        self.ctx = ctx

    def number(self, n):
        return integer(n)

    def neg(self, a):
        return -a

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return a / b

    def pow(self, a, q):
        try:
            return powr(a, q)
        except UnsupportedExpression as ex:
            raise ParseError(str(ex)) from ex

    def ident(self, name, pos):
        if name == "i":
            return I
        if name in COORD_NAMES:
            return coord(name)
        if name == "r":
            return sqrt_of(coord("x1") ** 2 + coord("x2") ** 2
                           + coord("x3") ** 2)
        if name == "rt":
            return sqrt_of(coord("x1") ** 2 + coord("x2") ** 2)
        if name == "rho":
            return ln_of(sqrt_of(coord("x1") ** 2 + coord("x2") ** 2))
        if name == "phi":
            return trig_of("arctan", coord("x2") / coord("x1"))
        if name == "theta":
            return trig_of(
                "arctan",
                sqrt_of(coord("x1") ** 2 + coord("x2") ** 2) / coord("x3"))
        if name in self.ctx.params:
            return param(name)
        raise ParseError(f"unknown identifier {name!r} at position {pos}")

    def call(self, name, args, pos):
        if name == "exp":
            self._arity(name, args, 1, pos)
            return exp_of(args[0])
        if name == "ln":
            self._arity(name, args, 1, pos)
            return ln_of(args[0])
        if name == "sqrt":
            self._arity(name, args, 1, pos)
            try:
                return sqrt_of(args[0])
            except UnsupportedExpression as ex:
                raise ParseError(str(ex)) from ex
        if name in _BUILTIN_TRIG:
            self._arity(name, args, 1, pos)
            return trig_of(name, args[0])
        if name in self.ctx.functions:
            self._arity(name, args, self.ctx.functions[name], pos)
            return fnapp(name, args)
        raise ParseError(f"unknown function {name!r} at position {pos}")

    def deriv(self, fname, digits, args, pos):
        if fname not in self.ctx.functions:
            raise ParseError(
                f"derivative of undeclared function {fname!r} at {pos}")
        arity = self.ctx.functions[fname]
        self._arity(fname, args, arity, pos)
        midx = [0] * arity
        for d in digits:
            slot = int(d)
            if not 1 <= slot <= arity:
                raise ParseError(
                    f"slot {slot} out of range for {fname!r} at {pos}")
            midx[slot - 1] += 1
        return fnapp(fname, args, midx)

    @staticmethod
    def _arity(name, args, want, pos):
        if len(args) != want:
            raise ParseError(
                f"{name!r} takes {want} argument(s), got {len(args)}"
                f" at position {pos}")


def parse_expr(text: str, ctx: ParseContext = None) -> Expr:
    ctx = ctx if ctx is not None else ParseContext()
    return Parser(tokenize(text), ScalarSemantics(ctx)).parse()


# ---------------------------------------------------------------------------
# Printing

def _frac_str(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def _coeff_str(c: GQ):
    """Returns (text, negated): text never starts with '-'.

    For a purely negative real/imaginary coefficient the sign is pulled
    out so poly printing can join terms with ' - '.
    """
    if c.im == 0:
        f = c.re
        if f < 0:
            return _frac_str(-f), True
        return _frac_str(f), False
    if c.re == 0:
        f = c.im
        neg = f < 0
        f = abs(f)
        if f == 1:
            return "i", neg
        return f"{_frac_str(f)}*i", neg
    re_s = _frac_str(abs(c.re))
    im_s = "i" if abs(c.im) == 1 else f"{_frac_str(abs(c.im))}*i"
    re_sign = "-" if c.re < 0 else ""
    im_sign = "-" if c.im < 0 else "+"
    return f"({re_sign}{re_s}{im_sign}{im_s})", False


def _exp_str(e) -> str:
    f = Fraction(e)
    if f.denominator == 1 and f >= 0:
        return str(f.numerator)
    return f"({_frac_str(f)})"


def _atom_str(a) -> str:
    tag = a[0]
    if tag == "coord":
        return COORD_NAMES[a[1]]
    if tag == "param":
        return a[1]
    if tag == "surd":
        return f"{a[1]}^({_frac_str(a[2])})"
    if tag == "pow":
        return f"({_poly_str(a[1])})^({_frac_str(a[2])})"
    if tag == "exp":
        return f"exp({print_expr(a[1])})"
    if tag == "ln":
        return f"ln({print_expr(a[1])})"
    if tag == "trig":
        return f"{a[1]}({print_expr(a[2])})"
    name, args, midx = a[1], a[2], a[3]
    argstr = ",".join(print_expr(x) for x in args)
    if any(midx):
        digits = "".join(str(j + 1) * k for j, k in enumerate(midx))
        return f"D{digits}[{name}]({argstr})"
    return f"{name}({argstr})"


def _mono_str(m) -> str:
    parts = []
    for a, e in m:
        s = _atom_str(a)
        if e != 1:
            s += f"^{_exp_str(e)}"
        parts.append(s)
    return "*".join(parts)


def _term_str(m, c: GQ):
    cs, neg = _coeff_str(c)
    if not m:
        return cs, neg
    ms = _mono_str(m)
    if cs == "1":
        return ms, neg
    return f"{cs}*{ms}", neg


def _poly_str(p: Poly) -> str:
    if p.is_zero():
        return "0"
    chunks = []
    for k, (m, c) in enumerate(p.terms):
        text, neg = _term_str(m, c)
        if k == 0:
            chunks.append(("-" if neg else "") + text)
        else:
            chunks.append((" - " if neg else " + ") + text)
    return "".join(chunks)


def print_expr(e: Expr) -> str:
    num = _poly_str(e.num)
    if not e.den:
        return num
    if len(e.num.terms) > 1 or e.num.terms[0][1] != GQ(1) \
            or not e.num.terms[0][0]:
        num = f"({num})"
    elif len(e.num.terms[0][0]) > 1:
        num = f"({num})"
    # repeated division keeps factor multiplicities intact on reparse
    dparts = []
    for f, m in e.den:
        dparts.extend([f"({_poly_str(f)})"] * m)
    return num + "".join("/" + d for d in dparts)
