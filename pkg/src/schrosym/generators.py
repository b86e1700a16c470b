"""Named symmetry generators and the operator-expression parser.

The zoo covers the standard generators of the free evolution operator:
time translation P0, translations Pa, rotations La, dilatation D,
conformal generator A, Galilei boosts Ga, the identity Id, and the
exponential families B{a}p/B{a}m(w) and Ap/Am(w) that appear for
oscillator-type scalar potentials.

Sign conventions (with Dt, Da partial derivatives):

    P0 = i*Dt          Pa = -i*Da         Ga = t*Pa - xa
    L1 = x2*P3 - x3*P2   (cyclic)
    D  = 2t*P0 - x.P + 3i/2
    A  = t*D - t^2*P0 + r^2/2
    B{a}p(w) = exp(+w*t) * (Pa - w*xa)
    B{a}m(w) = exp(-w*t) * (Pa + w*xa)
    Ap(w) = exp(+2wt) * (P0 + w^2 r^2 - (w/2)(x.P + P.x))
    Am(w) = exp(-2wt) * (P0 + w^2 r^2 + (w/2)(x.P + P.x))

``conformal_printed`` carries the sign variant of A with -r^2/2 that
circulates in older tables; it fails the symmetry criterion and is kept
only so the discrepancy can be demonstrated.

``parse_operator`` reads textual combinations such as
``"P3 - F(x1,x2)"`` or ``"B3p(w) - exp(w*t)*F(x1,x2)"`` over the same
grammar as scalar expressions; '*' composes (scalar factors act by
multiplication), '/' divides by scalar factors only.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Expr, I, ONE, ZERO, coord, exp_of, integer
from .operators import DiffOperator
from .parse import ParseContext, ParseError, Parser, ScalarSemantics, tokenize

__all__ = [
    "p0", "pa", "la", "dilatation", "conformal", "conformal_printed",
    "ga", "identity_op", "boost_exp", "conformal_exp",
    "free_symmetry_basis", "parse_operator",
]

_X = (None, coord("x1"), coord("x2"), coord("x3"))


def p0() -> DiffOperator:
    return DiffOperator({(1, 0, 0, 0): I})


def pa(a: int) -> DiffOperator:
    j = [0, 0, 0, 0]
    j[a] = 1
    return DiffOperator({tuple(j): -I})


def la(a: int) -> DiffOperator:
    b, c = {1: (2, 3), 2: (3, 1), 3: (1, 2)}[a]
    return _xmul(b, pa(c)) - _xmul(c, pa(b))


def _xmul(a: int, op: DiffOperator) -> DiffOperator:
    return op.scale(_X[a])


def dilatation() -> DiffOperator:
    t = coord("t")
    out = p0().scale(2 * t)
    for a in (1, 2, 3):
        out = out - _xmul(a, pa(a))
    return out + DiffOperator.scalar(3 * I / 2)


def conformal() -> DiffOperator:
    t = coord("t")
    r2 = _X[1] ** 2 + _X[2] ** 2 + _X[3] ** 2
    return dilatation().scale(t) - p0().scale(t * t) \
        + DiffOperator.scalar(r2 / 2)


def conformal_printed() -> DiffOperator:
    # sign variant with -r^2/2; not a symmetry of the free operator
    t = coord("t")
    r2 = _X[1] ** 2 + _X[2] ** 2 + _X[3] ** 2
    return dilatation().scale(t) - p0().scale(t * t) \
        - DiffOperator.scalar(r2 / 2)


def ga(a: int) -> DiffOperator:
    t = coord("t")
    return pa(a).scale(t) - DiffOperator.scalar(_X[a])


def identity_op() -> DiffOperator:
    return DiffOperator.identity()


def boost_exp(a: int, sign: int, w: Expr) -> DiffOperator:
    """B{a}p / B{a}m: exp(sign*w*t) * (Pa - sign*w*xa)."""
    t = coord("t")
    phase = exp_of(integer(sign) * w * t)
    core = pa(a) - DiffOperator.scalar(integer(sign) * w * _X[a])
    return core.scale(phase)


def conformal_exp(sign: int, w: Expr) -> DiffOperator:
    """Ap / Am: exp(2*sign*w*t)*(P0 + w^2 r^2 - sign*(w/2)(x.P + P.x))."""
    t = coord("t")
    r2 = _X[1] ** 2 + _X[2] ** 2 + _X[3] ** 2
    # x.P + P.x = 2 x.P - 3i
    xp = DiffOperator.zero()
    for a in (1, 2, 3):
        xp = xp + _xmul(a, pa(a))
    sym = xp + xp - DiffOperator.scalar(3 * I)
    core = p0() + DiffOperator.scalar(w * w * r2) \
        - sym.scale(integer(sign) * w / 2)
    return core.scale(exp_of(integer(2 * sign) * w * t))


def free_symmetry_basis(w_unused=None):
    """The 13 generators closing on the free evolution operator."""
    ops = {"P0": p0(), "D": dilatation(), "A": conformal(),
           "Id": identity_op()}
    for a in (1, 2, 3):
        ops[f"P{a}"] = pa(a)
        ops[f"L{a}"] = la(a)
        ops[f"G{a}"] = ga(a)
    return ops


# ---------------------------------------------------------------------------
# Operator-expression parsing

_FIXED_OPS = {
    "P0": p0, "D": dilatation, "A": conformal, "Id": identity_op,
    "P1": lambda: pa(1), "P2": lambda: pa(2), "P3": lambda: pa(3),
    "L1": lambda: la(1), "L2": lambda: la(2), "L3": lambda: la(3),
    "G1": lambda: ga(1), "G2": lambda: ga(2), "G3": lambda: ga(3),
}

_PARAM_OPS = {}
for _a in (1, 2, 3):
    _PARAM_OPS[f"B{_a}p"] = (lambda a: lambda w: boost_exp(a, 1, w))(_a)
    _PARAM_OPS[f"B{_a}m"] = (lambda a: lambda w: boost_exp(a, -1, w))(_a)
_PARAM_OPS["Ap"] = lambda w: conformal_exp(1, w)
_PARAM_OPS["Am"] = lambda w: conformal_exp(-1, w)


def _as_scalar(op: DiffOperator):
    if op.is_structural_zero():
        return ZERO
    if op.order == 0:
        return op.coeff((0, 0, 0, 0))
    return None


class OperatorSemantics:
    """Parser semantics producing DiffOperator values.

    Scalar subexpressions ride along as order-zero operators; '*' is
    operator composition, which degenerates to multiplication whenever
    the left factor is scalar.
    """

    def __init__(self, ctx: ParseContext):
        self.scal = ScalarSemantics(ctx)

    def number(self, n):
        return DiffOperator.scalar(integer(n))

    def neg(self, v):
        return -v

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a.compose(b)

    def div(self, a, b):
        s = _as_scalar(b)
        if s is None:
            raise ParseError("division by a non-scalar operator")
        return a.map_coeffs(lambda c: c / s)

    def pow(self, v, q: Fraction):
        s = _as_scalar(v)
        if s is not None:
            return DiffOperator.scalar(self.scal.pow(s, q))
        if q.denominator == 1 and q >= 0:
            out = DiffOperator.identity()
            for _ in range(q.numerator):
                out = out.compose(v)
            return out
        raise ParseError(f"unsupported operator power {q}")

    def ident(self, name, pos):
        mk = _FIXED_OPS.get(name)
        if mk is not None:
            return mk()
        return DiffOperator.scalar(self.scal.ident(name, pos))

    def call(self, name, args, pos):
        mk = _PARAM_OPS.get(name)
        if mk is not None:
            if len(args) != 1:
                raise ParseError(f"{name!r} takes one frequency argument")
            w = _as_scalar(args[0])
            if w is None:
                raise ParseError(f"{name!r} needs a scalar argument")
            return mk(w)
        sargs = self._scalar_args(name, args, pos)
        return DiffOperator.scalar(self.scal.call(name, sargs, pos))

    def deriv(self, fname, digits, args, pos):
        sargs = self._scalar_args(fname, args, pos)
        return DiffOperator.scalar(self.scal.deriv(fname, digits, sargs, pos))

    @staticmethod
    def _scalar_args(name, args, pos):
        out = []
        for v in args:
            s = _as_scalar(v)
            if s is None:
                raise ParseError(
                    f"operator-valued argument to {name!r} at {pos}")
            out.append(s)
        return out


def parse_operator(text: str, ctx: ParseContext = None) -> DiffOperator:
    ctx = ctx if ctx is not None else ParseContext()
    return Parser(tokenize(text), OperatorSemantics(ctx)).parse()
