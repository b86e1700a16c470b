"""Linear differential operators and the symmetry criterion.

An operator is a finite sum  sum_J  c_J(t,x) * d^J  over multi-indices
J = (jt, j1, j2, j3).  Composition uses the Leibniz rule; commutators of
the operators that occur here (generators of order <= 2 against the
evolution operator) close at order <= 2, though intermediate products
reach higher order and are allowed internally.

The evolution operator built from a potential (A1, A2, A0) is

    L = i*Dt + (1/2)*Lap - i*e*(A1*D1 + A2*D2)
        - (i*e/2)*(d1 A1 + d2 A2) - V,
    V = g*A0 + (e^2/2)*(A1^2 + A2^2),

with the third vector component gauged away.  A generator q satisfies
the symmetry criterion when  [q, L] = alpha*L  with  alpha = -d/dt of
the Dt-coefficient of q; ``check_symmetry`` extracts alpha from the
Dt-coefficient of the commutator and decides the residual coefficient
by coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .expr import Expr, I, ONE, ZERO, ZeroDecision, integer

__all__ = [
    "DiffOperator", "Potential", "SymmetryReport",
    "schrodinger_operator", "check_symmetry", "worst_decision",
]

MAX_GENERATOR_ORDER = 2
_MAX_INTERNAL_ORDER = 5


def worst_decision(decisions):
    """Aggregate decisions: any NONZERO wins, else any UNKNOWN, else ZERO."""
    out = ZeroDecision.ZERO
    for d in decisions:
        if d == ZeroDecision.NONZERO:
            return ZeroDecision.NONZERO
        if d == ZeroDecision.UNKNOWN:
            out = ZeroDecision.UNKNOWN
    return out


class DiffOperator:
    """Immutable linear differential operator with Expr coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        # coeffs: {midx: Expr}; structural zeros dropped
        clean = {}
        for j, c in coeffs.items():
            j = tuple(int(k) for k in j)
            if len(j) != 4 or any(k < 0 for k in j):
                raise ValueError(f"bad multi-index {j}")
            if not c.is_structural_zero():
                clean[j] = clean.get(j, ZERO) + c
        self.coeffs = tuple(sorted(
            ((j, c) for j, c in clean.items()
             if not c.is_structural_zero()),
            key=lambda t: t[0]))

    @staticmethod
    def zero():
        return DiffOperator({})

    @staticmethod
    def identity():
        return DiffOperator({(0, 0, 0, 0): ONE})

    @staticmethod
    def scalar(c: Expr):
        return DiffOperator({(0, 0, 0, 0): c})

    def coeff(self, j) -> Expr:
        j = tuple(j)
        for jj, c in self.coeffs:
            if jj == j:
                return c
        return ZERO

    @property
    def order(self) -> int:
        return max((sum(j) for j, _ in self.coeffs), default=0)

    def is_structural_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, o):
        d = dict(self.coeffs)
        for j, c in o.coeffs:
            d[j] = d.get(j, ZERO) + c
        return DiffOperator(d)

    def __sub__(self, o):
        return self + (-o)

    def __neg__(self):
        return DiffOperator({j: -c for j, c in self.coeffs})

    def scale(self, s: Expr) -> "DiffOperator":
        if s.is_structural_zero():
            return DiffOperator.zero()
        return DiffOperator({j: s * c for j, c in self.coeffs})

    def __eq__(self, o):
        return isinstance(o, DiffOperator) and self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        from .parse import print_expr
        if not self.coeffs:
            return "Op[0]"
        bits = []
        for j, c in self.coeffs:
            dstr = "".join(f"D{n}^{k}" if k > 1 else f"D{n}"
                           for n, k in zip("t123", j) if k)
            bits.append(f"({print_expr(c)})" + (f"*{dstr}" if dstr else ""))
        return "Op[" + " + ".join(bits) + "]"

    def compose(self, o: "DiffOperator") -> "DiffOperator":
        """self after o, with the Leibniz expansion of coefficients."""
        names = ("t", "x1", "x2", "x3")
        acc = {}
        for ja, ca in self.coeffs:
            for jb, cb in o.coeffs:
                if sum(ja) + sum(jb) > _MAX_INTERNAL_ORDER:
                    raise ValueError(
                        "composition exceeds the internal order cap")
                # d^ja (cb * u) = sum_m C(ja,m) d^(ja-m) cb * d^m u
                for m0 in range(ja[0] + 1):
                    for m1 in range(ja[1] + 1):
                        for m2 in range(ja[2] + 1):
                            for m3 in range(ja[3] + 1):
                                m = (m0, m1, m2, m3)
                                w = (comb(ja[0], m0) * comb(ja[1], m1)
                                     * comb(ja[2], m2) * comb(ja[3], m3))
                                dcb = cb
                                for ax in range(4):
                                    for _ in range(ja[ax] - m[ax]):
                                        dcb = dcb.diff(names[ax])
                                    if dcb.is_structural_zero():
                                        break
                                if dcb.is_structural_zero():
                                    continue
                                tgt = tuple(m[k] + jb[k] for k in range(4))
                                term = ca * integer(w) * dcb
                                acc[tgt] = acc.get(tgt, ZERO) + term
        return DiffOperator(acc)

    def commutator(self, o: "DiffOperator") -> "DiffOperator":
        return self.compose(o) - o.compose(self)

    def apply(self, f: Expr) -> Expr:
        names = ("t", "x1", "x2", "x3")
        out = ZERO
        for j, c in self.coeffs:
            df = f
            for ax in range(4):
                for _ in range(j[ax]):
                    df = df.diff(names[ax])
            out = out + c * df
        return out

    def map_coeffs(self, fn) -> "DiffOperator":
        return DiffOperator({j: fn(c) for j, c in self.coeffs})

    def is_zero_decision(self) -> str:
        return worst_decision(c.is_zero_decision() for _, c in self.coeffs)


# ---------------------------------------------------------------------------
# Potentials

class Potential:
    """Superposed vector + scalar potential data (third component gauged off).

    V is derived: V = g*A0 + (e^2/2)*(A1^2+A2^2).  Couplings default to
    the literal constants e = g = 1; pass parameter expressions to keep
    them symbolic.
    """

    __slots__ = ("A1", "A2", "A0", "e", "g")

    def __init__(self, A1: Expr = ZERO, A2: Expr = ZERO, A0: Expr = ZERO,
                 e: Expr = ONE, g: Expr = ONE):
        self.A1 = A1
        self.A2 = A2
        self.A0 = A0
        self.e = e
        self.g = g

    @property
    def V(self) -> Expr:
        return self.g * self.A0 \
            + self.e * self.e * (self.A1 ** 2 + self.A2 ** 2) / 2

    def map(self, fn) -> "Potential":
        return Potential(fn(self.A1), fn(self.A2), fn(self.A0),
                         fn(self.e), fn(self.g))

    def __repr__(self):
        from .parse import print_expr
        return (f"Potential(A1={print_expr(self.A1)}, "
                f"A2={print_expr(self.A2)}, A0={print_expr(self.A0)})")


def schrodinger_operator(p: Potential) -> DiffOperator:
    e = p.e
    div_term = p.A1.diff("x1") + p.A2.diff("x2")
    return DiffOperator({
        (1, 0, 0, 0): I,
        (0, 2, 0, 0): ONE / 2,
        (0, 0, 2, 0): ONE / 2,
        (0, 0, 0, 2): ONE / 2,
        (0, 1, 0, 0): -I * e * p.A1,
        (0, 0, 1, 0): -I * e * p.A2,
        (0, 0, 0, 0): -(I * e / 2) * div_term - p.V,
    })


# ---------------------------------------------------------------------------
# Symmetry criterion

@dataclass
class SymmetryReport:
    satisfied: str                  # ZeroDecision value
    alpha: Expr
    residual: DiffOperator
    per_coeff: tuple                # ((midx, decision), ...)

    def residual_terms(self):
        return self.residual.coeffs


def check_symmetry(p: Potential, q: DiffOperator) -> SymmetryReport:
    """Decide [q, L] = alpha L with alpha = Dt-coefficient of [q,L] / i."""
    if q.order > MAX_GENERATOR_ORDER:
        raise ValueError(
            f"generator order {q.order} exceeds cap {MAX_GENERATOR_ORDER}")
    L = schrodinger_operator(p)
    c = q.commutator(L)
    alpha = c.coeff((1, 0, 0, 0)) / I
    residual = c - L.scale(alpha)
    per = tuple((j, cc.is_zero_decision()) for j, cc in residual.coeffs)
    return SymmetryReport(
        satisfied=worst_decision(d for _, d in per),
        alpha=alpha,
        residual=residual,
        per_coeff=per)
