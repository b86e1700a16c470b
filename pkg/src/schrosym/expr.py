"""Exact symbolic expressions over the coordinates (t, x1, x2, x3).

Canonical form
--------------
Every expression is a rational form  num / prod(f_j ^ m_j)  where

* ``num`` is an expanded multivariate polynomial with Gaussian-rational
  coefficients over a set of *atoms*,
* the denominator is a multiset of polynomial factors, each normalized to
  leading coefficient 1, sorted, with positive integer multiplicities;
  constant factors dissolve into coefficients, monomial factors split
  into single-atom factors, exponential factors fold into the numerator.

Atoms are:

* coordinates ``t, x1, x2, x3`` and declared parameters (``w``, ``kappa``, ...),
* prime surds ``p^(a/b)`` (constant radicals, prime base),
* fractional powers ``B^(a/b)`` of a normalized polynomial base ``B``,
* ``exp(u)``, ``ln(u)``, ``sin/cos/tan/tanh/arctan(u)`` with canonical
  argument ``u``,
* opaque function symbols ``F(args)`` carrying a derivative multi-index
  per argument slot.

Rewrites applied eagerly at construction (and only these):

* exp(0)=1, exp(a)*exp(b)=exp(a+b), exp(u)^k=exp(k*u),
  exp(q*ln(u) + v) = u^q * exp(v) for rational q,
* ln(1)=0, ln(exp(u))=u, ln of a monomial with positive rational
  coefficient splits multiplicatively (prime factorization of the
  coefficient), ln(B^f) = f*ln(B), ln(a/b) = ln(a) - ln(b),
* tan(arctan(u)) = u,
* power laws: (B^f)^g = B^(f*g), same-base fractional powers merge and
  integer parts fold back into polynomial factors; fractional powers of
  a monomial distribute over its factors (formal principal branch),
* perfect-power extraction in constant radicals, (-1)^(k/2) = i^k,
* reduction of the rational form by exact polynomial division against
  the stored denominator factors (guarded; never invents factors).

The form is *deterministically normalized*: equal construction respecting
the rewrite set yields identical objects.  It is not a decision procedure
for functional equality; ``is_zero_decision`` is the sound three-valued
test.  It checks the canonical numerator, retries after rewriting
trigonometric atoms to complex exponentials, then falls back to numeric
evaluation at three deterministic rational sample points: |value| > 1e-9
at a well-conditioned point certifies NONZERO, otherwise UNKNOWN.  The
symbolic ZERO path never consults floating point.

All charts are treated formally (principal branches); sample points are
kept small and real so branch-sensitive rewrites such as ln(exp(u)) = u
remain numerically valid at the samples.
"""

from __future__ import annotations

import cmath
import hashlib
from fractions import Fraction
from math import gcd, lcm

__all__ = [
    "GQ", "Expr", "Poly", "ZeroDecision", "UnsupportedExpression",
    "ZERO", "ONE", "I", "integer", "rational", "gauss",
    "coord", "param", "exp_of", "ln_of", "trig_of", "sqrt_of", "powr",
    "fnapp", "COORD_NAMES", "atom_is_constant", "collect_atoms",
    "depends_on", "rewrite_trig", "map_atoms",
]

COORD_NAMES = ("t", "x1", "x2", "x3")

TRIG_KINDS = ("sin", "cos", "tan", "tanh", "arctan")


class UnsupportedExpression(Exception):
    """Raised when a construction leaves the supported rewrite set."""


# ---------------------------------------------------------------------------
# Gaussian rationals

class GQ:
    """Gaussian rational a + b*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, o):
        return GQ(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return GQ(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __mul__(self, o):
        return GQ(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    def inv(self):
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise ZeroDivisionError("inverse of zero")
        return GQ(self.re / d, -self.im / d)

    def __truediv__(self, o):
        return self * o.inv()

    def __pow__(self, n):
        if n < 0:
            return self.inv() ** (-n)
        out = GQ(1)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def is_rational(self):
        return self.im == 0

    def __eq__(self, o):
        return isinstance(o, GQ) and self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GQ({self.re},{self.im})"

    def as_complex(self):
        return complex(self.re, self.im)


Q0 = GQ(0)
Q1 = GQ(1)
QI = GQ(0, 1)


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    return Fraction(gcd(a.numerator, b.numerator),
                    lcm(a.denominator, b.denominator))


def _content(coeffs) -> Fraction:
    g = Fraction(0)
    for c in coeffs:
        g = _frac_gcd(g, c.re)
        g = _frac_gcd(g, c.im)
    return g if g != 0 else Fraction(1)


def _prime_factors(n: int):
    # trial division; constants here come from literal input, all small
    out = {}
    n = abs(n)
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


# ---------------------------------------------------------------------------
# Atoms
#
# Tagged tuples; the tag fixes the rank used by the term order:
#   ("coord", idx)            idx 0..3 for t,x1,x2,x3
#   ("param", name)
#   ("surd", prime, frac)     prime int, frac Fraction in (0,1)
#   ("pow", base, frac)       base Poly (normalized), frac Fraction in (0,1)
#   ("exp", arg)              arg Expr
#   ("ln", arg)
#   ("trig", kind, arg)
#   ("fn", name, args, midx)  args tuple[Expr], midx tuple[int] per slot

_RANK = {"coord": 0, "param": 1, "surd": 2, "pow": 3,
         "exp": 4, "ln": 5, "trig": 6, "fn": 7}

_ATOM_KEY_CACHE = {}


def atom_key(a):
    k = _ATOM_KEY_CACHE.get(a)
    if k is not None:
        return k
    tag = a[0]
    r = _RANK[tag]
    if tag in ("coord", "param"):
        k = (r, a[1])
    elif tag == "surd":
        k = (r, a[1], a[2])
    elif tag == "pow":
        k = (r, a[2], a[1].key())
    elif tag in ("exp", "ln"):
        k = (r, a[1].key())
    elif tag == "trig":
        k = (r, TRIG_KINDS.index(a[1]), a[2].key())
    else:
        k = (r, a[1], a[3], tuple(x.key() for x in a[2]))
    _ATOM_KEY_CACHE[a] = k
    return k


def atom_is_constant(a) -> bool:
    tag = a[0]
    if tag == "coord":
        return False
    if tag in ("param", "surd"):
        return True
    if tag == "pow":
        return all(_mono_is_constant(m) for m, _ in a[1].terms)
    if tag in ("exp", "ln"):
        return _expr_is_constant(a[1])
    if tag == "trig":
        return _expr_is_constant(a[2])
    return False  # opaque function symbols count as nonconstant


def _mono_is_constant(mono) -> bool:
    return all(atom_is_constant(a) for a, _ in mono)


_ATOM_WEIGHT_CACHE = {}


def _atom_weight(a) -> Fraction:
    w = _ATOM_WEIGHT_CACHE.get(a)
    if w is not None:
        return w
    tag = a[0]
    if tag in ("surd", "exp"):
        w = Fraction(0)
    elif tag == "pow":
        base_deg = max((_mono_weight(m) for m, _ in a[1].terms),
                       default=Fraction(0))
        w = a[2] * base_deg
    else:
        w = Fraction(1)
    _ATOM_WEIGHT_CACHE[a] = w
    return w


_MONO_WEIGHT_CACHE = {}


def _mono_weight(mono) -> Fraction:
    w = _MONO_WEIGHT_CACHE.get(mono)
    if w is None:
        w = Fraction(0)
        for a, e in mono:
            w += _atom_weight(a) * e
        _MONO_WEIGHT_CACHE[mono] = w
    return w


# Sentinel pair that compares above every ((rank, ...), -exponent) pair, so
# that a monomial extending another by extra atoms sorts as the larger one.
_LEX_SENTINEL = ((1 << 30,),)

_MONO_LEX_CACHE = {}


def _mono_lex(mono):
    t = _MONO_LEX_CACHE.get(mono)
    if t is None:
        t = tuple((atom_key(a), -e) for a, e in mono) + (_LEX_SENTINEL,)
        _MONO_LEX_CACHE[mono] = t
    return t


_MONO_DESC_CACHE = {}


def _mono_desc_key(mono):
    """Sort key whose ascending order is descending graded-lex order."""
    k = _MONO_DESC_CACHE.get(mono)
    if k is None:
        k = (-_mono_weight(mono), _mono_lex(mono))
        _MONO_DESC_CACHE[mono] = k
    return k


def _mono_cmp(m1, m2):
    """Graded-lex term order; earlier atoms are more significant."""
    if m1 == m2:
        return 0
    return -1 if _mono_desc_key(m2) < _mono_desc_key(m1) else 1


# ---------------------------------------------------------------------------
# Polynomials

class Poly:
    """Expanded polynomial: tuple of (monomial, GQ) pairs, leading first.

    A monomial is a tuple of (atom, exponent) pairs sorted by atom key
    with positive integer exponents; () is the constant monomial.
    """

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, terms):
        self.terms = terms
        self._key = None
        self._hash = None

    @staticmethod
    def from_dict(d):
        items = [(m, c) for m, c in d.items() if not c.is_zero()]
        items.sort(key=lambda t: _mono_desc_key(t[0]))
        return Poly(tuple(items))

    @staticmethod
    def const(c: GQ):
        if c.is_zero():
            return P_ZERO
        return Poly((((), c),))

    @staticmethod
    def atom(a):
        return Poly(((((a, 1),), Q1),))

    def key(self):
        if self._key is None:
            self._key = tuple(
                (tuple((atom_key(a), Fraction(e)) for a, e in m),
                 (c.re, c.im))
                for m, c in self.terms)
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, o):
        return isinstance(o, Poly) and self.key() == o.key()

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(m == () for m, _ in self.terms)

    def const_value(self) -> GQ:
        if not self.terms:
            return Q0
        if self.terms[0][0] == ():
            return self.terms[0][1]
        return Q0

    def leading(self):
        return self.terms[0]

    def coeff_content(self) -> Fraction:
        return _content(c for _, c in self.terms)


P_ZERO = Poly(())
P_ONE = Poly.const(Q1)


def _mono_mul(m1, m2):
    """Multiply monomials; returns (coeff, mono, extra poly factors).

    Fold-backs (integer parts of merged fractional powers, merged
    exponential arguments) can emit a scalar, or whole polynomial
    factors that the caller must multiply in.
    """
    d = {}
    for a, e in m1:
        d[a] = d.get(a, 0) + e
    for a, e in m2:
        d[a] = d.get(a, 0) + e
    coeff = Q1
    extra = []
    out = {}
    exp_arg = None
    surd_tot: dict = {}
    pow_tot: dict = {}
    for a, e in d.items():
        if e == 0:
            continue
        tag = a[0]
        if tag == "exp":
            contrib = a[1] if e == 1 else a[1] * integer(e)
            exp_arg = contrib if exp_arg is None else exp_arg + contrib
        elif tag == "surd":
            surd_tot[a[1]] = surd_tot.get(a[1], Fraction(0)) + a[2] * e
        elif tag == "pow":
            k = a[1].key()
            if k in pow_tot:
                pow_tot[k][1] += a[2] * e
            else:
                pow_tot[k] = [a[1], a[2] * e]
        else:
            out[a] = out.get(a, 0) + e
    for prime, tot in surd_tot.items():
        n = tot // 1
        f = tot - n
        coeff = coeff * GQ(Fraction(prime) ** int(n))
        if f:
            na = ("surd", prime, f)
            out[na] = out.get(na, 0) + 1
    for base, tot in pow_tot.values():
        n = tot // 1
        f = tot - n
        if n < 0:
            raise UnsupportedExpression("folded power went negative")
        extra.extend([base] * int(n))
        if f:
            na = ("pow", base, f)
            out[na] = out.get(na, 0) + 1
    if exp_arg is not None and not exp_arg.is_structural_zero():
        ea = ("exp", exp_arg)
        out[ea] = out.get(ea, 0) + 1
    mono = tuple(sorted(out.items(), key=lambda t: atom_key(t[0])))
    return coeff, mono, extra


def poly_add(p1: Poly, p2: Poly) -> Poly:
    t1, t2 = p1.terms, p2.terms
    if not t1:
        return p2
    if not t2:
        return p1
    # Both term lists honour the leading-first invariant; merge them.
    out = []
    i = j = 0
    n1, n2 = len(t1), len(t2)
    while i < n1 and j < n2:
        m1, c1 = t1[i]
        m2, c2 = t2[j]
        if m1 == m2:
            c = c1 + c2
            if not c.is_zero():
                out.append((m1, c))
            i += 1
            j += 1
        elif _mono_desc_key(m1) < _mono_desc_key(m2):
            out.append((m1, c1))
            i += 1
        else:
            out.append((m2, c2))
            j += 1
    out.extend(t1[i:])
    out.extend(t2[j:])
    return Poly(tuple(out))


def poly_neg(p: Poly) -> Poly:
    return Poly(tuple((m, -c) for m, c in p.terms))


def poly_scale(p: Poly, c: GQ) -> Poly:
    if c.is_zero():
        return P_ZERO
    return Poly(tuple((m, cc * c) for m, cc in p.terms))


def poly_mul(p1: Poly, p2: Poly) -> Poly:
    if p1.is_zero() or p2.is_zero():
        return P_ZERO
    acc = {}
    pending = []
    for m1, c1 in p1.terms:
        for m2, c2 in p2.terms:
            k, mono, extra = _mono_mul(m1, m2)
            c = c1 * c2 * k
            if extra:
                pending.append((mono, c, extra))
            else:
                cur = acc.get(mono)
                acc[mono] = c if cur is None else cur + c
    # Fold-back factors multiply into single monomials; everything lands
    # in the one accumulator so the cost stays linear in emitted terms.
    while pending:
        mono, c, extra = pending.pop()
        f = extra[0]
        rest = extra[1:]
        for mf, cf in f.terms:
            k2, mono2, extra2 = _mono_mul(mono, mf)
            c2 = c * cf * k2
            todo = extra2 + rest if extra2 else rest
            if todo:
                pending.append((mono2, c2, todo))
            else:
                cur = acc.get(mono2)
                acc[mono2] = c2 if cur is None else cur + c2
    return Poly.from_dict(acc)


def poly_pow_int(p: Poly, n: int) -> Poly:
    out = P_ONE
    b = p
    while n:
        if n & 1:
            out = poly_mul(out, b)
        b = poly_mul(b, b)
        n >>= 1
    return out


def _poly_has_exp(p: Poly) -> bool:
    return any(a[0] == "exp" for m, _ in p.terms for a, _ in m)


def _mono_div(m1, m2):
    d = dict(m1)
    for a, e in m2:
        have = d.get(a, 0)
        if have < e:
            return None
        if have == e:
            del d[a]
        else:
            d[a] = have - e
    return tuple(sorted(d.items(), key=lambda t: atom_key(t[0])))


def poly_try_divide(p: Poly, d: Poly):
    """Exact division p / d; returns the quotient Poly or None.

    Restricted to exp-free polynomials.  A strict-decrease guard aborts
    when fractional-power fold-backs break leading-term cancellation:
    the test may miss a cancellation but is never wrong.
    """
    if d.is_zero():
        return None
    if _poly_has_exp(p) or _poly_has_exp(d):
        return None
    rem = p
    quot = {}
    lt_d_mono, lt_d_c = d.leading()
    steps = 0
    while not rem.is_zero():
        steps += 1
        if steps > 400:
            return None
        lt_m, lt_c = rem.leading()
        qm = _mono_div(lt_m, lt_d_mono)
        if qm is None:
            return None
        qc = lt_c / lt_d_c
        cur = quot.get(qm)
        quot[qm] = qc if cur is None else cur + qc
        prod = poly_mul(Poly(((qm, qc),)), d)
        new_rem = poly_add(rem, poly_neg(prod))
        if not new_rem.is_zero() and _mono_cmp(new_rem.leading()[0], lt_m) >= 0:
            return None
        rem = new_rem
    return Poly.from_dict(quot)


# ---------------------------------------------------------------------------
# Rational forms

class Expr:
    """Canonical rational form num / prod(factor^mult)."""

    __slots__ = ("num", "den", "_keyc", "_hash")

    def __init__(self, num: Poly, den: tuple):
        self.num = num
        self.den = den
        self._keyc = None
        self._hash = None

    def key(self):
        if self._keyc is None:
            self._keyc = (self.num.key(),
                          tuple((f.key(), m) for f, m in self.den))
        return self._keyc

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, o):
        return isinstance(o, Expr) and self.key() == o.key()

    def __repr__(self):
        from .parse import print_expr
        return f"Expr[{print_expr(self)}]"

    def is_structural_zero(self):
        return self.num.is_zero()

    def is_structural_one(self):
        return not self.den and self.num == P_ONE

    def is_constant(self):
        return _expr_is_constant(self)

    def const_value(self):
        """GQ value if the canonical form is a bare constant, else None."""
        if self.den or not self.num.is_constant():
            return None
        return self.num.const_value()

    # arithmetic -----------------------------------------------------

    def __add__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _add(self, _neg(o))

    def __rsub__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _add(o, _neg(self))

    def __neg__(self):
        return _neg(self)

    def __mul__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _mul(self, _inv(o))

    def __rtruediv__(self, o):
        o = _coerce(o)
        return NotImplemented if o is NotImplemented else _mul(o, _inv(self))

    def __pow__(self, q):
        if isinstance(q, int) or isinstance(q, Fraction):
            return powr(self, Fraction(q))
        return NotImplemented

    # calculus and rewriting ----------------------------------------

    def diff(self, name: str) -> "Expr":
        return _diff(self, name)

    def subs(self, mapping) -> "Expr":
        return _subs(self, mapping)

    def subs_functions(self, bindings) -> "Expr":
        return _subs_functions(self, bindings)

    # zero testing ---------------------------------------------------

    def is_zero_decision(self) -> str:
        return _is_zero(self)

    def evalc(self, env, fnvals=None) -> complex:
        return _eval_expr(self, env, fnvals if fnvals is not None else {})


def _expr_is_constant(e: Expr) -> bool:
    return (all(_mono_is_constant(m) for m, _ in e.num.terms)
            and all(_mono_is_constant(m) for f, _ in e.den
                    for m, _ in f.terms))


def _coerce(o):
    if isinstance(o, Expr):
        return o
    if isinstance(o, int):
        return integer(o)
    if isinstance(o, Fraction):
        return Expr(Poly.const(GQ(o)), ())
    if isinstance(o, GQ):
        return Expr(Poly.const(o), ())
    return NotImplemented


# construction / normalization ------------------------------------------

def _make(num: Poly, den_list) -> Expr:
    """Normalize a raw rational form; den_list holds (Poly, int) pairs."""
    if num.is_zero():
        return ZERO
    coeff = Q1
    flat = {}
    comp = None  # compensation factor for surd/pow/exp denominators

    def mulcomp(piece: Expr):
        nonlocal comp
        comp = piece if comp is None else comp * piece

    for f, mult in den_list:
        if mult == 0:
            continue
        if mult < 0:
            raise ValueError("negative denominator multiplicity")
        if f.is_zero():
            raise ZeroDivisionError("zero denominator factor")
        if f.is_constant():
            coeff = coeff * (f.const_value() ** mult).inv()
            continue
        if len(f.terms) == 1:
            mono, c = f.terms[0]
            coeff = coeff * (c ** mult).inv()
            for a, e in mono:
                if a[0] in ("exp", "surd", "pow"):
                    mulcomp(_atom_pow(a, Fraction(-e * mult)))
                else:
                    af = Poly.atom(a)
                    flat[af] = flat.get(af, 0) + e * mult
            continue
        lc = f.leading()[1]
        if not (lc == Q1):
            f = poly_scale(f, lc.inv())
            coeff = coeff * (lc ** mult).inv()
        flat[f] = flat.get(f, 0) + mult

    if not (coeff == Q1):
        num = poly_scale(num, coeff)
    if num.is_zero():
        return ZERO

    out = []
    for f in sorted(flat, key=lambda p: p.key()):
        mult = flat[f]
        while mult > 0 and not num.is_constant():
            q = poly_try_divide(num, f)
            if q is None:
                break
            num = q
            mult -= 1
        if mult > 0:
            out.append((f, mult))
    if num.is_zero():
        return ZERO
    base = Expr(num, tuple(out))
    return base if comp is None else comp * base


ZERO = Expr(P_ZERO, ())
ONE = Expr(P_ONE, ())


def integer(n: int) -> Expr:
    return Expr(Poly.const(GQ(n)), ())


def rational(p, q=1) -> Expr:
    return Expr(Poly.const(GQ(Fraction(p, q))), ())


def gauss(re, im) -> Expr:
    return Expr(Poly.const(GQ(re, im)), ())


I = Expr(Poly.const(QI), ())

_COORD_EXPRS = tuple(Expr(Poly.atom(("coord", i)), ()) for i in range(4))


def coord(name: str) -> Expr:
    return _COORD_EXPRS[COORD_NAMES.index(name)]


def param(name: str) -> Expr:
    if name in COORD_NAMES or name == "i":
        raise ValueError(f"reserved name {name!r}")
    return Expr(Poly.atom(("param", name)), ())


def _add(a: Expr, b: Expr) -> Expr:
    if a.is_structural_zero():
        return b
    if b.is_structural_zero():
        return a
    fa = dict(a.den)
    fb = dict(b.den)
    allf = dict(fa)
    for f, m in fb.items():
        allf[f] = max(allf.get(f, 0), m)
    na = a.num
    nb = b.num
    for f, m in allf.items():
        da = m - fa.get(f, 0)
        if da:
            na = poly_mul(na, poly_pow_int(f, da))
        db = m - fb.get(f, 0)
        if db:
            nb = poly_mul(nb, poly_pow_int(f, db))
    return _make(poly_add(na, nb), tuple(allf.items()))


def _neg(a: Expr) -> Expr:
    if a.is_structural_zero():
        return a
    return Expr(poly_neg(a.num), a.den)


def _mul(a: Expr, b: Expr) -> Expr:
    if a.is_structural_zero() or b.is_structural_zero():
        return ZERO
    return _make(poly_mul(a.num, b.num), list(a.den) + list(b.den))


def _inv(a: Expr) -> Expr:
    if a.is_structural_zero():
        raise ZeroDivisionError("division by zero expression")
    num = P_ONE
    for f, m in a.den:
        num = poly_mul(num, poly_pow_int(f, m))
    return _make(num, [(a.num, 1)])


# powers ----------------------------------------------------------------

def _qpow(c: GQ, q: Fraction) -> Expr:
    """c^q for a Gaussian-rational constant and rational exponent."""
    if q.denominator == 1:
        return Expr(Poly.const(c ** q.numerator), ())
    if c.is_zero():
        return ZERO
    if not c.is_rational():
        raise UnsupportedExpression(
            f"fractional power of complex constant {c!r}")
    r = c.re
    out = ONE
    if r < 0:
        if q.denominator != 2:
            raise UnsupportedExpression(
                f"fractional power {q} of a negative constant")
        out = Expr(Poly.const(QI ** q.numerator), ())
        r = -r
    factors = {}
    for p, a in _prime_factors(r.numerator).items():
        factors[p] = factors.get(p, 0) + Fraction(a)
    for p, a in _prime_factors(r.denominator).items():
        factors[p] = factors.get(p, 0) - Fraction(a)
    for p, a in sorted(factors.items()):
        tot = a * q
        n = tot // 1
        f = tot - n
        out = out * Expr(Poly.const(GQ(Fraction(p) ** int(n))), ())
        if f:
            out = out * Expr(Poly.atom(("surd", p, f)), ())
    return out


def _pow_poly(p: Poly, q: Fraction) -> Expr:
    """p^q for rational q."""
    if q == 0:
        return ONE
    if p.is_zero():
        if q > 0:
            return ZERO
        raise ZeroDivisionError("zero base with nonpositive exponent")
    if q.denominator == 1:
        n = q.numerator
        if n > 0:
            return Expr(poly_pow_int(p, n), ())
        return _make(P_ONE, [(p, -n)])
    if p.is_constant():
        return _qpow(p.const_value(), q)
    if len(p.terms) == 1:
        mono, c = p.terms[0]
        out = _qpow(c, q)
        for a, e in mono:
            out = out * _atom_pow(a, e * q)
        return out
    cont = p.coeff_content()
    base = poly_scale(p, GQ(cont).inv())
    sign = ONE
    lc = base.leading()[1]
    if lc.is_rational() and lc.re < 0:
        base = poly_neg(base)
        sign = _qpow(GQ(-1), q)
    out = _qpow(GQ(cont), q) * sign
    n = q // 1
    f = q - n
    if n > 0:
        out = out * Expr(poly_pow_int(base, int(n)), ())
    elif n < 0:
        out = out * _make(P_ONE, [(base, int(-n))])
    if f:
        out = out * Expr(Poly.atom(("pow", base, f)), ())
    return out


def _atom_pow(a, q: Fraction) -> Expr:
    """atom^q for rational q of either sign."""
    q = Fraction(q)
    if q == 0:
        return ONE
    tag = a[0]
    if tag == "exp":
        return exp_of(a[1] * Expr(Poly.const(GQ(q)), ()))
    if tag == "surd":
        return _qpow(GQ(Fraction(a[1])), a[2] * q)
    if tag == "pow":
        return _pow_poly(a[1], a[2] * q)
    n = q // 1
    f = q - n
    out = ONE
    if n:
        out = _pow_poly(Poly.atom(a), Fraction(n))
    if f:
        out = out * Expr(Poly.atom(("pow", Poly.atom(a), f)), ())
    return out


def powr(e: Expr, q) -> Expr:
    q = Fraction(q)
    if q == 0:
        return ONE
    if q.denominator == 1 and q > 0:
        n = q.numerator
        if not e.den:
            return Expr(poly_pow_int(e.num, n), ())
        return _make(poly_pow_int(e.num, n), [(f, m * n) for f, m in e.den])
    out = _pow_poly(e.num, q)
    for f, m in e.den:
        out = out * _pow_poly(f, -q * m)
    return out


def sqrt_of(e: Expr) -> Expr:
    return powr(e, Fraction(1, 2))


# elementary applications -----------------------------------------------

def exp_of(arg: Expr) -> Expr:
    if arg.is_structural_zero():
        return ONE
    extracted = ONE
    rest = {}
    do_extract = not arg.den
    for m, c in arg.num.terms:
        if (do_extract and len(m) == 1 and m[0][1] == 1
                and m[0][0][0] == "ln" and c.is_rational()):
            u = m[0][0][1]
            try:
                extracted = extracted * powr(u, Fraction(c.re))
                continue
            except (UnsupportedExpression, ZeroDivisionError):
                pass
        rest[m] = rest.get(m, Q0) + c
    rest_poly = Poly.from_dict(rest)
    if rest_poly.is_zero():
        return extracted
    rest_expr = Expr(rest_poly, arg.den)
    return extracted * Expr(Poly.atom(("exp", rest_expr)), ())


def ln_of(arg: Expr) -> Expr:
    if arg.is_structural_zero():
        raise ZeroDivisionError("ln(0)")
    if arg.is_structural_one():
        return ZERO
    if arg.den:
        out = ln_of(Expr(arg.num, ()))
        for f, m in arg.den:
            out = out - integer(m) * ln_of(Expr(f, ()))
        return out
    num = arg.num
    if len(num.terms) == 1:
        mono, c = num.terms[0]
        if c.is_rational() and c.re > 0:
            out = ZERO
            for p, a in sorted(_prime_factors(c.re.numerator).items()):
                out = out + integer(a) * _ln_atom(integer(p))
            for p, a in sorted(_prime_factors(c.re.denominator).items()):
                out = out - integer(a) * _ln_atom(integer(p))
            for a, e in mono:
                out = out + _ln_of_atom_power(a, e)
            return out
    return _ln_atom(arg)


def _ln_of_atom_power(a, e) -> Expr:
    tag = a[0]
    if tag == "exp":
        return a[1] * integer(e)
    if tag == "surd":
        return Expr(Poly.const(GQ(a[2] * e)), ()) * _ln_atom(integer(a[1]))
    if tag == "pow":
        return Expr(Poly.const(GQ(a[2] * e)), ()) * ln_of(Expr(a[1], ()))
    return integer(e) * _ln_atom(Expr(Poly.atom(a), ()))


def _ln_atom(arg: Expr) -> Expr:
    if arg.is_structural_one():
        return ZERO
    return Expr(Poly.atom(("ln", arg)), ())


def trig_of(kind: str, arg: Expr) -> Expr:
    if kind not in TRIG_KINDS:
        raise ValueError(f"unknown trig kind {kind!r}")
    if arg.is_structural_zero():
        return ONE if kind == "cos" else ZERO
    if kind == "tan" and not arg.den and len(arg.num.terms) == 1:
        m, c = arg.num.terms[0]
        if (c == Q1 and len(m) == 1 and m[0][1] == 1
                and m[0][0][0] == "trig" and m[0][0][1] == "arctan"):
            return m[0][0][2]
    return Expr(Poly.atom(("trig", kind, arg)), ())


def fnapp(name: str, args, midx=None) -> Expr:
    args = tuple(args)
    if midx is None:
        midx = (0,) * len(args)
    midx = tuple(int(k) for k in midx)
    if len(midx) != len(args) or any(k < 0 for k in midx):
        raise ValueError("bad derivative multi-index")
    return Expr(Poly.atom(("fn", name, args, midx)), ())


def atom_expr(a) -> Expr:
    """Wrap a raw atom back into a canonical expression."""
    return _make(Poly.atom(a), ())


def monomial_expr(mono, coeff: GQ) -> Expr:
    """Rebuild an expression from a monomial and its coefficient."""
    out = Expr(Poly.const(coeff), ())
    for a, p in mono:
        out = out * powr(atom_expr(a), p)
    return out


# ---------------------------------------------------------------------------
# Structural recursion

def map_atoms(e: Expr, atom_fn) -> Expr:
    """Rebuild e, replacing atoms via atom_fn(atom, recurse) -> Expr | None.

    ``recurse`` maps any sub-Expr through the same transformation; a None
    result rebuilds the atom with transformed sub-expressions.  All
    construction rewrites refire, so the result is canonical.
    """
    def walk_expr(x: Expr) -> Expr:
        out = walk_poly(x.num)
        for f, m in x.den:
            out = out / powr(walk_poly(f), Fraction(m))
        return out

    def walk_poly(p: Poly) -> Expr:
        tot = ZERO
        for mono, c in p.terms:
            term = Expr(Poly.const(c), ())
            for a, ex in mono:
                term = term * powr(visit(a), Fraction(ex))
            tot = tot + term
        return tot

    def visit(a) -> Expr:
        r = atom_fn(a, walk_expr)
        if r is not None:
            return r
        tag = a[0]
        if tag in ("coord", "param", "surd"):
            return Expr(Poly.atom(a), ())
        if tag == "pow":
            return powr(walk_poly(a[1]), a[2])
        if tag == "exp":
            return exp_of(walk_expr(a[1]))
        if tag == "ln":
            return ln_of(walk_expr(a[1]))
        if tag == "trig":
            return trig_of(a[1], walk_expr(a[2]))
        return fnapp(a[1], tuple(walk_expr(x) for x in a[2]), a[3])

    return walk_expr(e)


def _subs(e: Expr, mapping) -> Expr:
    table = {}
    for k, v in mapping.items():
        if k in COORD_NAMES:
            table[("coord", COORD_NAMES.index(k))] = v
        else:
            table[("param", k)] = v

    def atom_fn(a, rec):
        return table.get(a)

    return map_atoms(e, atom_fn)


def _subs_functions(e: Expr, bindings) -> Expr:
    """bindings: {name: (slot_param_names, template Expr)}.

    D-indexed applications substitute the template differentiated with
    respect to its slot placeholders, evaluated at the (mapped) args.
    """
    def atom_fn(a, rec):
        if a[0] == "fn" and a[1] in bindings:
            slots, template = bindings[a[1]]
            if len(slots) != len(a[2]):
                raise ValueError(f"arity mismatch binding {a[1]!r}")
            body = template
            for s, k in zip(slots, a[3]):
                for _ in range(k):
                    body = _diff(body, s)
            return _subs(body, {s: rec(arg) for s, arg in zip(slots, a[2])})
        return None

    return map_atoms(e, atom_fn)


# differentiation -------------------------------------------------------

_DIFF_ATOM_CACHE = {}


def _diff_atom(a, name: str) -> Expr:
    cached = _DIFF_ATOM_CACHE.get((a, name))
    if cached is not None:
        return cached
    r = _diff_atom_raw(a, name)
    _DIFF_ATOM_CACHE[(a, name)] = r
    return r


def _diff_atom_raw(a, name: str) -> Expr:
    tag = a[0]
    if tag == "coord":
        return ONE if COORD_NAMES[a[1]] == name else ZERO
    if tag == "param":
        return ONE if a[1] == name else ZERO
    if tag == "surd":
        return ZERO
    if tag == "pow":
        db = _diff_poly(a[1], name)
        if db.is_structural_zero():
            return ZERO
        return Expr(Poly.const(GQ(a[2])), ()) * _pow_poly(a[1], a[2] - 1) * db
    if tag == "exp":
        du = _diff(a[1], name)
        if du.is_structural_zero():
            return ZERO
        return Expr(Poly.atom(a), ()) * du
    if tag == "ln":
        du = _diff(a[1], name)
        if du.is_structural_zero():
            return ZERO
        return du / a[1]
    if tag == "trig":
        kind, u = a[1], a[2]
        du = _diff(u, name)
        if du.is_structural_zero():
            return ZERO
        if kind == "sin":
            return trig_of("cos", u) * du
        if kind == "cos":
            return -trig_of("sin", u) * du
        if kind == "tan":
            tu = trig_of("tan", u)
            return (ONE + tu * tu) * du
        if kind == "tanh":
            tu = trig_of("tanh", u)
            return (ONE - tu * tu) * du
        return du / (ONE + u * u)  # arctan
    fname, args, midx = a[1], a[2], a[3]
    out = ZERO
    for j, arg in enumerate(args):
        da = _diff(arg, name)
        if da.is_structural_zero():
            continue
        bumped = tuple(m + (1 if k == j else 0) for k, m in enumerate(midx))
        out = out + fnapp(fname, args, bumped) * da
    return out


def _balanced_sum(pieces) -> Expr:
    """Sum a list of exprs pairwise to keep intermediate forms small."""
    if not pieces:
        return ZERO
    while len(pieces) > 1:
        nxt = [pieces[k] + pieces[k + 1]
               for k in range(0, len(pieces) - 1, 2)]
        if len(pieces) % 2:
            nxt.append(pieces[-1])
        pieces = nxt
    return pieces[0]


_DIFF_POLY_CACHE = {}


def _diff_poly(p: Poly, name: str) -> Expr:
    cached = _DIFF_POLY_CACHE.get((p, name))
    if cached is not None:
        return cached
    pieces = []
    for m, c in p.terms:
        for i, (a, e) in enumerate(m):
            da = _diff_atom(a, name)
            if da.is_structural_zero():
                continue
            rest_mono = tuple(pair for j, pair in enumerate(m) if j != i)
            piece = Expr(Poly(((rest_mono, c * GQ(Fraction(e))),)), ())
            if e != 1:
                piece = piece * _atom_pow(a, Fraction(e - 1))
            pieces.append(piece * da)
    r = _balanced_sum(pieces)
    _DIFF_POLY_CACHE[(p, name)] = r
    return r


_DIFF_CACHE = {}


def _diff(e: Expr, name: str) -> Expr:
    cached = _DIFF_CACHE.get((e, name))
    if cached is not None:
        return cached
    dnum = _diff_poly(e.num, name)
    if not e.den:
        _DIFF_CACHE[(e, name)] = dnum
        return dnum
    out = ZERO if dnum.is_structural_zero() \
        else dnum * Expr(P_ONE, e.den)
    for idx, (f, m) in enumerate(e.den):
        df = _diff_poly(f, name)
        if df.is_structural_zero():
            continue
        den2 = tuple((ff, mm + 1 if j == idx else mm)
                     for j, (ff, mm) in enumerate(e.den))
        out = out - integer(m) * Expr(e.num, den2) * df
    _DIFF_CACHE[(e, name)] = out
    return out


# trig rewriting (zero-test support) ------------------------------------

def rewrite_trig(e: Expr) -> Expr:
    """Rewrite sin/cos/tan/tanh to complex exponentials (arctan kept)."""
    def atom_fn(a, rec):
        if a[0] == "trig" and a[1] != "arctan":
            kind = a[1]
            u = rec(a[2])
            if kind == "tanh":
                hp = exp_of(u)
                hm = exp_of(-u)
                return (hp - hm) / (hp + hm)
            ep = exp_of(I * u)
            em = exp_of(-(I * u))
            if kind == "sin":
                return (ep - em) / (2 * I)
            if kind == "cos":
                return (ep + em) / integer(2)
            return (ep - em) / ((ep + em) * I)  # tan
        return None

    return map_atoms(e, atom_fn)


# ---------------------------------------------------------------------------
# Atom collection helpers

def collect_atoms(e: Expr):
    """All atoms of e, including those nested inside atom arguments."""
    out = set()

    def from_poly(p):
        for m, _ in p.terms:
            for a, _ in m:
                visit(a)

    def from_expr(x):
        from_poly(x.num)
        for f, _ in x.den:
            from_poly(f)

    def visit(a):
        if a in out:
            return
        out.add(a)
        tag = a[0]
        if tag == "pow":
            from_poly(a[1])
        elif tag in ("exp", "ln"):
            from_expr(a[1])
        elif tag == "trig":
            from_expr(a[2])
        elif tag == "fn":
            for x in a[2]:
                from_expr(x)

    from_expr(e)
    return out


def depends_on(e: Expr, name: str) -> bool:
    """Does e reference the coordinate or parameter ``name`` anywhere?"""
    if name in COORD_NAMES:
        target = ("coord", COORD_NAMES.index(name))
    else:
        target = ("param", name)
    return target in collect_atoms(e)


# ---------------------------------------------------------------------------
# Numeric evaluation and the three-valued zero decision

class ZeroDecision:
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


def _fn_default_value(name, midx, argvals) -> float:
    """Deterministic real sample value for an opaque function jet."""
    payload = f"{name}|{midx}|" + "|".join(
        f"{v.real:.6f},{v.imag:.6f}" for v in argvals)
    h = hashlib.sha256(payload.encode()).digest()
    u = int.from_bytes(h[:6], "big") / float(1 << 48)
    return 0.4 + 0.9 * u


def _eval_atom(a, env, fnvals) -> complex:
    tag = a[0]
    if tag == "coord":
        return complex(env[COORD_NAMES[a[1]]])
    if tag == "param":
        return complex(env[a[1]])
    if tag == "surd":
        return complex(float(a[1]) ** float(a[2]))
    if tag == "pow":
        return _eval_poly(a[1], env, fnvals) ** float(a[2])
    if tag == "exp":
        return cmath.exp(_eval_expr(a[1], env, fnvals))
    if tag == "ln":
        return cmath.log(_eval_expr(a[1], env, fnvals))
    if tag == "trig":
        u = _eval_expr(a[2], env, fnvals)
        return {"sin": cmath.sin, "cos": cmath.cos, "tan": cmath.tan,
                "tanh": cmath.tanh, "arctan": cmath.atan}[a[1]](u)
    name, args, midx = a[1], a[2], a[3]
    argvals = tuple(_eval_expr(x, env, fnvals) for x in args)
    fn = fnvals.get(name)
    if fn is not None:
        return complex(fn(midx, argvals))
    return complex(_fn_default_value(name, midx, argvals))


def _eval_poly(p: Poly, env, fnvals) -> complex:
    tot = 0j
    for m, c in p.terms:
        v = c.as_complex()
        for a, e in m:
            av = _eval_atom(a, env, fnvals)
            v *= av ** e if isinstance(e, int) else av ** float(e)
        tot += v
    return tot


def _eval_expr(e: Expr, env, fnvals) -> complex:
    v = _eval_poly(e.num, env, fnvals)
    for f, m in e.den:
        v /= _eval_poly(f, env, fnvals) ** m
    return v


_SAMPLE_BASE = (
    {"t": Fraction(3, 8), "x1": Fraction(5, 8),
     "x2": Fraction(7, 16), "x3": Fraction(9, 16)},
    {"t": Fraction(7, 12), "x1": Fraction(11, 16),
     "x2": Fraction(5, 12), "x3": Fraction(13, 16)},
    {"t": Fraction(5, 16), "x1": Fraction(9, 20),
     "x2": Fraction(13, 20), "x3": Fraction(7, 10)},
)

_ZERO_EPS = 1e-9
_DEN_GUARD = 1e-6


def _param_sample(name: str) -> Fraction:
    h = hashlib.sha256(("param:" + name).encode()).digest()
    r = int.from_bytes(h[:4], "big") % 89
    return Fraction(37 + r, 64)


def _sample_env(atoms, round_idx: int, shift: int):
    env = {}
    for k, v in _SAMPLE_BASE[round_idx].items():
        env[k] = float(v + Fraction(shift, 23))
    for a in atoms:
        if a[0] == "param" and a[1] not in env:
            env[a[1]] = float(_param_sample(a[1]) + Fraction(shift, 31))
    return env


def _is_zero(e: Expr) -> str:
    if e.is_structural_zero():
        return ZeroDecision.ZERO
    atoms = collect_atoms(e)
    if any(a[0] == "trig" and a[1] != "arctan" for a in atoms):
        try:
            r = rewrite_trig(e)
            if r.is_structural_zero():
                return ZeroDecision.ZERO
            e = r
            atoms = collect_atoms(e)
        except (UnsupportedExpression, ZeroDivisionError):
            pass
    for round_idx in range(3):
        for shift in range(8):
            env = _sample_env(atoms, round_idx, shift)
            try:
                dmag = 1.0
                for f, m in e.den:
                    dmag = min(dmag, abs(_eval_poly(f, env, {})))
                if dmag < _DEN_GUARD:
                    continue
                v = _eval_expr(e, env, {})
            except (ZeroDivisionError, OverflowError, ValueError):
                continue
            if v != v:  # nan
                continue
            if abs(v) > _ZERO_EPS:
                return ZeroDecision.NONZERO
            break
    return ZeroDecision.UNKNOWN
