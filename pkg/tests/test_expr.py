"""Expression core: canonical arithmetic, calculus, zero decisions.

Expected values here are frozen from hand derivations (quotient rule,
chain rule, power laws); the numeric cross-checks evaluate both sides
at an arbitrary interior point.
"""

from fractions import Fraction

import pytest

from schrosym.expr import (
    GQ, I, ONE, ZERO, ZeroDecision, coord, exp_of, fnapp, integer, ln_of,
    param, powr, rational, sqrt_of, trig_of, depends_on,
)
from schrosym.parse import ParseContext, ParseError, parse_expr, print_expr

T = coord("t")
X1 = coord("x1")
X2 = coord("x2")
X3 = coord("x3")
W = param("w")

ENV = {"t": 0.41, "x1": 0.73, "x2": 0.57, "x3": 0.89, "w": 1.13,
       "kappa": 0.67, "alpha": 0.83}


def close(a, b, tol=1e-10):
    return abs(a - b) < tol


# ---------------------------------------------------------------------------
# scalars and ring arithmetic

def test_gaussian_rational_field():
    a = GQ(Fraction(1, 2), Fraction(3, 4))
    b = GQ(Fraction(-2), Fraction(1, 3))
    assert (a * b) * a.inv() == b
    assert (a / b) * b == a
    assert GQ(0, 1) ** 4 == GQ(1)
    assert GQ(0, 1) ** 3 == GQ(0, -1)


def test_exact_cancellation():
    e = (X1 ** 2 - X2 ** 2) / (X1 - X2)
    assert e == X1 + X2


def test_sum_over_common_denominator():
    e = X1 / X3 + X2 / X3
    assert e == (X1 + X2) / X3
    assert print_expr(e) == "(x1 + x2)/(x3)"


def test_zero_by_combination():
    u = fnapp("u", [T])
    e = X1 ** 2 * u + X2 ** 2 * u - (X1 ** 2 + X2 ** 2) * u
    assert e.is_structural_zero()


def test_division_reduction_against_den_factor():
    e = (X1 ** 3 + X1 ** 2 * X2) / (X1 + X2)
    assert e == X1 ** 2


def test_power_laws():
    r2 = X1 ** 2 + X2 ** 2 + X3 ** 2
    r = sqrt_of(r2)
    assert r * r == r2
    assert powr(r, 3) * r == r2 * r2
    assert powr(r2, Fraction(3, 2)) == r2 * r
    assert powr(X1, Fraction(-1, 2)) * sqrt_of(X1) * X1 == X1


def test_constant_radicals():
    assert sqrt_of(integer(4)) == integer(2)
    assert sqrt_of(integer(8)) == integer(2) * sqrt_of(integer(2))
    assert sqrt_of(integer(-4)) == 2 * I
    assert sqrt_of(rational(1, 2)) * sqrt_of(integer(2)) == ONE
    s6 = sqrt_of(integer(6))
    assert s6 == sqrt_of(integer(2)) * sqrt_of(integer(3))
    assert close(s6.evalc(ENV), 6 ** 0.5)


def test_exp_folding():
    a = exp_of(W * T) * exp_of(2 * W * T)
    assert a == exp_of(3 * W * T)
    assert exp_of(W * T) * exp_of(-W * T) == ONE
    assert powr(exp_of(W * T), 2) == exp_of(2 * W * T)


def test_ln_exp_inverse_pair():
    assert ln_of(exp_of(2 * W * T)) == 2 * W * T
    assert exp_of(3 * ln_of(T)) == T ** 3
    assert ln_of(T ** 2 * X1) == 2 * ln_of(T) + ln_of(X1)
    assert ln_of(integer(4)) == 2 * ln_of(integer(2))
    # symbolic exponent stays wrapped: exp(w*ln(t)) is t^w, left opaque
    sym = exp_of(W * ln_of(T))
    assert close(sym.evalc(ENV), ENV["t"] ** ENV["w"])


def test_tan_arctan():
    u = X2 / X1
    assert trig_of("tan", trig_of("arctan", u)) == u


# ---------------------------------------------------------------------------
# differentiation

def test_diff_polynomial():
    e = X1 ** 3 * X2 + 2 * X1 * X2 - 7
    assert e.diff("x1") == 3 * X1 ** 2 * X2 + 2 * X2
    assert e.diff("x2") == X1 ** 3 + 2 * X1
    assert e.diff("x3") == ZERO


def test_diff_quotient():
    e = X1 / (X1 + X2)
    # note (X1+X2)**-2 keeps the square factored, matching the canonical den
    assert e.diff("x1") == X2 * powr(X1 + X2, -2)
    assert e.diff("x2") == -X1 * powr(X1 + X2, -2)
    assert (e.diff("x1") - X2 / ((X1 + X2) ** 2)).is_zero_decision() \
        == ZeroDecision.ZERO


def test_diff_sqrt_radius():
    r = sqrt_of(X1 ** 2 + X2 ** 2 + X3 ** 2)
    d = r.diff("x1")
    assert (d - X1 / r).is_zero_decision() == ZeroDecision.ZERO


def test_diff_arctan_azimuth():
    phi = trig_of("arctan", X2 / X1)
    assert (phi.diff("x1") + X2 / (X1 ** 2 + X2 ** 2)).is_structural_zero()
    assert (phi.diff("x2") - X1 / (X1 ** 2 + X2 ** 2)).is_structural_zero()


def test_diff_exp_ln_trig():
    assert exp_of(W * T).diff("t") == W * exp_of(W * T)
    assert ln_of(T).diff("t") == ONE / T
    assert trig_of("sin", W * T).diff("t") == W * trig_of("cos", W * T)
    assert trig_of("tanh", T).diff("t") == ONE - trig_of("tanh", T) ** 2


def test_diff_function_symbol_chain_rule():
    # d/dx1 F(x1^2, x2) = 2 x1 D1[F](x1^2, x2)
    f = fnapp("F", [X1 ** 2, X2])
    d = f.diff("x1")
    expect = 2 * X1 * fnapp("F", [X1 ** 2, X2], (1, 0))
    assert d == expect


def test_clairaut_symmetry():
    f = fnapp("F", [X1, X2])
    assert f.diff("x1").diff("x2") == f.diff("x2").diff("x1")


def test_diff_wrt_parameter():
    e = W ** 2 * T + X1
    assert e.diff("w") == 2 * W * T


# ---------------------------------------------------------------------------
# substitution

def test_substitute_coordinates():
    e = X1 ** 2 + X2
    out = e.subs({"x1": T + 1, "x2": integer(3)})
    assert out == (T + 1) ** 2 + 3


def test_substitution_is_simultaneous():
    e = X1 * X2
    out = e.subs({"x1": X2, "x2": X1})
    assert out == X1 * X2


def test_substitute_into_function_args():
    f = fnapp("F", [X1, X2], (1, 0))
    out = f.subs({"x1": T})
    assert out == fnapp("F", [T, X2], (1, 0))


def test_function_binding_with_derivatives():
    # bind F(u,v) = u^2 v, then D11[F](x1, x2) = 2 x2
    ctx = ParseContext().with_params("u", "v")
    template = parse_expr("u^2*v", ctx)
    e = fnapp("F", [X1, X2], (2, 0))
    out = e.subs_functions({"F": (("u", "v"), template)})
    assert out == 2 * X2
    e1 = fnapp("F", [T, X3], (1, 1))
    assert e1.subs_functions({"F": (("u", "v"), template)}) == 2 * T


def test_exp_ln_fold_after_substitution():
    # substitution t -> ln(t)/(2w) inside exp must collapse
    e = exp_of(2 * W * T)
    out = e.subs({"t": ln_of(T) / (2 * W)})
    assert out == T


# ---------------------------------------------------------------------------
# zero decisions

def test_pythagorean_zero_via_trig_rewrite():
    s = trig_of("sin", W * T)
    c = trig_of("cos", W * T)
    assert (s * s + c * c - 1).is_zero_decision() == ZeroDecision.ZERO


def test_tan_identity_zero():
    u = W * T
    e = trig_of("tan", u) * trig_of("cos", u) - trig_of("sin", u)
    assert e.is_zero_decision() == ZeroDecision.ZERO


def test_nonzero_witness():
    assert (X1 - X2).is_zero_decision() == ZeroDecision.NONZERO
    assert (exp_of(T) - 1).is_zero_decision() == ZeroDecision.NONZERO


def test_function_jets_are_independent():
    f = fnapp("F", [X1, X2])
    g = fnapp("F", [X1, X2], (1, 0))
    assert (f - g).is_zero_decision() == ZeroDecision.NONZERO


def test_unknown_for_unmodeled_identity():
    # sin(arctan(u)) = u/sqrt(1+u^2) holds but is outside the rewrite
    # set; the decision must degrade to UNKNOWN, never NONZERO
    u = X2 / X1
    lhs = trig_of("sin", trig_of("arctan", u))
    rhs = u / sqrt_of(1 + u * u)
    assert (lhs - rhs).is_zero_decision() == ZeroDecision.UNKNOWN


def test_depends_on():
    e = exp_of(W * T) * X1
    assert depends_on(e, "t")
    assert depends_on(e, "w")
    assert not depends_on(e, "x2")


# ---------------------------------------------------------------------------
# numeric evaluation

def test_eval_matches_closed_form():
    e = exp_of(W * T) * sqrt_of(X1 ** 2 + X2 ** 2) / X3
    import math
    want = (math.exp(ENV["w"] * ENV["t"])
            * math.hypot(ENV["x1"], ENV["x2"]) / ENV["x3"])
    assert close(e.evalc(ENV), want)


def test_eval_gaussian_coefficient():
    e = (2 + 3 * I) * X1
    assert close(e.evalc(ENV), complex(2, 3) * ENV["x1"])


# ---------------------------------------------------------------------------
# parsing and printing

ROUNDTRIP = [
    "x1^2 + 2*x2*x3 - 1/2",
    "exp(w*t)*(x1 - i*x2)",
    "D12[F](x1,x2) + F(x1,x2)",
    "r^(-3)",
    "kappa/rt^2",
    "sqrt(2)*x1",
    "(x1^2+x2^2)^(1/2)",
    "alpha*x1*x3/r^3",
    "ln(t)/(2*w)",
    "arctan(x2/x1)",
    "tanh(w*t)",
    "1/x3^2",
    "-x2/rt^2",
]


@pytest.mark.parametrize("text", ROUNDTRIP)
def test_print_parse_roundtrip(text):
    ctx = ParseContext().with_functions(F=2)
    e = parse_expr(text, ctx)
    assert parse_expr(print_expr(e), ctx) == e


def test_macro_expansion():
    assert parse_expr("r^2") == parse_expr("x1^2+x2^2+x3^2")
    assert parse_expr("rt^2") == parse_expr("x1^2+x2^2")
    assert parse_expr("rho") == ln_of(sqrt_of(X1 ** 2 + X2 ** 2))
    assert parse_expr("phi") == trig_of("arctan", X2 / X1)


def test_polar_gradient_identities():
    # d(rho)/dx1 = x1/rt^2 and d(phi)/dx1 = -x2/rt^2, frozen by hand
    rho = parse_expr("rho")
    phi = parse_expr("phi")
    rt2 = X1 ** 2 + X2 ** 2
    assert (rho.diff("x1") - X1 / rt2).is_structural_zero()
    assert (rho.diff("x2") - X2 / rt2).is_structural_zero()
    assert (phi.diff("x1") + X2 / rt2).is_structural_zero()
    assert (phi.diff("x2") - X1 / rt2).is_structural_zero()


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_expr("x1 +")
    with pytest.raises(ParseError):
        parse_expr("unknown_name")
    with pytest.raises(ParseError):
        parse_expr("F(x1)")  # undeclared function
    with pytest.raises(ParseError):
        parse_expr("D13[F](x1,x2)", ParseContext().with_functions(F=2))
    with pytest.raises(ParseError):
        parse_expr("x1^x2")


def test_integer_only_literals():
    with pytest.raises(ParseError):
        parse_expr("0.5*x1")


def test_fraction_exponent_forms():
    ctx = ParseContext()
    assert parse_expr("x3^-1", ctx) == 1 / X3
    assert parse_expr("x3^(-2)", ctx) == 1 / X3 ** 2
    assert parse_expr("(x1^2+x2^2)^(3/2)", ctx) \
        == powr(X1 ** 2 + X2 ** 2, Fraction(3, 2))
