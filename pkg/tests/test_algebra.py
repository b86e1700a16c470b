"""Span decisions, closure, and invariant fingerprints."""

import pytest

from schrosym.algebra import (
    AlgebraFingerprint,
    ClosureOverflow,
    LABEL_FINGERPRINTS,
    abstract_closure,
    check_antisymmetry_and_jacobi,
    close_algebra,
    fingerprint,
    match_labels,
    span_express,
)
from schrosym.expr import I, ONE, ZERO, coord, gauss, integer, param
from schrosym.generators import (
    boost_exp,
    conformal,
    dilatation,
    free_symmetry_basis,
    ga,
    identity_op,
    la,
    p0,
    pa,
)
from schrosym.operators import DiffOperator


class TestSpanExpress:
    def test_direct_member(self):
        coeffs = span_express(dilatation(), [p0(), dilatation()])
        assert coeffs is not None
        assert coeffs[0].is_zero_decision() == "zero"
        assert (coeffs[1] - ONE).is_zero_decision() == "zero"

    def test_commutator_lands_in_span(self):
        comm = p0().commutator(conformal())
        coeffs = span_express(comm, [p0(), dilatation(), conformal()])
        assert coeffs is not None
        assert (coeffs[1] - I).is_zero_decision() == "zero"
        for k in (0, 2):
            assert coeffs[k].is_zero_decision() == "zero"

    def test_rejects_non_member(self):
        stray = DiffOperator({(0, 0, 0, 0): coord("x1")})
        assert span_express(stray, [p0(), pa(1), identity_op()]) is None

    def test_scaled_combination(self):
        target = p0().scale(gauss(2, 0)) + pa(3).scale(I)
        coeffs = span_express(target, [p0(), pa(3)])
        assert coeffs is not None
        assert (coeffs[0] - integer(2)).is_zero_decision() == "zero"
        assert (coeffs[1] - I).is_zero_decision() == "zero"

    def test_parameter_valued_coefficient(self):
        w = param("w")
        comm = boost_exp(3, -1, w).commutator(boost_exp(3, 1, w))
        coeffs = span_express(comm, [identity_op()])
        assert coeffs is not None
        expected = integer(2) * I * w
        assert (coeffs[0] - expected).is_zero_decision() == "zero"

    def test_zero_operator(self):
        coeffs = span_express(DiffOperator({}), [p0(), pa(1)])
        assert coeffs is not None
        assert all(c.is_zero_decision() == "zero" for c in coeffs)


class TestCloseAlgebra:
    def test_completes_missing_element(self):
        res = close_algebra([("P0", p0()), ("A", conformal())])
        assert res.dim == 3
        assert len(res.added) == 1

    def test_closed_input_stays_put(self):
        res = close_algebra([
            ("P0", p0()), ("D", dilatation()), ("A", conformal()),
        ])
        assert res.dim == 3
        assert res.added == []
        assert check_antisymmetry_and_jacobi(res)

    def test_overflow_guard(self):
        with pytest.raises(ClosureOverflow):
            close_algebra([("P0", p0()), ("A", conformal())], max_dim=2)

    def test_heisenberg_pair(self):
        res = close_algebra([("P3", pa(3)), ("G3", ga(3))])
        assert res.dim == 3
        # the added element is a multiple of the identity operator
        coeffs = span_express(res.ops[2], [identity_op()])
        assert coeffs is not None


def _fp(named):
    return fingerprint(close_algebra(named))


class TestFingerprints:
    def test_abelian_triple(self):
        fp = _fp([("P1", pa(1)), ("P2", pa(2)), ("P3", pa(3))])
        assert fp == LABEL_FINGERPRINTS["3n(1,1)"]
        assert fp.solvable and fp.nilpotent

    def test_heisenberg(self):
        fp = _fp([("P3", pa(3)), ("G3", ga(3)), ("Id", identity_op())])
        assert fp == LABEL_FINGERPRINTS["n(3,1)"]
        assert fp.nilpotent

    def test_special_linear(self):
        fp = _fp([("P0", p0()), ("D", dilatation()), ("A", conformal())])
        assert fp == LABEL_FINGERPRINTS["sl(2,R)"]
        assert not fp.solvable

    def test_rotations(self):
        fp = _fp([("L1", la(1)), ("L2", la(2)), ("L3", la(3))])
        assert fp == LABEL_FINGERPRINTS["so(3)"]

    def test_rotation_and_shift_labels_collide(self):
        fp = LABEL_FINGERPRINTS["so(3)"]
        assert match_labels(fp) == ["sl(2,R)", "so(3)"]

    def test_planar_subalgebra(self):
        res = close_algebra([
            ("P0", p0()), ("D", dilatation()), ("A", conformal()),
            ("P1", pa(1)), ("P2", pa(2)), ("G1", ga(1)), ("G2", ga(2)),
            ("L3", la(3)), ("Id", identity_op()),
        ])
        assert res.dim == 9
        assert res.added == []
        assert fingerprint(res) == LABEL_FINGERPRINTS["schr(1,2)"]


class TestAbstractTables:
    def test_filiform_four(self):
        # [e2, e4] = e1, [e3, e4] = e2 in 1-based labeling
        res = abstract_closure(4, {(1, 3): {0: ONE}, (2, 3): {1: ONE}})
        assert check_antisymmetry_and_jacobi(res)
        assert fingerprint(res) == LABEL_FINGERPRINTS["n(4,1)"]

    def test_direct_sum_with_line(self):
        res = abstract_closure(
            5, {(1, 3): {0: ONE}, (2, 3): {1: ONE}})
        assert fingerprint(res) == LABEL_FINGERPRINTS["n(4,1)+n(1,1)"]

    def test_jacobi_failure_detected(self):
        # [e1,e2]=e3 and [e1,e3]=e1 leave a cyclic remainder of e3
        bad = abstract_closure(
            3, {(0, 1): {2: ONE}, (0, 2): {0: ONE}})
        assert not check_antisymmetry_and_jacobi(bad)
