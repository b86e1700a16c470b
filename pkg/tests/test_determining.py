"""Reduction identities tying the named system to the raw residual."""

import pytest

from schrosym.determining import (
    GeneratorAnsatz,
    build_generator,
    gradient_residuals,
    raw_residual,
    reduced_check,
    reduced_residuals,
    scalar_residual,
)
from schrosym.expr import (
    I,
    ONE,
    ZERO,
    coord,
    exp_of,
    fnapp,
    gauss,
    integer,
    param,
    rational,
)
from schrosym.generators import (
    boost_exp,
    conformal,
    conformal_exp,
    dilatation,
    free_symmetry_basis,
    ga,
    identity_op,
    la,
    p0,
    pa,
)
from schrosym.operators import Potential, check_symmetry

T = coord("t")
X1, X2, X3 = coord("x1"), coord("x2"), coord("x3")


def _free(e=None, g=None):
    return Potential(
        A1=ZERO, A2=ZERO, A0=ZERO,
        e=e if e is not None else param("e"),
        g=g if g is not None else param("g"),
    )


def _opaque_potential():
    args = [X1, X2, X3]
    return Potential(
        A1=fnapp("U1", args), A2=fnapp("U2", args), A0=fnapp("S", args),
        e=param("e"), g=param("g"),
    )


def _opaque_ansatz():
    return GeneratorAnsatz(
        time_coeff=fnapp("f", [T]),
        rot12=param("mu"), rot13=param("nu"), rot23=param("lam"),
        shift1=fnapp("h1", [T]), shift2=fnapp("h2", [T]),
        shift3=fnapp("h3", [T]),
        phase=fnapp("W", [T, X1, X2, X3]),
    )


@pytest.fixture(scope="module")
def residual_pair():
    p = _opaque_potential()
    ans = _opaque_ansatz()
    return p, ans, raw_residual(p, ans)


class TestReductionTheorem:
    """The raw residual collapses exactly onto the named system."""

    def test_gradient_slots(self, residual_pair):
        p, ans, raw = residual_pair
        grads = gradient_residuals(p, ans)
        slots = [(0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
        for slot, grad in zip(slots, grads):
            diff = raw.coeff(slot) + I * grad
            assert diff.is_zero_decision() == "zero"

    def test_scalar_slot(self, residual_pair):
        p, ans, raw = residual_pair
        grads = gradient_residuals(p, ans)
        div = ZERO
        for a, name in enumerate(("x1", "x2", "x3")):
            div = div + grads[a].diff(name)
        combo = raw.coeff((0, 0, 0, 0)) + scalar_residual(p, ans) + (I / 2) * div
        assert combo.is_zero_decision() == "zero"

    def test_no_other_slots(self, residual_pair):
        _, _, raw = residual_pair
        allowed = {(0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1), (0, 0, 0, 0)}
        for slot, c in raw.coeffs:
            if slot in allowed:
                continue
            assert c.is_zero_decision() == "zero", slot


# ansatz data reproducing every member of the free symmetry basis
_BASIS_ANSATZ = {
    "P0": GeneratorAnsatz(time_coeff=I),
    "P1": GeneratorAnsatz(shift1=-I),
    "P2": GeneratorAnsatz(shift2=-I),
    "P3": GeneratorAnsatz(shift3=-I),
    "L1": GeneratorAnsatz(rot23=I),
    "L2": GeneratorAnsatz(rot13=-I),
    "L3": GeneratorAnsatz(rot12=I),
    "D": GeneratorAnsatz(time_coeff=integer(2) * I * T),
    "A": GeneratorAnsatz(time_coeff=I * T * T),
    "G1": GeneratorAnsatz(shift1=-I * T),
    "G2": GeneratorAnsatz(shift2=-I * T),
    "G3": GeneratorAnsatz(shift3=-I * T),
    "Id": GeneratorAnsatz(phase=-I),
}


class TestBuildGenerator:
    @pytest.mark.parametrize("name", sorted(_BASIS_ANSATZ))
    def test_matches_named_operator(self, name):
        built = build_generator(_BASIS_ANSATZ[name])
        target = free_symmetry_basis()[name]
        diff = built - target
        for _, c in diff.coeffs:
            assert c.is_zero_decision() == "zero"

    def test_exponential_shift(self):
        w = param("w")
        ans = GeneratorAnsatz(shift3=-I * exp_of(w * T))
        diff = build_generator(ans) - boost_exp(3, 1, w)
        for _, c in diff.coeffs:
            assert c.is_zero_decision() == "zero"

    def test_exponential_conformal(self):
        w = param("w")
        ans = GeneratorAnsatz(time_coeff=I * exp_of(integer(2) * w * T))
        diff = build_generator(ans) - conformal_exp(1, w)
        for _, c in diff.coeffs:
            assert c.is_zero_decision() == "zero"

    def test_rejects_space_dependent_time_coeff(self):
        with pytest.raises(ValueError):
            build_generator(GeneratorAnsatz(time_coeff=I * X1))

    def test_rejects_time_dependent_rotation(self):
        with pytest.raises(ValueError):
            build_generator(GeneratorAnsatz(rot12=I * T))


class TestReducedCheckFreeCase:
    @pytest.mark.parametrize("name", sorted(_BASIS_ANSATZ))
    def test_basis_satisfies_reduced_system(self, name):
        rep = reduced_check(_free(), _BASIS_ANSATZ[name])
        assert rep.satisfied, rep.decisions

    def test_agrees_with_full_check(self):
        p = _free()
        ans = _BASIS_ANSATZ["A"]
        full = check_symmetry(p, build_generator(ans))
        assert full.satisfied
        assert reduced_check(p, ans).satisfied

    def test_detects_failure(self):
        # a bare quadratic time coefficient without the induced
        # multiplier cannot preserve the free evolution
        p = _free()
        ans = GeneratorAnsatz(time_coeff=I * T * T, phase=X1 * X1)
        rep = reduced_check(p, ans)
        assert not rep.satisfied
        assert rep.decisions["grad1"] == "nonzero"


@pytest.fixture(scope="module")
def repulsive():
    w = param("w")
    r2 = X1 * X1 + X2 * X2 + X3 * X3
    # scalar potential -w^2 r^2 / 2 with unit scalar coupling
    return Potential(
        A1=ZERO, A2=ZERO, A0=-(w * w / 2) * r2,
        e=param("e"), g=ONE,
    ), w


class TestScalarConditionWeight:
    def test_quadratic_weight_is_quarter(self, repulsive):
        # the exponential conformal profile closes the scalar condition
        # with the quarter weight on the quadratic phase term; the
        # half-weight variant leaves a nonzero quadratic remainder
        p, w = repulsive
        ans = GeneratorAnsatz(time_coeff=I * exp_of(integer(2) * w * T))
        base = scalar_residual(p, ans)
        assert base.is_zero_decision() == "zero"
        r2 = X1 * X1 + X2 * X2 + X3 * X3
        extra = (ans.scale_rate.diff("t").diff("t") / 4) * r2
        assert extra.is_zero_decision() == "nonzero"
        doubled = base - extra
        assert doubled.is_zero_decision() == "nonzero"


class TestOscillatorProfiles:
    """Exponential profiles close the system on a quadratic potential."""

    def test_exponential_shift_profile(self, repulsive):
        p, w = repulsive
        ans = GeneratorAnsatz(shift3=-I * exp_of(w * T))
        assert reduced_check(p, ans).satisfied

    def test_exponential_conformal_profile(self, repulsive):
        p, w = repulsive
        ans = GeneratorAnsatz(time_coeff=I * exp_of(integer(2) * w * T))
        assert reduced_check(p, ans).satisfied

    def test_plain_shift_fails(self, repulsive):
        p, _ = repulsive
        ans = GeneratorAnsatz(shift3=-I)
        rep = reduced_check(p, ans)
        assert not rep.satisfied
