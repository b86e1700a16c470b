"""Reduction of the symmetry condition for structured generators.

Candidate symmetries are built from a small set of profiles: a time
reparametrization coefficient, three constant rotation parameters, three
time-dependent shift profiles, and a multiplier phase.  For generators of
this shape the full commutator residual collapses to a named system of
four equations: three gradient conditions tying the phase gradient to the
vector components, and one scalar condition on the potential.  The
identities pinning this reduction are verified in the test suite against
the raw residual from :func:`schrosym.operators.check_symmetry`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr, ZERO, I, coord, depends_on, rational
from .operators import DiffOperator, Potential, worst_decision

_SPACE = ("x1", "x2", "x3")


@dataclass(frozen=True)
class GeneratorAnsatz:
    """Profile data for a structured first-order symmetry candidate.

    ``time_coeff`` multiplies the time derivative and may depend on t
    only.  The rotation parameters are constants.  The shift profiles
    depend on t only.  ``phase`` enters the multiplier as an imaginary
    part and may depend on every coordinate.
    """

    time_coeff: Expr = ZERO
    rot12: Expr = ZERO
    rot13: Expr = ZERO
    rot23: Expr = ZERO
    shift1: Expr = ZERO
    shift2: Expr = ZERO
    shift3: Expr = ZERO
    phase: Expr = ZERO

    @property
    def scale_rate(self) -> Expr:
        # negated time derivative of the time coefficient; also the
        # proportionality factor alpha in the symmetry condition
        return -self.time_coeff.diff("t")

    def rotation(self) -> tuple[tuple[Expr, ...], ...]:
        r12, r13, r23 = self.rot12, self.rot13, self.rot23
        return (
            (ZERO, r12, r13),
            (-r12, ZERO, r23),
            (-r13, -r23, ZERO),
        )

    def shifts(self) -> tuple[Expr, Expr, Expr]:
        return (self.shift1, self.shift2, self.shift3)

    def spatial_coeffs(self) -> tuple[Expr, Expr, Expr]:
        """Coefficients of the three spatial derivatives."""
        rot = self.rotation()
        shi = self.shifts()
        half = rational(1, 2)
        out = []
        for a in range(3):
            v = -(half * self.scale_rate) * coord(_SPACE[a]) + shi[a]
            for b in range(3):
                v = v + rot[a][b] * coord(_SPACE[b])
            out.append(v)
        return tuple(out)

    def multiplier_phase_field(self) -> Expr:
        """The full imaginary phase profile of the multiplier term."""
        r2 = ZERO
        for name in _SPACE:
            r2 = r2 + coord(name) * coord(name)
        eta = (self.scale_rate.diff("t") / 4) * r2 + self.phase
        for a, name in enumerate(_SPACE):
            eta = eta - self.shifts()[a].diff("t") * coord(name)
        return eta

    def validate(self) -> None:
        for label, v in (("time_coeff", self.time_coeff),
                         ("shift1", self.shift1),
                         ("shift2", self.shift2),
                         ("shift3", self.shift3)):
            for name in _SPACE:
                if depends_on(v, name):
                    raise ValueError(f"{label} must depend on t only")
        for label, v in (("rot12", self.rot12), ("rot13", self.rot13),
                         ("rot23", self.rot23)):
            if depends_on(v, "t") or any(depends_on(v, n) for n in _SPACE):
                raise ValueError(f"{label} must be constant")


def build_generator(ansatz: GeneratorAnsatz) -> DiffOperator:
    """Assemble the first-order operator encoded by the ansatz."""
    ansatz.validate()
    xs = ansatz.spatial_coeffs()
    div = ZERO
    for a, name in enumerate(_SPACE):
        div = div + xs[a].diff(name)
    coeffs = {
        (1, 0, 0, 0): ansatz.time_coeff,
        (0, 1, 0, 0): xs[0],
        (0, 0, 1, 0): xs[1],
        (0, 0, 0, 1): xs[2],
        (0, 0, 0, 0): div / 2 + I * ansatz.multiplier_phase_field(),
    }
    return DiffOperator(coeffs)


def raw_residual(p: Potential, ansatz: GeneratorAnsatz) -> DiffOperator:
    """Commutator residual of the candidate against the evolution operator."""
    from .operators import schrodinger_operator

    q = build_generator(ansatz)
    ell = schrodinger_operator(p)
    return q.commutator(ell) - ell.scale(ansatz.scale_rate)


def gradient_residuals(p: Potential, ansatz: GeneratorAnsatz):
    """The three gradient conditions.

    Each equals the phase gradient minus the transported vector
    component; the raw residual carries them as the coefficients of the
    spatial derivatives, scaled by -i.
    """
    alpha = ansatz.scale_rate
    rot = ansatz.rotation()
    shi = ansatz.shifts()
    half = rational(1, 2)
    vec = (p.A1, p.A2, ZERO)
    out = []
    for a in range(3):
        transported = half * alpha * vec[a]
        for b in range(3):
            da_b = vec[a].diff(_SPACE[b])
            transported = transported + half * alpha * da_b * coord(_SPACE[b])
            transported = transported + rot[a][b] * vec[b]
            transported = transported - shi[b] * da_b
            for c in range(3):
                transported = transported - rot[b][c] * coord(_SPACE[c]) * da_b
        out.append(ansatz.phase.diff(_SPACE[a]) - p.e * transported)
    return tuple(out)


def scalar_residual(p: Potential, ansatz: GeneratorAnsatz) -> Expr:
    """The scalar condition on the potential.

    Transport of the scalar potential against the generator, minus the
    time evolution of the multiplier phase, plus the coupling of the
    vector components to the phase gradient.  When the gradient
    conditions hold, the zeroth-order raw residual equals the negation
    of this expression.
    """
    alpha = ansatz.scale_rate
    xs = ansatz.spatial_coeffs()
    eta = ansatz.multiplier_phase_field()
    vec = (p.A1, p.A2, ZERO)
    v = p.V
    res = -(alpha * v) - eta.diff("t")
    for a, name in enumerate(_SPACE):
        res = res + xs[a] * v.diff(name)
        res = res + p.e * vec[a] * eta.diff(name)
    return res


def reduced_residuals(p: Potential, ansatz: GeneratorAnsatz) -> dict[str, Expr]:
    """Named reduced system equivalent to the full symmetry condition."""
    g1, g2, g3 = gradient_residuals(p, ansatz)
    return {
        "grad1": g1,
        "grad2": g2,
        "grad3": g3,
        "scalar": scalar_residual(p, ansatz),
    }


@dataclass(frozen=True)
class ReducedReport:
    satisfied: bool
    decisions: dict[str, str]
    residuals: dict[str, Expr]


def reduced_check(p: Potential, ansatz: GeneratorAnsatz) -> ReducedReport:
    """Decide the symmetry condition through the reduced system."""
    res = reduced_residuals(p, ansatz)
    decisions = {k: v.is_zero_decision() for k, v in res.items()}
    return ReducedReport(
        satisfied=worst_decision(decisions.values()) == "zero",
        decisions=decisions,
        residuals=res,
    )
