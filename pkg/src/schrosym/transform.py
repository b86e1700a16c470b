"""Point transformations and operator conjugation.

A transformation carries coordinate maps in both directions and a scalar
multiplier: a solution in the old frame is the multiplier times the
pulled-back solution of the new frame.  ``conjugate_operator`` transports
a differential operator across such a map by applying it to an opaque
solution symbol, changing coordinates, stripping the multiplier, and
collecting the surviving derivative coefficients.

Factories cover the maps used by the catalog: matrix fractional
reparametrizations of time with their induced spatial scaling and phase,
the exponential map onto quadratic potentials, the accelerated frame for
linear potentials, and pure gauge multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    COORD_NAMES,
    Expr,
    I,
    ONE,
    ZERO,
    coord,
    depends_on,
    exp_of,
    fnapp,
    integer,
    ln_of,
    map_atoms,
    powr,
    rational,
    sqrt_of,
)
from .operators import DiffOperator, Potential

_SOLUTION_SYMBOL = "PSI"


class ConjugationError(RuntimeError):
    """Raised when a transported operator cannot be reassembled."""


@dataclass(frozen=True)
class PointTransformation:
    """Invertible point map with a solution multiplier.

    ``new_from_old`` gives each new coordinate as a function of the old
    ones, ``old_from_new`` the reverse.  ``multiplier`` is written in old
    coordinates.
    """

    new_from_old: dict[str, Expr]
    old_from_new: dict[str, Expr]
    multiplier: Expr = ONE
    name: str = ""

    def roundtrip_defect(self) -> list[Expr]:
        """Residuals of both map compositions against the identity."""
        out = []
        for n in COORD_NAMES:
            fwd = self.new_from_old[n].subs(self.old_from_new)
            out.append(fwd - coord(n))
            bwd = self.old_from_new[n].subs(self.new_from_old)
            out.append(bwd - coord(n))
        return out

    def inverse(self) -> "PointTransformation":
        inv_mult = (ONE / self.multiplier).subs(self.old_from_new)
        return PointTransformation(
            new_from_old=dict(self.old_from_new),
            old_from_new=dict(self.new_from_old),
            multiplier=inv_mult,
            name=f"inv({self.name})" if self.name else "",
        )


def identity_transformation() -> PointTransformation:
    maps = {n: coord(n) for n in COORD_NAMES}
    return PointTransformation(
        new_from_old=dict(maps), old_from_new=dict(maps),
        multiplier=ONE, name="identity",
    )


def compose(second: PointTransformation,
            first: PointTransformation) -> PointTransformation:
    """The map running first, then second."""
    nfo = {n: second.new_from_old[n].subs(first.new_from_old)
           for n in COORD_NAMES}
    ofn = {n: first.old_from_new[n].subs(second.old_from_new)
           for n in COORD_NAMES}
    mult = first.multiplier * second.multiplier.subs(first.new_from_old)
    name = ""
    if first.name and second.name:
        name = f"{second.name}*{first.name}"
    return PointTransformation(
        new_from_old=nfo, old_from_new=ofn, multiplier=mult, name=name,
    )


def conjugate_operator(trans: PointTransformation,
                       op: DiffOperator) -> DiffOperator:
    """Transport op (old coordinates) across trans (to new coordinates)."""
    args = [trans.new_from_old[n] for n in COORD_NAMES]
    probe = trans.multiplier * fnapp(_SOLUTION_SYMBOL, args)
    applied = op.apply(probe)
    moved = applied.subs(trans.old_from_new)
    mult_new = trans.multiplier.subs(trans.old_from_new)
    combined = moved / mult_new
    combined = _normalize_solution_args(combined)
    return _collect_solution_coeffs(combined)


def _normalize_solution_args(e: Expr) -> Expr:
    targets = [coord(n) for n in COORD_NAMES]

    def repl(a, recurse):
        if a[0] != "fn" or a[1] != _SOLUTION_SYMBOL:
            return None
        new_args = []
        for arg, target in zip(a[2], targets):
            d = (recurse(arg) - target).is_zero_decision()
            if d != "zero":
                raise ConjugationError(
                    "coordinate maps do not invert cleanly")
            new_args.append(target)
        return fnapp(_SOLUTION_SYMBOL, new_args, a[3])

    return map_atoms(e, repl)


def _collect_solution_coeffs(e: Expr) -> DiffOperator:
    midxs = set()
    for mono, _ in e.num.terms:
        hits = [(a, p) for a, p in mono
                if a[0] == "fn" and a[1] == _SOLUTION_SYMBOL]
        if len(hits) != 1 or hits[0][1] != 1:
            raise ConjugationError(
                "transported operator is not linear in the solution symbol")
        midxs.add(hits[0][0][3])
    coeffs = {}
    for m in sorted(midxs):
        def repl(a, recurse, target=m):
            if a[0] == "fn" and a[1] == _SOLUTION_SYMBOL:
                return ONE if a[3] == target else ZERO
            return None
        c = map_atoms(e, repl)
        if c.is_zero_decision() != "zero":
            coeffs[m] = c
    return DiffOperator(coeffs)


# ---------------------------------------------------------------------------
# Conformal time reparametrizations

def time_conformal(t_old_of_new: Expr, t_new_of_old: Expr,
                   name: str = "", scale: Expr = None) -> PointTransformation:
    """Map induced by a time reparametrization.

    ``t_old_of_new`` is the old time as a function of the new one (using
    the shared time symbol); ``t_new_of_old`` its inverse.  Space scales
    by the square root of the time derivative, and the multiplier gains
    the standard quadratic phase and amplitude factor.  A closed form for
    the scale may be supplied when the automatic square root would stay
    opaque.
    """
    rate = t_old_of_new.diff("t")
    if scale is None:
        scale = sqrt_of(rate)
    else:
        defect = scale * scale - rate
        if defect.is_zero_decision() != "zero":
            raise ValueError("supplied scale does not square to the rate")
    beta = scale.diff("t") / (integer(2) * scale)
    amp = powr(scale, Fraction(-3, 2))
    # in the new frame
    x_new_sq = ZERO
    for n in COORD_NAMES[1:]:
        x_new_sq = x_new_sq + coord(n) * coord(n)
    mult_new = amp * exp_of(I * beta * x_new_sq)

    new_from_old = {"t": t_new_of_old}
    scale_old = scale.subs({"t": t_new_of_old})
    for n in COORD_NAMES[1:]:
        new_from_old[n] = coord(n) / scale_old
    old_from_new = {"t": t_old_of_new}
    for n in COORD_NAMES[1:]:
        old_from_new[n] = scale * coord(n)
    mult_old = mult_new.subs(new_from_old)
    return PointTransformation(
        new_from_old=new_from_old,
        old_from_new=old_from_new,
        multiplier=mult_old,
        name=name,
    )


def mobius(a, b, c, d, name: str = "") -> PointTransformation:
    """Fractional linear time reparametrization from an invertible matrix.

    New time is (a t + b)/(c t + d); the determinant may be any nonzero
    rational.  The identity is the unit matrix.
    """
    av, bv, cv, dv = (_as_expr(v) for v in (a, b, c, d))
    det = av * dv - bv * cv
    if det.is_zero_decision() == "zero":
        raise ValueError("matrix must be invertible")
    t = coord("t")
    t_new_of_old = (av * t + bv) / (cv * t + dv)
    t_old_of_new = (dv * t - bv) / (-cv * t + av)
    scale = sqrt_of(det) / (-cv * t + av)
    return time_conformal(t_old_of_new, t_new_of_old,
                          name=name or "mobius", scale=scale)


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, int):
        return integer(v)
    if isinstance(v, Fraction):
        return rational(v.numerator, v.denominator)
    raise TypeError(f"cannot use {v!r} as a coefficient")


def exponential_time_map(w: Expr) -> PointTransformation:
    """Old time exp(2 w t), new time t; spatial scale exp(w t) scaled.

    Carries the free evolution onto the inverted quadratic potential
    with frequency w; the operator picks up the reciprocal of the time
    derivative as an overall factor.
    """
    t = coord("t")
    t_old_of_new = exp_of(integer(2) * w * t)
    t_new_of_old = ln_of(t) / (integer(2) * w)
    return time_conformal(t_old_of_new, t_new_of_old, name="exponential")


def accelerated_frame(k1, k2, k3, name: str = "accelerated") -> PointTransformation:
    """Uniform acceleration along the constant vector (k1, k2, k3).

    Time is unchanged; space shifts by half the acceleration times the
    squared time, and the multiplier carries the matching linear phase
    with a cubic time correction.
    """
    ks = [_as_expr(k) for k in (k1, k2, k3)]
    t = coord("t")
    half_t2 = (t * t) / 2
    new_from_old = {"t": t}
    old_from_new = {"t": t}
    for kv, n in zip(ks, COORD_NAMES[1:]):
        new_from_old[n] = coord(n) - kv * half_t2
        old_from_new[n] = coord(n) + kv * half_t2
    ksq = ZERO
    kx = ZERO
    for kv, n in zip(ks, COORD_NAMES[1:]):
        ksq = ksq + kv * kv
        kx = kx + kv * coord(n)
    phase = t * kx - (ksq * t * t * t) / 3
    mult_old = exp_of(I * phase)
    return PointTransformation(
        new_from_old=new_from_old, old_from_new=old_from_new,
        multiplier=mult_old, name=name,
    )


def gauge_transformation(chi: Expr, e: Expr) -> PointTransformation:
    """Pure gauge map: identity coordinates, multiplier exp(-i e chi)."""
    _require_planar(chi)
    maps = {n: coord(n) for n in COORD_NAMES}
    return PointTransformation(
        new_from_old=dict(maps), old_from_new=dict(maps),
        multiplier=exp_of(-I * e * chi), name="gauge",
    )


def gauge_apply(p: Potential, chi: Expr) -> Potential:
    """Shift the vector components by the gradient of chi.

    chi may depend on the two active spatial directions only, keeping the
    third component of the vector potential zero.  The quadratic part of
    the scalar potential follows automatically.
    """
    _require_planar(chi)
    return Potential(
        A1=p.A1 + chi.diff("x1"),
        A2=p.A2 + chi.diff("x2"),
        A0=p.A0,
        e=p.e,
        g=p.g,
    )


def _require_planar(chi: Expr) -> None:
    for n in ("t", "x3"):
        if depends_on(chi, n):
            raise ValueError("gauge function must depend on x1, x2 only")
