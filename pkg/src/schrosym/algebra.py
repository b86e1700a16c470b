"""Linear span, closure, and structural invariants of operator algebras.

Operators live in the span of a finite basis with coefficients that are
constant in the coordinates but may involve parameters.  ``span_express``
decides membership by exact Gaussian elimination over that coefficient
field and certifies every positive answer by an authoritative zero check
on the reassembled difference.  ``close_algebra`` iterates commutators to
a closed basis and records structure constants; ``fingerprint`` computes
isomorphism-grade invariants (derived series, lower central series,
center) used to match computed algebras against catalogued labels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expr import (
    Expr,
    ZERO,
    atom_is_constant,
    monomial_expr,
    param,
)
from .operators import DiffOperator


class ClosureOverflow(RuntimeError):
    """Raised when commutator closure exceeds the dimension bound."""


class UndecidableSpan(RuntimeError):
    """Raised when a pivot or consistency decision comes back unknown."""


_UNKNOWN_PREFIX = "_c"


# ---------------------------------------------------------------------------
# Linear systems over the constant coefficient field

def _split_equation(e: Expr, unknowns):
    """Group the numerator of e by coordinate-dependent monomial direction.

    Returns {direction: {unknown_or_None: constant Expr}}.  The equation
    e = 0 holds identically iff every direction's combination vanishes.
    """
    rows: dict = {}
    for mono, coeff in e.num.terms:
        unk = None
        const_part = []
        dir_part = []
        for a, p in mono:
            if a[0] == "param" and a[1] in unknowns:
                if unk is not None or p != 1:
                    raise UndecidableSpan("candidate coefficients enter nonlinearly")
                unk = a[1]
            elif atom_is_constant(a):
                const_part.append((a, p))
            else:
                dir_part.append((a, p))
        piece = monomial_expr(tuple(const_part), coeff)
        key = tuple(dir_part)
        bucket = rows.setdefault(key, {})
        bucket[unk] = bucket.get(unk, ZERO) + piece
    return rows


def _decide(e: Expr) -> str:
    d = e.is_zero_decision()
    if d == "unknown":
        raise UndecidableSpan("linear-system entry resists a zero decision")
    return d


def solve_linear_constant_system(rows, names):
    """Solve rows of the form sum_k A_k * c_k + b = 0 for the named c_k.

    Each row is (dict name->Expr, Expr).  Returns {name: Expr} with free
    unknowns set to zero, or None when the system is inconsistent.
    """
    work = [(dict(A), b) for A, b in rows]
    assignments: dict[str, Expr] = {}
    for name in names:
        pivot_idx = None
        for idx, (A, _) in enumerate(work):
            c = A.get(name, ZERO)
            if _decide(c) == "nonzero":
                pivot_idx = idx
                break
        if pivot_idx is None:
            continue
        A, b = work.pop(pivot_idx)
        pivot = A.pop(name)
        norm_row = ({k: v / pivot for k, v in A.items()}, b / pivot)
        reduced = []
        for A2, b2 in work:
            f = A2.pop(name, ZERO)
            if _decide(f) == "zero":
                reduced.append((A2, b2))
                continue
            newA = dict(A2)
            for k, v in norm_row[0].items():
                newA[k] = newA.get(k, ZERO) - f * v
            reduced.append((newA, b2 - f * norm_row[1]))
        work = reduced
        assignments[name] = norm_row  # finalized after all eliminations
    for A, b in work:
        if any(_decide(v) == "nonzero" for v in A.values()):
            raise UndecidableSpan("elimination left an unprocessed pivot")
        if _decide(b) == "nonzero":
            return None
    # back-substitute; free unknowns default to zero
    solution = {name: ZERO for name in names}
    for name in reversed(list(assignments)):
        A, b = assignments[name]
        val = -b
        for k, v in A.items():
            val = val - v * solution[k]
        solution[name] = val
    return solution


def span_express(op: DiffOperator, basis) -> list[Expr] | None:
    """Coefficients expressing op in the span of basis, or None.

    Positive answers are certified: the reassembled combination is
    checked slot by slot against op with the authoritative zero test.
    """
    basis = list(basis)
    names = [f"{_UNKNOWN_PREFIX}{k}" for k in range(len(basis))]
    unknowns = set(names)
    combo = op
    for name, b in zip(names, basis):
        combo = combo - b.scale(param(name))
    rows = []
    for _, coeff in combo.coeffs:
        for bucket in _split_equation(coeff, unknowns).values():
            b = bucket.pop(None, ZERO)
            rows.append((bucket, b))
    solution = solve_linear_constant_system(rows, names)
    if solution is None:
        return None
    coeffs = [solution[name] for name in names]
    check = op
    for c, b in zip(coeffs, basis):
        check = check - b.scale(c)
    if check.is_zero_decision() != "zero":
        return None
    return coeffs


# ---------------------------------------------------------------------------
# Commutator closure

@dataclass
class ClosureResult:
    names: list[str]
    ops: list[DiffOperator]
    table: dict[tuple[int, int], tuple[Expr, ...]]
    added: list[str]

    @property
    def dim(self) -> int:
        return len(self.ops)

    def bracket(self, i: int, j: int) -> tuple[Expr, ...]:
        """Structure coefficients of [ops[i], ops[j]], any order."""
        if i == j:
            return tuple(ZERO for _ in self.ops)
        if i < j:
            return self.table[(i, j)]
        return tuple(-c for c in self.table[(j, i)])


def close_algebra(named_ops, max_dim: int = 16) -> ClosureResult:
    """Commutator closure of the given (name, operator) collection."""
    if isinstance(named_ops, dict):
        items = list(named_ops.items())
    else:
        items = list(named_ops)
    names = [n for n, _ in items]
    ops = [q for _, q in items]
    added: list[str] = []
    table: dict[tuple[int, int], tuple[Expr, ...]] = {}
    pending = [(i, j) for i in range(len(ops)) for j in range(i + 1, len(ops))]
    counter = 0
    while pending:
        i, j = pending.pop(0)
        comm = ops[i].commutator(ops[j])
        coeffs = span_express(comm, ops)
        if coeffs is None:
            if len(ops) >= max_dim:
                raise ClosureOverflow(
                    f"closure exceeded {max_dim} elements")
            counter += 1
            new_name = f"N{counter}"
            names.append(new_name)
            added.append(new_name)
            ops.append(comm)
            k = len(ops) - 1
            pending.extend((m, k) for m in range(k))
            pending.append((i, j))
            continue
        table[(i, j)] = tuple(coeffs)
    dim = len(ops)
    for key, coeffs in list(table.items()):
        if len(coeffs) < dim:
            table[key] = tuple(coeffs) + tuple(ZERO for _ in range(dim - len(coeffs)))
    return ClosureResult(names=names, ops=ops, table=table, added=added)


def abstract_closure(dim: int, brackets) -> ClosureResult:
    """Closure record for a hand-typed structure table.

    ``brackets`` maps (i, j) with i < j to {k: coefficient of basis k}.
    Pairs not listed commute.
    """
    table = {}
    for i in range(dim):
        for j in range(i + 1, dim):
            row = brackets.get((i, j), {})
            table[(i, j)] = tuple(row.get(k, ZERO) for k in range(dim))
    return ClosureResult(
        names=[f"e{k}" for k in range(dim)],
        ops=[None] * dim,
        table=table,
        added=[],
    )


# ---------------------------------------------------------------------------
# Invariants

def _vec_sub_scaled(u, v, f):
    return [a - f * b for a, b in zip(u, v)]


def _rref(vectors):
    """Row-reduced basis of the span of the given coefficient vectors."""
    basis: list[list[Expr]] = []
    pivots: list[int] = []
    for vec in vectors:
        row = list(vec)
        for bvec, piv in zip(basis, pivots):
            f = row[piv]
            if _decide(f) == "nonzero":
                row = _vec_sub_scaled(row, bvec, f)
        piv = None
        for idx, entry in enumerate(row):
            if _decide(entry) == "nonzero":
                piv = idx
                break
        if piv is None:
            continue
        inv = row[piv]
        row = [entry / inv for entry in row]
        for k, (bvec, bpiv) in enumerate(zip(basis, pivots)):
            f = bvec[piv]
            if _decide(f) == "nonzero":
                basis[k] = _vec_sub_scaled(bvec, row, f)
        basis.append(row)
        pivots.append(piv)
    order = sorted(range(len(basis)), key=lambda k: pivots[k])
    return [basis[k] for k in order]


def _bracket_vectors(result: ClosureResult, u, v):
    """Bracket of two coefficient vectors through the structure table."""
    dim = result.dim
    out = [ZERO] * dim
    for i in range(dim):
        ui = u[i]
        if _decide(ui) == "zero":
            continue
        for j in range(dim):
            vj = v[j]
            if _decide(vj) == "zero":
                continue
            cij = result.bracket(i, j)
            f = ui * vj
            for k in range(dim):
                out[k] = out[k] + f * cij[k]
    return out


def fingerprint_dims(result: ClosureResult):
    """Derived series, lower central series, and center dimension."""
    dim = result.dim
    full = _rref([_unit_vec(i, dim) for i in range(dim)])

    def derived_step(space):
        brackets = [
            _bracket_vectors(result, space[i], space[j])
            for i in range(len(space)) for j in range(i + 1, len(space))
        ]
        return _rref(brackets)

    def lcs_step(space):
        brackets = [
            _bracket_vectors(result, full[i], space[j])
            for i in range(len(full)) for j in range(len(space))
        ]
        return _rref(brackets)

    derived = _descend(full, derived_step)
    lower_central = _descend(full, lcs_step)

    rows = []
    for j in range(dim):
        for k in range(dim):
            rows.append(({f"{_UNKNOWN_PREFIX}{i}": result.bracket(i, j)[k]
                          for i in range(dim)}, ZERO))
    names = [f"{_UNKNOWN_PREFIX}{i}" for i in range(dim)]
    rank = _system_rank(rows, names)
    center_dim = dim - rank
    return derived, lower_central, center_dim


def _unit_vec(i, dim):
    from .expr import ONE
    return [ONE if k == i else ZERO for k in range(dim)]


def _descend(full, step):
    dims = [len(full)]
    current = full
    while True:
        nxt = step(current)
        dims.append(len(nxt))
        if len(nxt) == 0 or len(nxt) == dims[-2]:
            return tuple(dims)
        current = nxt


def _system_rank(rows, names) -> int:
    work = [(dict(A), b) for A, b in rows]
    rank = 0
    for name in names:
        pivot_idx = None
        for idx, (A, _) in enumerate(work):
            if _decide(A.get(name, ZERO)) == "nonzero":
                pivot_idx = idx
                break
        if pivot_idx is None:
            continue
        rank += 1
        A, b = work.pop(pivot_idx)
        pivot = A.pop(name)
        norm = {k: v / pivot for k, v in A.items()}
        reduced = []
        for A2, b2 in work:
            f = A2.pop(name, ZERO)
            if _decide(f) == "zero":
                reduced.append((A2, b2))
                continue
            newA = dict(A2)
            for k, v in norm.items():
                newA[k] = newA.get(k, ZERO) - f * v
            reduced.append((newA, b2))
        work = reduced
    return rank


@dataclass(frozen=True)
class AlgebraFingerprint:
    dim: int
    derived: tuple[int, ...]
    lower_central: tuple[int, ...]
    center_dim: int

    @property
    def solvable(self) -> bool:
        return self.derived[-1] == 0

    @property
    def nilpotent(self) -> bool:
        return self.lower_central[-1] == 0

    def __str__(self) -> str:
        flags = []
        if self.nilpotent:
            flags.append("nilpotent")
        elif self.solvable:
            flags.append("solvable")
        else:
            flags.append("nonsolvable")
        return (f"dim {self.dim}, derived {self.derived}, "
                f"lcs {self.lower_central}, center {self.center_dim}, "
                f"{flags[0]}")


def fingerprint(result: ClosureResult) -> AlgebraFingerprint:
    derived, lower_central, center_dim = fingerprint_dims(result)
    return AlgebraFingerprint(
        dim=result.dim,
        derived=derived,
        lower_central=lower_central,
        center_dim=center_dim,
    )


def check_antisymmetry_and_jacobi(result: ClosureResult) -> bool:
    """Structure-table sanity: antisymmetry is built in; verify Jacobi."""
    dim = result.dim
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                total = [ZERO] * dim
                for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                    inner = result.bracket(b, c)
                    outer = _bracket_vectors(result, _unit_vec(a, dim), list(inner))
                    total = [x + y for x, y in zip(total, outer)]
                for entry in total:
                    if _decide(entry) != "zero":
                        return False
    return True


# ---------------------------------------------------------------------------
# Label registry
#
# Fingerprints for algebra labels used by the catalog.  Entries are frozen
# from hand derivations for the classical families and calibrated against
# the catalog's own realizations for the solvable families; the test suite
# rebuilds reference realizations and cross-checks every entry.

LABEL_FINGERPRINTS: dict[str, AlgebraFingerprint] = {
    "n(1,1)": AlgebraFingerprint(1, (1, 0), (1, 0), 1),
    "2n(1,1)": AlgebraFingerprint(2, (2, 0), (2, 0), 2),
    "3n(1,1)": AlgebraFingerprint(3, (3, 0), (3, 0), 3),
    "4n(1,1)": AlgebraFingerprint(4, (4, 0), (4, 0), 4),
    "n(3,1)": AlgebraFingerprint(3, (3, 1, 0), (3, 1, 0), 1),
    "n(3,1)+n(1,1)": AlgebraFingerprint(4, (4, 1, 0), (4, 1, 0), 2),
    "n(4,1)": AlgebraFingerprint(4, (4, 2, 0), (4, 2, 1, 0), 1),
    "n(4,1)+n(1,1)": AlgebraFingerprint(5, (5, 2, 0), (5, 2, 1, 0), 2),
    "so(3)": AlgebraFingerprint(3, (3, 3), (3, 3), 0),
    "sl(2,R)": AlgebraFingerprint(3, (3, 3), (3, 3), 0),
    "sl(2,R)+n(1,1)": AlgebraFingerprint(4, (4, 3, 3), (4, 3, 3), 1),
    "schr(1,2)": AlgebraFingerprint(9, (9, 8, 8), (9, 8, 8), 1),
    "schr(1,3)": AlgebraFingerprint(13, (13, 13), (13, 13), 1),
}


def match_labels(fp: AlgebraFingerprint) -> list[str]:
    """All registry labels sharing the given fingerprint."""
    return sorted(label for label, ref in LABEL_FINGERPRINTS.items() if ref == fp)


# ---------------------------------------------------------------------------
# Label grammar and verdicts
#
# A label is a direct sum of atoms joined by "+".  Each atom is an optional
# integer multiplier followed by one of
#
#   n(a,b)     nilpotent family, dimension a, catalogue index b
#   s(a,b)     solvable non-nilpotent family, dimension a, index b
#   sl(2,R)    simple, dimension 3
#   so(3)      simple, dimension 3
#   schr(1,n)  full symmetry algebra of the free equation in n space
#              dimensions, dimension (n*n + 3*n + 8) / 2
#
# For dimension > 6 the solvable families are not catalogued anywhere, so
# an s(a,b) label with a > 6 carries exactly its dimension and class and a
# verdict can be decided from those alone.  For dimension <= 6 the label
# points at an external catalogue; the registry below freezes fingerprints
# only for atoms whose structure is pinned down inside this package, either
# by hand derivation or by agreement across several independent
# realizations.  Labels that reach neither an exact composition nor a
# class-level contradiction stay "indeterminate".

_ATOM_RE = re.compile(r"^(\d*)(schr|sl|so|n|s)\(([^()]*)\)$")


@dataclass(frozen=True)
class LabelAtom:
    kind: str                 # n | s | sl | so | schr
    dim: int
    key: str                  # canonical atom spelling
    count: int


def parse_label(label: str) -> tuple:
    atoms = []
    for part in label.split("+"):
        part = part.replace(" ", "")
        m = _ATOM_RE.match(part)
        if not m:
            raise ValueError(f"unparseable algebra label component {part!r}")
        count = int(m.group(1) or "1")
        kind = m.group(2)
        args = m.group(3).split(",")
        if kind in ("n", "s"):
            if len(args) != 2:
                raise ValueError(f"label component {part!r} needs two indices")
            dim = int(args[0])
            key = f"{kind}({dim},{args[1]})"
        elif kind == "sl":
            if args != ["2", "R"]:
                raise ValueError(f"unsupported label component {part!r}")
            dim, key = 3, "sl(2,R)"
        elif kind == "so":
            if args != ["3"]:
                raise ValueError(f"unsupported label component {part!r}")
            dim, key = 3, "so(3)"
        else:
            if len(args) != 2 or args[0] != "1":
                raise ValueError(f"unsupported label component {part!r}")
            n = int(args[1])
            dim, key = (n * n + 3 * n + 8) // 2, f"schr(1,{n})"
        if count < 1:
            raise ValueError(f"bad multiplier in {part!r}")
        atoms.append(LabelAtom(kind=kind, dim=dim, key=key, count=count))
    if not atoms:
        raise ValueError("empty algebra label")
    return tuple(atoms)


ATOM_FINGERPRINTS: dict[str, AlgebraFingerprint] = {
    "n(1,1)": AlgebraFingerprint(1, (1, 0), (1, 0), 1),
    "n(3,1)": AlgebraFingerprint(3, (3, 1, 0), (3, 1, 0), 1),
    "n(4,1)": AlgebraFingerprint(4, (4, 2, 0), (4, 2, 1, 0), 1),
    "sl(2,R)": AlgebraFingerprint(3, (3, 3), (3, 3), 0),
    "so(3)": AlgebraFingerprint(3, (3, 3), (3, 3), 0),
    "schr(1,2)": AlgebraFingerprint(9, (9, 8, 8), (9, 8, 8), 1),
    "schr(1,3)": AlgebraFingerprint(13, (13, 13), (13, 13), 1),
    # Calibrated: each fingerprint below is reproduced by at least two
    # independent catalogue realizations of the same label.
    "s(2,1)": AlgebraFingerprint(2, (2, 1, 0), (2, 1, 1), 0),
    "s(4,6)": AlgebraFingerprint(4, (4, 3, 1, 0), (4, 3, 3), 1),
    "s(5,17)": AlgebraFingerprint(5, (5, 4, 2, 0), (5, 4, 4), 1),
    "s(6,160)": AlgebraFingerprint(6, (6, 4, 1, 0), (6, 4, 3, 3), 1),
    "s(6,162)": AlgebraFingerprint(6, (6, 5, 1, 0), (6, 5, 5), 1),
}


def _sum_series(seqs) -> tuple:
    """Pointwise sum of descending series, each extended by its stabilized
    tail, re-trimmed to the first zero or first repeat."""
    length = max(len(s) for s in seqs) + 1
    vals = [sum(s[k] if k < len(s) else s[-1] for s in seqs)
            for k in range(length)]
    out = [vals[0]]
    for v in vals[1:]:
        out.append(v)
        if v == 0 or v == out[-2]:
            break
    return tuple(out)


def compose_label(label: str) -> "AlgebraFingerprint | None":
    """Exact fingerprint of a direct-sum label, or None if some atom is
    not pinned down in the registry."""
    dims = 0
    centers = 0
    derived_seqs = []
    lcs_seqs = []
    for atom in parse_label(label):
        fp = ATOM_FINGERPRINTS.get(atom.key)
        if fp is None:
            return None
        dims += atom.count * fp.dim
        centers += atom.count * fp.center_dim
        derived_seqs.extend([fp.derived] * atom.count)
        lcs_seqs.extend([fp.lower_central] * atom.count)
    return AlgebraFingerprint(
        dim=dims,
        derived=_sum_series(derived_seqs),
        lower_central=_sum_series(lcs_seqs),
        center_dim=centers,
    )


def label_verdict(label: str, fp: AlgebraFingerprint) -> str:
    """Compare a computed fingerprint against a catalogue label.

    Returns "match", "mismatch", or "indeterminate".  Exact comparison
    when every atom is registered; otherwise class-level necessary checks
    (dimension, solvability, nilpotency), which are the full content of a
    solvable label of dimension above 6.
    """
    try:
        atoms = parse_label(label)
    except ValueError:
        return "indeterminate"
    if sum(a.count * a.dim for a in atoms) != fp.dim:
        return "mismatch"
    label_solvable = all(a.kind in ("n", "s") for a in atoms)
    if label_solvable != fp.solvable:
        return "mismatch"
    if all(a.kind == "n" for a in atoms) and not fp.nilpotent:
        return "mismatch"
    if fp.nilpotent and any(a.kind == "s" for a in atoms):
        # nilpotent algebras are filed under n, never under s
        return "mismatch"
    composed = compose_label(label)
    if composed is not None:
        return "match" if composed == fp else "mismatch"
    if all(a.dim > 6 for a in atoms if a.key not in ATOM_FINGERPRINTS):
        return "match"
    return "indeterminate"
