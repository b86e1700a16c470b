"""Catalogue of potential families and the harness that verifies them.

Forty entries in four groups, plus a short list of derivation
checkpoints.  Each entry stores a potential template over declared
function symbols, the generators listed for it (the universal pair
P0 and Id is implied and adjoined before closure), equivalence-map
flags, and the closed symmetry algebra with a frozen structural
fingerprint for every parameter branch.

Entries whose transcription fails verification as written keep both
readings.  The repaired reading is primary; the original text stays
quarantined next to it with an annotation and with the frozen list of
generators expected to fail, so the defect itself is a tested fact.

Couplings are normalized to e = g = 1 throughout the data file; the
templates absorb them.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import yaml

from .algebra import (
    AlgebraFingerprint,
    ClosureResult,
    close_algebra,
    fingerprint,
    label_verdict,
)
from .expr import ZERO, Expr, ZeroDecision
from .generators import identity_op, p0, parse_operator
from .operators import Potential, check_symmetry, worst_decision
from .parse import ParseContext, parse_expr

__all__ = [
    "CatalogError", "Reading", "AlgebraCase", "TableEntry", "WorkedExample",
    "Catalog", "load_catalog", "SymmetryVerdict", "BranchVerdict",
    "VerificationReport", "verify_entry", "entry_closure", "instantiate",
    "worked_example_suite", "GROUP_SIZES",
]

GROUP_SIZES = {1: 10, 2: 9, 3: 11, 4: 10}

ENTRY_FLAGS = ("star", "blackstar")

BRANCH_CASES = ("always", "zero", "nonzero")


class CatalogError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Data model

@dataclass(frozen=True)
class Reading:
    """One concrete reading of an entry: functions, templates, generators."""

    functions: tuple          # ((name, (arg, ...)), ...)
    potential_spec: tuple     # ((field, spec), ...) with field in A1/A2/A0
    symmetry_spec: tuple      # generator source strings

    def context(self) -> ParseContext:
        return ParseContext().with_functions(
            **{name: len(args) for name, args in self.functions})

    def potential(self) -> Potential:
        ctx = self.context()
        fields = {name: _field_expr(spec, ctx)
                  for name, spec in self.potential_spec}
        return Potential(A1=fields.get("A1", ZERO),
                         A2=fields.get("A2", ZERO),
                         A0=fields.get("A0", ZERO))

    def symmetries(self) -> tuple:
        ctx = self.context()
        return tuple(parse_operator(src, ctx) for src in self.symmetry_spec)


@dataclass(frozen=True)
class AlgebraCase:
    """Frozen closure expectation for one parameter branch."""

    when: str                 # always | zero | nonzero
    label: str
    verdict: str              # frozen label verdict: match | mismatch | indeterminate
    expected: AlgebraFingerprint


@dataclass(frozen=True)
class TableEntry:
    entry_id: str
    table: int
    item: int
    flags: tuple
    primary: Reading
    printed: "Reading | None"
    printed_failing: tuple    # generator sources expected NonZero as printed
    annotation: "str | None"
    branch: "str | None"
    algebra: tuple            # AlgebraCase, ...

    @property
    def quarantined(self) -> bool:
        return bool(self.printed_failing)

    def reading(self, which: str = "primary") -> Reading:
        if which == "primary":
            return self.primary
        if which == "printed":
            return self.printed if self.printed is not None else self.primary
        raise ValueError(f"unknown reading {which!r}")


@dataclass(frozen=True)
class WorkedExample:
    example_id: str
    note: str
    reading: Reading


@dataclass(frozen=True)
class Catalog:
    entries: tuple
    worked: tuple

    def entry(self, entry_id: str) -> TableEntry:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        raise KeyError(entry_id)

    def group(self, table: int) -> tuple:
        return tuple(e for e in self.entries if e.table == table)


# ---------------------------------------------------------------------------
# Template construction

def _term_expr(term, ctx: ParseContext) -> Expr:
    """One additive term: a plain source string, or a derivative record
    {d: coordinate, of: source, times: prefactor source}."""
    if isinstance(term, str):
        return parse_expr(term, ctx)
    if not isinstance(term, dict) or "of" not in term:
        raise CatalogError(f"bad potential term {term!r}")
    out = parse_expr(term["of"], ctx)
    coord = term.get("d")
    if coord is not None:
        out = out.diff(coord)
    times = term.get("times")
    if times is not None:
        out = parse_expr(str(times), ctx) * out
    return out


def _field_expr(spec, ctx: ParseContext) -> Expr:
    if spec is None:
        return ZERO
    if isinstance(spec, list):
        total = ZERO
        for term in spec:
            total = total + _term_expr(term, ctx)
        return total
    return _term_expr(spec, ctx)


# ---------------------------------------------------------------------------
# Loading

def _as_reading(raw: dict, where: str) -> Reading:
    functions = raw.get("functions") or {}
    if not isinstance(functions, dict):
        raise CatalogError(f"{where}: functions must be a mapping")
    fn_items = []
    for name, args in functions.items():
        if not isinstance(args, list) or not args:
            raise CatalogError(f"{where}: function {name!r} needs an argument list")
        fn_items.append((str(name), tuple(str(a) for a in args)))
    potential = raw.get("potential") or {}
    if set(potential) - {"A1", "A2", "A0"}:
        raise CatalogError(f"{where}: unknown potential fields {sorted(potential)}")
    symmetries = raw.get("symmetries") or []
    if not isinstance(symmetries, list):
        raise CatalogError(f"{where}: symmetries must be a list")
    pot_items = tuple((name, potential[name]) for name in ("A1", "A2", "A0")
                      if name in potential)
    reading = Reading(
        functions=tuple(fn_items),
        potential_spec=pot_items,
        symmetry_spec=tuple(str(s) for s in symmetries),
    )
    # Fail fast on malformed templates so load reports the entry id.
    try:
        reading.potential()
        reading.symmetries()
    except Exception as exc:
        raise CatalogError(f"{where}: {exc}") from exc
    return reading


def _as_fingerprint(raw: dict, where: str) -> AlgebraFingerprint:
    try:
        return AlgebraFingerprint(
            dim=int(raw["dim"]),
            derived=tuple(int(k) for k in raw["derived"]),
            lower_central=tuple(int(k) for k in raw["lower_central"]),
            center_dim=int(raw["center"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"{where}: bad fingerprint record: {exc}") from exc


def _as_entry(raw: dict) -> TableEntry:
    entry_id = str(raw.get("id", "?"))
    where = f"entry {entry_id}"
    for key in ("id", "table", "item"):
        if key not in raw:
            raise CatalogError(f"{where}: missing {key}")
    flags = tuple(raw.get("flags") or ())
    for flag in flags:
        if flag not in ENTRY_FLAGS:
            raise CatalogError(f"{where}: unknown flag {flag!r}")
    primary = _as_reading(raw, where)

    printed = None
    printed_failing = ()
    if "printed" in raw:
        printed_raw = dict(raw["printed"])
        merged = {
            "functions": printed_raw.get("functions", raw.get("functions")),
            "potential": printed_raw.get("potential", raw.get("potential")),
            "symmetries": printed_raw.get("symmetries", raw.get("symmetries")),
        }
        printed = _as_reading(merged, f"{where} (printed)")
        printed_failing = tuple(printed_raw.get("failing") or ())
        for src in printed_failing:
            if src not in printed.symmetry_spec:
                raise CatalogError(
                    f"{where}: failing generator {src!r} not in printed list")

    branch = raw.get("branch")
    cases = []
    for case_raw in raw.get("algebra") or ():
        when = case_raw.get("when", "always")
        if when not in BRANCH_CASES:
            raise CatalogError(f"{where}: unknown branch case {when!r}")
        verdict = case_raw.get("verdict", "match")
        if verdict not in ("match", "mismatch", "indeterminate"):
            raise CatalogError(f"{where}: unknown label verdict {verdict!r}")
        cases.append(AlgebraCase(
            when=when,
            label=str(case_raw.get("label", "")),
            verdict=verdict,
            expected=_as_fingerprint(case_raw, where),
        ))
    if not cases:
        raise CatalogError(f"{where}: no algebra record")
    whens = [c.when for c in cases]
    if branch is None:
        if whens != ["always"]:
            raise CatalogError(f"{where}: unbranched entry needs a single case")
    else:
        if sorted(whens) != ["nonzero", "zero"]:
            raise CatalogError(f"{where}: branch needs zero and nonzero cases")

    return TableEntry(
        entry_id=entry_id,
        table=int(raw["table"]),
        item=int(raw["item"]),
        flags=flags,
        primary=primary,
        printed=printed,
        printed_failing=printed_failing,
        annotation=raw.get("annotation"),
        branch=branch,
        algebra=tuple(cases),
    )


def load_catalog(source=None) -> Catalog:
    """Load and validate the shipped catalogue (or the given path)."""
    if source is None:
        data_path = importlib.resources.files("schrosym") / "data" / "tables.yaml"
        text = data_path.read_text(encoding="utf-8")
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict) or "entries" not in raw:
        raise CatalogError("catalogue file needs a top-level entries list")
    entries = tuple(_as_entry(item) for item in raw["entries"])

    seen = set()
    for e in entries:
        if e.entry_id in seen:
            raise CatalogError(f"duplicate entry id {e.entry_id}")
        seen.add(e.entry_id)
        if e.entry_id != f"{e.table}.{e.item}":
            raise CatalogError(f"entry {e.entry_id}: id disagrees with table/item")
    for table, size in GROUP_SIZES.items():
        got = sum(1 for e in entries if e.table == table)
        if got != size:
            raise CatalogError(f"group {table}: expected {size} entries, got {got}")

    worked = []
    for item in raw.get("worked") or ():
        example_id = str(item.get("id", "?"))
        worked.append(WorkedExample(
            example_id=example_id,
            note=str(item.get("note", "")),
            reading=_as_reading(item, f"worked {example_id}"),
        ))
    return Catalog(entries=entries, worked=tuple(worked))


# ---------------------------------------------------------------------------
# Verification

@dataclass(frozen=True)
class SymmetryVerdict:
    source: str
    decision: str
    alpha: Expr


@dataclass(frozen=True)
class BranchVerdict:
    when: str
    dim: int
    computed: AlgebraFingerprint
    expected: AlgebraFingerprint
    label: str
    label_verdict: str        # match | mismatch | indeterminate
    expected_verdict: str

    @property
    def fingerprint_ok(self) -> bool:
        return self.computed == self.expected

    @property
    def label_as_expected(self) -> bool:
        return self.label_verdict == self.expected_verdict


@dataclass(frozen=True)
class VerificationReport:
    entry_id: str
    reading: str
    symmetries: tuple         # SymmetryVerdict, ...
    branches: tuple           # BranchVerdict, ...
    annotation: "str | None"
    quarantined: bool
    expected_failures: tuple

    @property
    def symmetry_decision(self) -> str:
        return worst_decision(v.decision for v in self.symmetries)

    @property
    def ok(self) -> bool:
        """Did this reading behave exactly as frozen in the catalogue?"""
        for v in self.symmetries:
            want = (ZeroDecision.NONZERO if v.source in self.expected_failures
                    else ZeroDecision.ZERO)
            if v.decision != want:
                return False
        return all(b.fingerprint_ok and b.label_as_expected
                   for b in self.branches)


def _branch_ops(ops, branch: "str | None", when: str):
    if branch is None or when != "zero":
        return list(ops)
    return [op.map_coeffs(lambda c: c.subs({branch: ZERO})) for op in ops]


def entry_closure(entry: TableEntry, when: str = "always") -> ClosureResult:
    """Close the listed generators together with P0 and Id."""
    ops = list(entry.primary.symmetries())
    named = [(f"S{k + 1}", op)
             for k, op in enumerate(_branch_ops(ops, entry.branch, when))]
    named.append(("P0", p0()))
    named.append(("Id", identity_op()))
    return close_algebra(named)


def verify_entry(entry: TableEntry, reading: str = "primary",
                 with_algebra: bool = True) -> VerificationReport:
    chosen = entry.reading(reading)
    pot = chosen.potential()
    verdicts = []
    for src, op in zip(chosen.symmetry_spec, chosen.symmetries()):
        rep = check_symmetry(pot, op)
        verdicts.append(SymmetryVerdict(
            source=src, decision=rep.satisfied, alpha=rep.alpha))

    branches = []
    if with_algebra and reading == "primary":
        for case in entry.algebra:
            result = entry_closure(entry, case.when)
            computed = fingerprint(result)
            branches.append(BranchVerdict(
                when=case.when,
                dim=result.dim,
                computed=computed,
                expected=case.expected,
                label=case.label,
                label_verdict=label_verdict(case.label, computed),
                expected_verdict=case.verdict,
            ))

    return VerificationReport(
        entry_id=entry.entry_id,
        reading=reading,
        symmetries=tuple(verdicts),
        branches=tuple(branches),
        annotation=entry.annotation,
        quarantined=entry.quarantined,
        expected_failures=entry.printed_failing if reading == "printed" else (),
    )


def instantiate(reading: Reading, bindings: dict) -> Potential:
    """Concrete potential with every function symbol bound.

    Bindings map a function name to a source string over slot parameters
    s1..sn (or to a ready Expr template over those parameters).
    """
    table = {}
    for name, args in reading.functions:
        if name not in bindings:
            raise CatalogError(f"no binding for function {name!r}")
        slots = tuple(f"s{k + 1}" for k in range(len(args)))
        template = bindings[name]
        if not isinstance(template, Expr):
            ctx = ParseContext().with_params(*slots)
            template = parse_expr(str(template), ctx)
        table[name] = (slots, template)
    extra = set(bindings) - {name for name, _ in reading.functions}
    if extra:
        raise CatalogError(f"bindings for undeclared functions {sorted(extra)}")
    pot = reading.potential()
    return Potential(
        A1=pot.A1.subs_functions(table),
        A2=pot.A2.subs_functions(table),
        A0=pot.A0.subs_functions(table),
        e=pot.e, g=pot.g)


def worked_example_suite(catalog: "Catalog | None" = None) -> list:
    """Verify every derivation checkpoint shipped with the catalogue."""
    if catalog is None:
        catalog = load_catalog()
    reports = []
    for ex in catalog.worked:
        pot = ex.reading.potential()
        verdicts = []
        for src, op in zip(ex.reading.symmetry_spec, ex.reading.symmetries()):
            rep = check_symmetry(pot, op)
            verdicts.append(SymmetryVerdict(
                source=src, decision=rep.satisfied, alpha=rep.alpha))
        verdicts = tuple(verdicts)
        reports.append(VerificationReport(
            entry_id=ex.example_id,
            reading="primary",
            symmetries=verdicts,
            branches=(),
            annotation=ex.note,
            quarantined=False,
            expected_failures=(),
        ))
    return reports
