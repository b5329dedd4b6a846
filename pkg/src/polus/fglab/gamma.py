"""Gamma filtration on cellular K(n)-modules.

A module is free on named cells, each with a topological codimension and a
grading mod p^n - 1. Multiplication is known only up to its leading term:
every unknown structure constant and every unknown operation tail is a named
parameter ranging over Z_(p). Generators of gamma^m are products of cells
and operation values; ``guaranteed_span`` keeps only what survives every
value of the parameters.
"""
from fractions import Fraction
from functools import reduce
from math import lcm
from random import Random
from typing import Iterable, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DM
from sympy.polys.matrices.normalforms import invariant_factors

from .arith import Rational, format_rational, is_p_integral, require_prime, vp
from .chern import ConstantsTable
from .errors import InputError, InternalConsistencyError
from .logger import get_logger
from .utils import time_logger

logger = get_logger(__file__)

Monomial = tuple[str, ...]


class ParamPoly:
    """Polynomial with rational coefficients in parameters valued in Z_(p)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None) -> None:
        self.terms = {tuple(sorted(m)): Fraction(c) for m, c in (terms or {}).items() if c}

    @classmethod
    def known(cls, value) -> "ParamPoly":
        return cls({(): Fraction(value)})

    @classmethod
    def param(cls, name: str) -> "ParamPoly":
        return cls({(name,): Fraction(1)})

    def _lift(self, other) -> "ParamPoly":
        return other if isinstance(other, ParamPoly) else ParamPoly.known(other)

    def __add__(self, other) -> "ParamPoly":
        other = self._lift(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return ParamPoly(terms)

    __radd__ = __add__

    def __neg__(self) -> "ParamPoly":
        return ParamPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "ParamPoly":
        return self + (-self._lift(other))

    def __mul__(self, other) -> "ParamPoly":
        if not isinstance(other, ParamPoly):
            scalar = Fraction(other)
            return ParamPoly({m: c * scalar for m, c in self.terms.items()})
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2))
                terms[m] = terms.get(m, 0) + c1 * c2
        return ParamPoly(terms)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return self.terms == self._lift(other).terms

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_known(self) -> bool:
        return all(not m for m in self.terms)

    @property
    def value(self) -> Fraction:
        """The known constant; only meaningful when ``is_known()``."""
        return self.terms.get((), Fraction(0))

    def params(self) -> set[str]:
        return {name for m in self.terms for name in m}

    def is_integral(self, p: int) -> bool:
        """Every coefficient in Z_(p), so every value is in Z_(p)."""
        return all(is_p_integral(c, p) for c in self.terms.values())

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for name in m:
                term *= assignment[name]
            total += term
        return total

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms):
            coef = format_rational(self.terms[m])
            parts.append(f"{coef}*{'*'.join(m)}" if m else coef)
        return " + ".join(parts)


Entries = dict[str, ParamPoly]


class Cell(BaseModel):
    """A free generator with its topological codimension and grading."""

    name: str
    codim: int = Field(ge=0)
    grading: int = 0
    subvariety: bool = False


class LeadTerm(BaseModel):
    coef: Rational
    cell: str


class ProductRule(BaseModel):
    """a * b = coef * cell, plus an unknown tail in higher codimension when ``tail`` is "unknown"."""

    a: str
    b: str
    lead: LeadTerm | None = None
    tail: Literal["unknown", "none"] = "unknown"


class CellularModule(BaseModel):
    """K(n) of a cellular variety, as cells and leading-term multiplication."""

    p: int
    n: int = Field(ge=1)
    cells: list[Cell]
    products: list[ProductRule] = Field(default_factory=list)
    iso_flag: bool = False
    name: str = ""

    _by_name: dict[str, Cell] = PrivateAttr(default_factory=dict)
    _rules: dict[tuple[str, str], ProductRule] = PrivateAttr(default_factory=dict)
    _products: dict[tuple[str, str], Entries] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_structure(self) -> "CellularModule":
        require_prime(self.p, "CellularModule")
        period = self.p**self.n - 1
        names = [c.name for c in self.cells]
        if len(set(names)) != len(names):
            raise InputError("repeated cell names", module="gamma", operation="CellularModule", witness=names)
        units = [c.name for c in self.cells if c.codim == 0]
        if len(units) != 1:
            raise InputError("exactly one codim-0 cell required", module="gamma", operation="CellularModule", witness=units)
        for cell in self.cells:
            cell.grading %= period
        by_name = {c.name: c for c in self.cells}
        for rule in self.products:
            missing = [x for x in (rule.a, rule.b) + ((rule.lead.cell,) if rule.lead else ()) if x not in by_name]
            if missing:
                raise InputError("product names an unknown cell", module="gamma", operation="CellularModule", witness=missing)
            if rule.lead is None:
                continue
            a, b, c = by_name[rule.a], by_name[rule.b], by_name[rule.lead.cell]
            if c.codim != a.codim + b.codim:
                raise InputError("lead codim is not additive", module="gamma", operation="CellularModule", witness=f"{rule.a}*{rule.b}")
            if (a.grading + b.grading - c.grading) % period:
                raise InputError("lead grading is not additive", module="gamma", operation="CellularModule", witness=f"{rule.a}*{rule.b}")
            if not is_p_integral(rule.lead.coef, self.p):
                raise InputError("structure constant outside Z_(p)", module="gamma", operation="CellularModule", witness=f"{rule.a}*{rule.b}")
        return self

    def model_post_init(self, __context) -> None:
        self._by_name = {c.name: c for c in self.cells}
        for rule in reversed(self.products):
            self._rules[(rule.a, rule.b)] = rule
            self._rules[(rule.b, rule.a)] = rule

    @property
    def period(self) -> int:
        return self.p**self.n - 1

    @property
    def dimension(self) -> int:
        return max(c.codim for c in self.cells)

    def cell(self, name: str) -> Cell:
        try:
            return self._by_name[name]
        except KeyError:
            raise InputError("unknown cell", module="gamma", operation="cell", witness=name) from None

    @property
    def unit(self) -> Cell:
        return next(c for c in self.cells if c.codim == 0)

    def ordered(self) -> list[Cell]:
        """Cells by codimension, then name; the column order of every elimination."""
        return sorted(self.cells, key=lambda c: (c.codim, c.name))

    def rule(self, a: str, b: str) -> ProductRule | None:
        return self._rules.get((a, b))

    def tail_cells(self, codim: int, grading: int, strict: bool = True) -> list[Cell]:
        """Cells of the given grading above (or at, when not strict) ``codim``."""
        return [
            c for c in self.ordered()
            if (c.codim > codim if strict else c.codim >= codim) and (c.grading - grading) % self.period == 0
        ]

    def cell_product(self, a: str, b: str) -> Entries:
        """a * b with every unknown structure constant as a named parameter."""
        if (a, b) not in self._products:
            self._products[(a, b)] = self._cell_product(a, b)
        return self._products[(a, b)]

    def _cell_product(self, a: str, b: str) -> Entries:
        unit = self.unit.name
        if a == unit:
            return {b: ParamPoly.known(1)}
        if b == unit:
            return {a: ParamPoly.known(1)}
        ca, cb = self.cell(a), self.cell(b)
        grading = ca.grading + cb.grading
        key = "*".join(sorted((a, b)))
        rule = self.rule(a, b)
        if rule is None:
            return {c.name: ParamPoly.param(f"{key}:{c.name}") for c in self.tail_cells(ca.codim + cb.codim, grading, strict=False)}
        entries: Entries = {}
        if rule.lead is not None:
            entries[rule.lead.cell] = ParamPoly.known(rule.lead.coef)
        if rule.tail == "unknown":
            for c in self.tail_cells(ca.codim + cb.codim, grading):
                entries[c.name] = ParamPoly.param(f"{key}:{c.name}")
        return entries


class ParametricVector(BaseModel):
    """An element of the module whose entries may involve unknown parameters."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    entries: dict[str, ParamPoly]
    weight: int = 0
    grading: int | None = None
    label: str = ""

    def support(self) -> list[str]:
        return [name for name, value in self.entries.items() if value]

    def is_zero(self) -> bool:
        return not self.support()

    def is_known(self) -> bool:
        return all(value.is_known() for value in self.entries.values())

    def leading_codim(self, module: CellularModule) -> int | None:
        return min((module.cell(name).codim for name in self.support()), default=None)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "weight": self.weight,
            "entries": {name: repr(value) for name, value in sorted(self.entries.items()) if value},
        }


def _clean(entries: Mapping[str, ParamPoly]) -> Entries:
    return {name: value for name, value in entries.items() if value}


def multiply(module: CellularModule, v: ParametricVector, w: ParametricVector) -> ParametricVector:
    """Product of two vectors, weights adding."""
    entries: Entries = {}
    for a, x in v.entries.items():
        if not x:
            continue
        for b, y in w.entries.items():
            if not y:
                continue
            xy = x * y
            for c, z in module.cell_product(a, b).items():
                entries[c] = entries.get(c, ParamPoly()) + xy * z
    grading = None if v.grading is None or w.grading is None else (v.grading + w.grading) % module.period
    label = "*".join(x for x in (v.label, w.label) if x)
    return ParametricVector(entries=_clean(entries), weight=v.weight + w.weight, grading=grading, label=label)


def cell_vector(module: CellularModule, name: str, weight: int | None = None) -> ParametricVector:
    """A cell as a vector; positive-codim cells sit in gamma^1."""
    cell = module.cell(name)
    weight = (1 if cell.codim else 0) if weight is None else weight
    return ParametricVector(entries={name: ParamPoly.known(1)}, weight=weight, grading=cell.grading, label=name)


def _parse_op(op: str) -> tuple[str, int | None]:
    op = op.strip()
    if op == "psi_p":
        return "psi_p", None
    for kind in ("chern", "chi"):
        if op.startswith(f"{kind}(") and op.endswith(")"):
            try:
                return kind, int(op[len(kind) + 1: -1])
            except ValueError:
                break
    raise InputError("unknown operation", module="gamma", operation="op_value", witness=op)


def operation_weight(module: CellularModule, op: str, grading: int) -> int:
    """Gamma level of an operation value: i for chern(i); for chi and psi_p the first
    level above p^n carrying the cell's grading."""
    kind, index = _parse_op(op)
    if kind == "chern":
        return index
    w = module.p**module.n + 1
    while (w - grading) % module.period:
        w += 1
    return w


def op_value(module: CellularModule, cell: str, op: str, constants: ConstantsTable) -> ParametricVector:
    """Leading constant times the cell, plus a fresh unknown on every same-grading cell above it."""
    if (constants.p, constants.n) != (module.p, module.n):
        raise InputError("constants for another theory", module="gamma", operation="op_value", witness=f"{constants.p},{constants.n}")
    kind, index = _parse_op(op)
    if kind == "chern" and index < 1:
        raise InputError("chern index must be positive", module="gamma", operation="op_value", witness=op)
    target = module.cell(cell)
    if not target.subvariety:
        raise InputError("cell is not a subvariety class", module="gamma", operation="op_value", witness=cell)
    weight = operation_weight(module, op, target.grading)
    if target.codim == 0:
        return ParametricVector(entries={}, weight=weight, grading=target.grading, label=f"{op}({cell})")
    lead = constants.lookup(op, target.codim)
    entries = {cell: ParamPoly.known(lead)}
    for tail in module.tail_cells(target.codim, target.grading):
        entries[tail.name] = ParamPoly.param(f"{op}({cell}):{tail.name}")
    return ParametricVector(entries=_clean(entries), weight=weight, grading=target.grading, label=f"{op}({cell})")


def _operation_atoms(module: CellularModule, constants: ConstantsTable) -> list[ParametricVector]:
    atoms = []
    for entry in sorted(constants.entries, key=lambda e: e.key):
        op, _, codim = entry.key.rpartition("@")
        for cell in module.ordered():
            if not cell.subvariety or cell.codim != int(codim) or cell.codim == 0:
                continue
            vector = op_value(module, cell.name, op, constants)
            if vector.is_zero():
                continue
            if vector.weight > cell.codim:
                logger.warning(f"{vector.label} has weight {vector.weight} above its codim {cell.codim}; skipped")
                continue
            atoms.append(vector)
    return atoms


def _cell_monomials(module: CellularModule, degree_cap: int) -> list[ParametricVector]:
    """Products of sorted multisets of positive-codim cells with codim sum <= cap."""
    cells = [c for c in module.ordered() if c.codim > 0]
    out: list[ParametricVector] = []

    def extend(start: int, vector: ParametricVector, codim: int) -> None:
        for k in range(start, len(cells)):
            cell = cells[k]
            if codim + cell.codim > degree_cap:
                continue
            factor = cell_vector(module, cell.name)
            product = factor if vector is None else multiply(module, vector, factor)
            if product.is_zero():
                continue
            out.append(product)
            extend(k, product, codim + cell.codim)

    extend(0, None, 0)
    return out


@time_logger
def gamma_generators(
    module: CellularModule,
    m: int,
    degree_cap: int | None = None,
    constants: ConstantsTable | None = None,
) -> list[ParametricVector]:
    """Monomial generators of gamma^m: cell products and operation values times cell products."""
    if m < 0:
        raise InputError("m must be non-negative", module="gamma", operation="gamma_generators", witness=m)
    degree_cap = module.dimension if degree_cap is None else degree_cap
    monomials = _cell_monomials(module, degree_cap)
    generators: list[ParametricVector] = []
    if m == 0:
        generators.append(cell_vector(module, module.unit.name))
    generators.extend(monomials)
    if constants is not None:
        for atom in _operation_atoms(module, constants):
            codim = atom.leading_codim(module)
            generators.append(atom)
            for monomial in monomials:
                if codim + monomial.leading_codim(module) > degree_cap:
                    continue
                product = multiply(module, atom, monomial)
                if not product.is_zero():
                    generators.append(product)
    selected = [g for g in generators if g.weight >= m]
    logger.debug(f"gamma^{m}: {len(selected)} generators up to codim {degree_cap}")
    return selected


class KnownRow(BaseModel):
    """A fully known vector guaranteed to lie in the span."""

    label: str
    pivot: str
    entries: dict[str, Rational]
    cost: int = 0


class GuaranteedSpan(BaseModel):
    p: int
    columns: list[str]
    rows: list[KnownRow]
    dropped: list[str] = Field(default_factory=list)

    def by_pivot(self) -> dict[str, list[KnownRow]]:
        out: dict[str, list[KnownRow]] = {}
        for row in self.rows:
            out.setdefault(row.pivot, []).append(row)
        return out

    def by_codim(self, module: CellularModule) -> dict[int, list[KnownRow]]:
        out: dict[int, list[KnownRow]] = {}
        for row in self.rows:
            out.setdefault(module.cell(row.pivot).codim, []).append(row)
        return out

    def matrix(self, columns: list[str] | None = None) -> list[list[Fraction]]:
        columns = self.columns if columns is None else columns
        return [[row.entries.get(c, Fraction(0)) for c in columns] for row in self.rows]


class _Row:
    __slots__ = ("label", "entries", "cost")

    def __init__(self, label: str, entries: Entries, cost: int = 0) -> None:
        self.label = label
        self.entries = _clean(entries)
        self.cost = cost

    def axpy(self, factor: ParamPoly, other: "_Row", scale: Fraction = Fraction(1)) -> "_Row":
        """scale * self - factor * other."""
        entries = {c: x * scale for c, x in self.entries.items()}
        for c, y in other.entries.items():
            entries[c] = entries.get(c, ParamPoly()) - factor * y
        return _Row(self.label, entries, self.cost)


def _split_unit(q: Fraction, p: int) -> tuple[int, Fraction]:
    v = int(vp(q, p))
    return v, q / Fraction(p) ** v


def guaranteed_span(vectors: Iterable[ParametricVector], p: int, columns: list[str] | None = None) -> GuaranteedSpan:
    """Fully known vectors lying in the Z_(p)-span of ``vectors`` for every parameter value.

    Columns are processed in order. The pivot of a column is the known entry of
    least valuation among rows not yet used; every other entry in the column is
    cleared with it, exactly when the quotient lies in Z_(p) and otherwise after
    scaling the cleared row by p^v. Rows left with an unknown entry that no pivot
    clears are dropped.
    """
    vectors = list(vectors)
    if columns is None:
        columns = sorted({name for v in vectors for name in v.support()})
    unknown_columns = {name for v in vectors for name in v.support()} - set(columns)
    if unknown_columns:
        raise InputError("vector entries outside the columns", module="gamma", operation="guaranteed_span", witness=sorted(unknown_columns))
    for v in vectors:
        bad = [name for name, value in v.entries.items() if not value.is_integral(p)]
        if bad:
            raise InputError("entry outside Z_(p)", module="gamma", operation="guaranteed_span", witness=f"{v.label}: {bad}")
    free = [_Row(v.label, v.entries) for v in vectors if not v.is_zero()]
    pivots: list[tuple[str, _Row]] = []
    dropped: list[str] = []
    for column in columns:
        candidates = [r for r in free if column in r.entries and r.entries[column].is_known()]
        pivot = min(candidates, key=lambda r: vp(r.entries[column].value, p), default=None)
        if pivot is not None:
            free.remove(pivot)
            q = pivot.entries[column].value
            v, unit = _split_unit(q, p)
        remaining = []
        for row in free:
            entry = row.entries.get(column)
            if entry is None:
                remaining.append(row)
                continue
            if pivot is None:
                if not entry.is_known():
                    dropped.append(row.label)
                else:
                    remaining.append(row)
                continue
            if entry.is_known() and vp(entry.value, p) >= v:
                row = row.axpy(ParamPoly.known(entry.value / q), pivot)
            else:
                row = row.axpy(entry * (1 / unit), pivot, scale=Fraction(p) ** v)
                row.cost += v
            if row.entries:
                remaining.append(row)
        free = remaining
        if pivot is None:
            # unknowns of earlier pivots in this column stay; those pivots are dropped at the end
            continue
        updated = []
        for label, row in pivots:
            entry = row.entries.get(column)
            if entry is not None and not entry.is_known():
                if v == 0:
                    row = row.axpy(entry * (1 / unit), pivot)
                else:
                    row = row.axpy(entry * (1 / unit), pivot, scale=Fraction(p) ** v)
                    row.cost += v
            updated.append((label, row))
        pivots = updated + [(column, pivot)]
    rows = []
    for column, row in pivots:
        if all(x.is_known() for x in row.entries.values()):
            rows.append(KnownRow(label=row.label, pivot=column, entries={c: x.value for c, x in row.entries.items() if x}, cost=row.cost))
        else:
            dropped.append(row.label)
    return GuaranteedSpan(p=p, columns=list(columns), rows=rows, dropped=dropped)


def _integer_rows(rows: list[list[Fraction]], p: int) -> list[list[int]]:
    """Scale each row by the p'-part of its denominators."""
    out = []
    for row in rows:
        if any(not is_p_integral(x, p) for x in row):
            raise InputError("row outside Z_(p)", module="gamma", operation="elementary_divisors", witness=[format_rational(x) for x in row])
        scale = reduce(lcm, (x.denominator for x in row), 1)
        out.append([int(x * scale) for x in row])
    return out


def elementary_divisor_valuations(rows: list[list[Fraction]], columns: int, p: int) -> list[int]:
    """Valuations of the nonzero elementary divisors over Z_(p); the length is the rank."""
    rows = [r for r in rows if any(r)]
    if not rows or not columns:
        return []
    matrix = DM(_integer_rows(rows, p), ZZ)
    factors = [int(f) for f in invariant_factors(matrix)]
    return sorted(int(vp(f, p)) for f in factors if f)


def padic_span_contains(rows: list[list[Fraction]], target: list[Fraction], p: int) -> bool:
    """Whether ``target`` lies in the Z_(p)-span of ``rows``."""
    if not any(target):
        return True
    columns = len(target)
    before = elementary_divisor_valuations(rows, columns, p)
    after = elementary_divisor_valuations(rows + [target], columns, p)
    return len(before) == len(after) and sum(before) == sum(after)


def instantiate(vector: ParametricVector, assignment: Mapping[str, Fraction]) -> dict[str, Fraction]:
    """Entries of ``vector`` at one value of the parameters."""
    missing = sorted({name for value in vector.entries.values() for name in value.params()} - set(assignment))
    if missing:
        raise InputError("parameters without a value", module="gamma", operation="instantiate", witness=missing)
    return {cell: value.evaluate(assignment) for cell, value in vector.entries.items()}


def soundness_failures(
    vectors: list[ParametricVector],
    span: GuaranteedSpan,
    rng: Random,
    samples: int,
    bound: int = 8,
) -> list[str]:
    """Labels of guaranteed rows missing from the span at some random integer parameter value."""
    params = sorted({name for v in vectors for value in v.entries.values() for name in value.params()})
    columns = span.columns
    failures = set()
    for _ in range(samples):
        assignment = {name: Fraction(rng.randint(-bound, bound)) for name in params}
        rows = []
        for v in vectors:
            values = instantiate(v, assignment)
            rows.append([values.get(c, Fraction(0)) for c in columns])
        for row in span.rows:
            target = [row.entries.get(c, Fraction(0)) for c in columns]
            if not padic_span_contains(rows, target, span.p):
                failures.add(row.label)
    if failures:
        logger.error(f"guaranteed rows outside an instantiated span: {sorted(failures)}")
    return sorted(failures)


class DegreeReport(BaseModel):
    """Bound on gr^i_gamma: it embeds in the quotient of tau^i by the guaranteed gamma^(i+1)."""

    degree: int
    tau_basis: list[str]
    free_rank: int
    torsion: list[str]
    generators_used: list[str]
    exhausted: bool

    @property
    def bound(self) -> str:
        return "quotient" if self.exhausted else "subquotient"


class GammaReport(BaseModel):
    p: int
    n: int
    iso_flag: bool
    degree_cap: int
    degrees: list[DegreeReport]

    def degree(self, i: int) -> DegreeReport:
        return next(d for d in self.degrees if d.degree == i)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "iso_flag": self.iso_flag,
            "degree_cap": self.degree_cap,
            "degrees": {
                str(d.degree): {
                    "tau_basis": d.tau_basis,
                    "free_rank": d.free_rank,
                    "torsion": d.torsion,
                    "generators_used": d.generators_used,
                    "bound": d.bound,
                }
                for d in self.degrees
            },
        }


@time_logger
def graded_report(
    module: CellularModule,
    constants: ConstantsTable,
    i_max: int,
    degree_cap: int | None = None,
) -> GammaReport:
    """Per degree i <= i_max: free rank and p-power torsion of tau^i over the guaranteed gamma^(i+1).

    When the guaranteed gamma^i already fills tau^i, gr^i_gamma is a quotient
    of that group; otherwise only a subquotient.
    """
    if i_max < 0:
        raise InputError("i_max must be non-negative", module="gamma", operation="graded_report", witness=i_max)
    if not module.iso_flag:
        logger.warning("iso_flag is not set: bounds hold for the split module only")
    degree_cap = module.dimension if degree_cap is None else degree_cap
    generators = gamma_generators(module, 0, degree_cap, constants)
    for g in generators:
        lead = g.leading_codim(module)
        if lead is not None and lead < g.weight:
            raise InternalConsistencyError("generator below its gamma level", module="gamma", operation="graded_report", witness=g.label)
    order = [c.name for c in module.ordered()]
    degrees = []
    for i in range(i_max + 1):
        tau = [c.name for c in module.ordered() if c.codim >= i]
        upper = guaranteed_span([g for g in generators if g.weight >= i + 1], module.p, order)
        valuations = elementary_divisor_valuations(upper.matrix(tau), len(tau), module.p)
        here = guaranteed_span([g for g in generators if g.weight >= i], module.p, order)
        filled = elementary_divisor_valuations(here.matrix(tau), len(tau), module.p)
        degrees.append(DegreeReport(
            degree=i,
            tau_basis=[c.name for c in module.ordered() if c.codim == i],
            free_rank=len(tau) - len(valuations),
            torsion=[str(module.p**v) for v in valuations if v],
            generators_used=sorted({row.label for row in upper.rows}),
            exhausted=len(filled) == len(tau) and not any(filled),
        ))
        logger.info(f"gr^{i}: free rank {degrees[-1].free_rank}, torsion {degrees[-1].torsion or 'none'}")
    return GammaReport(p=module.p, n=module.n, iso_flag=module.iso_flag, degree_cap=degree_cap, degrees=degrees)


def pfister(n: int, p: int = 2) -> CellularModule:
    """Split Pfister quadric of dimension 2^(n+2) - 2: powers h_i of the hyperplane and linear subspaces l_i."""
    if p != 2:
        raise InputError("Pfister quadrics are defined at p = 2", module="gamma", operation="pfister", witness=p)
    if n < 1:
        raise InputError("n must be at least 1", module="gamma", operation="pfister", witness=n)
    top = 2 ** (n + 1) - 1
    dim = 2 ** (n + 2) - 2
    period = 2**n - 1
    cells = [Cell(name=f"h{i}", codim=i, grading=i % period) for i in range(top + 1)]
    cells += [Cell(name=f"l{i}", codim=dim - i, grading=(dim - i) % period, subvariety=True) for i in range(top + 1)]
    products = []
    for a in range(1, top + 1):
        for b in range(a, top + 1 - a):
            products.append(ProductRule(a=f"h{a}", b=f"h{b}", lead=LeadTerm(coef=Fraction(1), cell=f"h{a + b}"), tail="none"))
        for j in range(a, top + 1):
            products.append(ProductRule(a=f"h{a}", b=f"l{j}", lead=LeadTerm(coef=Fraction(1), cell=f"l{j - a}")))
    return CellularModule(p=2, n=n, cells=cells, products=products, iso_flag=True, name=f"pfister(n={n})")


def pfister_expectation(n: int) -> dict[int, tuple[int, list[str]]]:
    """gr^i free of rank 1 for i < 2^n; at 2^n rank 1 with torsion at most Z/2."""
    expectation = {i: (1, []) for i in range(2**n)}
    expectation[2**n] = (1, ["2"])
    return expectation


def module_from_json(data: Mapping) -> CellularModule:
    try:
        return CellularModule.model_validate(data)
    except InputError:
        raise
    except ValueError as err:
        raise InputError("malformed variety JSON", module="gamma", operation="module_from_json", witness=str(err)) from err
