"""Additive operations between free theories in Chern-character coordinates.

Over the rationals an additive operation from a Morava theory to a
logarithm-backed theory is diagonal: it multiplies the codimension-D part
of the Chern character by a rational lambda_D. The operation acts on a
product of l projective spaces through its symbol series

    G_l(z) = sum_D lambda_D [prod_j exp_source(w_j)]_D  at  w_j = log_target(z_j)

and is integral when every coefficient of every G_l lies in Z_(p).
"""
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from . import config
from .arith import (
    PadicBall,
    Rational,
    ball_alternatives,
    ball_intersect,
    canonical_pick,
    format_rational,
    is_p_integral,
    is_p_unit,
    power_of,
    vp,
)
from .errors import CapInsufficientError, ClaimMismatchError, InputError, InternalConsistencyError, SolverError
from .fgl import FormalGroupLaw, MoravaSpec, additive, m_series, morava
from .logger import get_logger
from .rings import QQ
from .series import TruncatedSeries, expand_symmetric, partitions, substitute, variable_names
from .utils import progress, time_logger

logger = get_logger(__file__)

Partition = tuple[int, ...]
Residue = Mapping[Partition, Fraction]


class OperationCaps(BaseModel):
    """Arity cap L and degree cap N of an integrality check."""

    arity: int = Field(ge=1)
    degree: int = Field(ge=1)


def iter_partitions(lo: int, hi: int, max_parts: int) -> Iterator[Partition]:
    """Partitions with total in [lo, hi] and at most ``max_parts`` parts, by total then length."""
    for total in range(max(lo, 1), hi + 1):
        for parts in range(1, min(max_parts, total) + 1):
            yield from partitions(total, parts)


class ChernCharacterTable:
    """Partition-indexed symbol data of operations from ``source`` to ``target``.

    rows[k][m] = e_k [z^m] log_target(z)^k with e_k the coefficients of
    exp_source, and symbols(m)[D] = [t^D] prod_j sum_k rows[k][m_j] t^k is
    the contribution of lambda_D to the G_l coefficient at the monomial of
    exponent pattern m.
    """

    def __init__(self, source: FormalGroupLaw, target: FormalGroupLaw, degree_cap: int) -> None:
        if source.ring is not QQ or target.ring is not QQ:
            raise InputError("operations need rational laws", module="addops", operation="ChernCharacterTable")
        if source.p != target.p:
            raise InputError("laws at different primes", module="addops", operation="ChernCharacterTable", witness=f"{source.p} vs {target.p}")
        if degree_cap > min(source.cap, target.cap):
            raise CapInsufficientError(
                "degree cap exceeds the law caps",
                module="addops",
                operation="ChernCharacterTable",
                witness=f"N={degree_cap}, caps={source.cap}/{target.cap}",
            )
        self.source = source
        self.target = target
        self.degree_cap = degree_cap
        self.p = source.p
        exp_coefficients = source.exp.univariate_coefficients()
        log = target.log.truncate(degree_cap)
        power = TruncatedSeries.constant(1, log.variables, degree_cap)
        self.rows: dict[int, list[Fraction]] = {}
        for k in range(1, degree_cap + 1):
            power = power * log
            e_k = exp_coefficients.get(k, Fraction(0))
            if e_k:
                self.rows[k] = [e_k * power.coefficient((m,)) for m in range(degree_cap + 1)]
        self._symbols: dict[Partition, dict[int, Fraction]] = {}

    def symbols(self, part: Partition) -> dict[int, Fraction]:
        cached = self._symbols.get(part)
        if cached is None:
            poly = {0: Fraction(1)}
            for m_j in part:
                step: dict[int, Fraction] = {}
                for d, c in poly.items():
                    for k, row in self.rows.items():
                        if k > m_j:
                            break
                        value = row[m_j]
                        if value:
                            step[d + k] = step.get(d + k, Fraction(0)) + c * value
                poly = step
            cached = {d: c for d, c in poly.items() if c}
            self._symbols[part] = cached
        return cached

    def coefficient(self, multipliers: Mapping[int, Fraction], part: Partition) -> Fraction:
        """Coefficient of G_l at the exponent pattern ``part``."""
        total = Fraction(0)
        for d, c in self.symbols(part).items():
            lam = multipliers.get(d)
            if lam:
                total += lam * c
        return total


@lru_cache(maxsize=64)
def character_table(source: FormalGroupLaw, target: FormalGroupLaw, degree_cap: int) -> ChernCharacterTable:
    return ChernCharacterTable(source, target, degree_cap)


class DiagonalOperation(BaseModel):
    """An operation source -> target given by its Chern-character multipliers."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source: FormalGroupLaw
    target: FormalGroupLaw
    lead: int = Field(ge=1)
    multipliers: dict[int, Rational]
    caps: OperationCaps
    leading_valuation: int | None = None
    label: str = ""

    @model_validator(mode="after")
    def check_frame(self) -> "DiagonalOperation":
        if self.source.period is None:
            raise InputError("source must be a Morava law", module="addops", operation="DiagonalOperation", witness=self.source.label)
        if self.source.p != self.target.p:
            raise InputError("laws at different primes", module="addops", operation="DiagonalOperation")
        low = [d for d in self.multipliers if d < self.lead]
        if low:
            raise InputError("multiplier below the lead codimension", module="addops", operation="DiagonalOperation", witness=low)
        return self

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def period(self) -> int:
        return self.source.period

    @property
    def table(self) -> ChernCharacterTable:
        return character_table(self.source, self.target, self.caps.degree)

    @property
    def lead_coefficient(self) -> Fraction:
        return self.multipliers.get(self.lead, Fraction(0))

    @property
    def lambdas(self) -> dict[int, Fraction]:
        """lambda_s = multiplier at lead + s (p^n - 1)."""
        return {
            s: self.multipliers.get(d, Fraction(0))
            for s, d in enumerate(range(self.lead, self.caps.degree + 1, self.period))
        }

    def support_ok(self) -> bool:
        return all((d - self.lead) % self.period == 0 for d, lam in self.multipliers.items() if lam)

    def scaled(self, factor) -> "DiagonalOperation":
        factor = Fraction(factor)
        return self.model_copy(update={
            "multipliers": {d: lam * factor for d, lam in self.multipliers.items() if lam * factor},
            "leading_valuation": None,
        })

    def to_json(self) -> dict:
        data = {
            "lead": self.lead,
            "p": self.p,
            "n": self.source.n,
            "source": self.source.label,
            "target": self.target.label,
            "caps": {"arity": self.caps.arity, "degree": self.caps.degree},
            "leading_valuation": self.leading_valuation,
        }
        if self.support_ok():
            data["lambda"] = {str(s): format_rational(lam) for s, lam in self.lambdas.items() if lam}
        else:
            data["multipliers"] = {str(d): format_rational(lam) for d, lam in sorted(self.multipliers.items()) if lam}
        return data


def identity_operation(F: FormalGroupLaw, caps: OperationCaps) -> DiagonalOperation:
    multipliers = {d: Fraction(1) for d in range(1, caps.degree + 1)}
    return DiagonalOperation(source=F, target=F, lead=1, multipliers=multipliers, caps=caps, label="id")


def chern_character_operation(
    source: FormalGroupLaw,
    i: int,
    caps: OperationCaps,
    target: FormalGroupLaw | None = None,
) -> DiagonalOperation:
    """ch_i: the codimension-i component of the Chern character into Chow groups."""
    target = target or additive(source.p, caps.degree)
    return DiagonalOperation(source=source, target=target, lead=i, multipliers={i: Fraction(1)}, caps=caps, label=f"ch_{i}")


def combine(terms: Iterable[tuple[Fraction, DiagonalOperation]]) -> DiagonalOperation:
    """Linear combination sum c_k op_k of operations between the same laws."""
    terms = list(terms)
    if not terms:
        raise InputError("empty combination", module="addops", operation="combine")
    first = terms[0][1]
    multipliers: dict[int, Fraction] = {}
    arity, degree = first.caps.arity, first.caps.degree
    for c, op in terms:
        if not (op.source.same_as(first.source) and op.target.same_as(first.target)):
            raise InputError("combining operations between different laws", module="addops", operation="combine")
        arity, degree = min(arity, op.caps.arity), min(degree, op.caps.degree)
        for d, lam in op.multipliers.items():
            multipliers[d] = multipliers.get(d, Fraction(0)) + Fraction(c) * lam
    multipliers = {d: lam for d, lam in multipliers.items() if lam and d <= degree}
    lead = min(multipliers, default=min(op.lead for _, op in terms))
    return DiagonalOperation(
        source=first.source,
        target=first.target,
        lead=lead,
        multipliers=multipliers,
        caps=OperationCaps(arity=arity, degree=degree),
    )


def evaluate_G(op: DiagonalOperation, l: int) -> TruncatedSeries:
    """The symbol series G_l in target variables z1..zl, up to the degree cap."""
    if l < 1 or l > op.caps.arity:
        raise CapInsufficientError("arity outside the cap", module="addops", operation="evaluate_G", witness=f"l={l}, L={op.caps.arity}")
    table = op.table
    view = {}
    for total in range(l, op.caps.degree + 1):
        for part in partitions(total, l):
            c = table.coefficient(op.multipliers, part)
            if c:
                view[part] = c
    return expand_symmetric(view, variable_names("z", l), op.caps.degree)


class IntegralityFailure(BaseModel):
    """First coefficient of a symbol series outside Z_(p)."""

    arity: int
    partition: list[int]
    coefficient: Rational
    valuation: int


class IntegralityReport(BaseModel):
    ok: bool
    checked: int
    failure: IntegralityFailure | None = None


def _first_failure(
    table: ChernCharacterTable,
    multipliers: Mapping[int, Fraction],
    caps: OperationCaps,
    residue: Residue | None = None,
) -> tuple[IntegralityFailure | None, int]:
    checked = 0
    for part in iter_partitions(1, caps.degree, caps.arity):
        checked += 1
        c = table.coefficient(multipliers, part)
        if residue:
            c += residue.get(part, 0)
        if not is_p_integral(c, table.p):
            failure = IntegralityFailure(arity=len(part), partition=list(part), coefficient=c, valuation=vp(c, table.p))
            return failure, checked
    return None, checked


def is_integral(op: DiagonalOperation) -> IntegralityReport:
    """Check every G_l coefficient, l <= L and degree <= N."""
    failure, checked = _first_failure(op.table, op.multipliers, op.caps)
    return IntegralityReport(ok=failure is None, checked=checked, failure=failure)


def default_source(p: int, n: int, cap: int) -> FormalGroupLaw:
    """K(n) with all a_i = 1."""
    return morava(MoravaSpec(p=p, n=n), cap)


def d_constant(p: int, n: int, i: int, caps: OperationCaps, spec: MoravaSpec | None = None) -> Fraction:
    """Least power p^k with p^k ch_i integral, by search over k."""
    if caps.arity < i or caps.degree < i:
        raise CapInsufficientError(
            "caps do not reach arity and degree i",
            module="addops",
            operation="d_constant",
            witness=f"i={i}, L={caps.arity}, N={caps.degree}",
        )
    source = morava(spec, caps.degree) if spec else default_source(p, n, caps.degree)
    op = chern_character_operation(source, i, caps)
    k = 0
    while True:
        report = is_integral(op.scaled(power_of(p, k)))
        if report.ok:
            return power_of(p, k)
        k += -report.failure.valuation


def d_recursion(p: int, n: int, i_max: int) -> list[Fraction]:
    """d_1 = 1 and d_i = max_j d_j d_(i-j), times p when i is a power of p^n."""
    if i_max < 1:
        raise InputError("i_max must be positive", module="addops", operation="d_recursion", witness=i_max)
    pn = p**n
    d = [Fraction(0), Fraction(1)]
    for i in range(2, i_max + 1):
        value = max(d[j] * d[i - j] for j in range(1, i))
        k = i
        while k % pn == 0:
            k //= pn
        if k == 1:
            value *= p
        d.append(value)
    return d[1:]


class StageFailure(BaseModel):
    """The constraint that made a solver stage infeasible."""

    stage: int
    codim: int
    partition: list[int]
    q: Rational
    r: Rational
    reason: str


def _options(ball: PadicBall | None, p: int, retries: int, lowest: bool = False) -> list[Fraction]:
    if ball is None:
        return [Fraction(0)]
    if lowest and ball.contains_zero(p):
        first = power_of(p, ball.radius_exponent)
    else:
        first = canonical_pick(ball, p)
    options = [first]
    for value in ball_alternatives(ball, p, retries):
        if value not in options:
            options.append(value)
    return options


@time_logger
def solve_diagonal(
    source: FormalGroupLaw,
    target: FormalGroupLaw,
    lead: int,
    caps: OperationCaps,
    mode: Literal["generator", "tower"] = "generator",
    residue: Residue | None = None,
    e_max: int | None = None,
    retries: int | None = None,
    label: str = "",
) -> DiagonalOperation:
    """Triangular integrality completion of an operation with lead ``lead``.

    Stage s fixes lambda_s at codimension D_s = lead + s (p^n - 1) from the
    coefficients of total degree in [D_s, D_(s+1)): each one reads
    q lambda_s + r with r known, giving the ball lambda_s in B(-r/q, -vp(q)).
    In generator mode lambda_0 = p^e with e increased until the search
    succeeds; in tower mode lambda_0 is the lowest-valuation element of its
    ball and ``residue`` adds a fixed inhomogeneous term.
    """
    p = source.p
    period = source.period
    if period is None:
        raise InputError("source must be a Morava law", module="addops", operation="solve_diagonal", witness=source.label)
    if lead < 1:
        raise InputError("lead must be positive", module="addops", operation="solve_diagonal", witness=lead)
    if lead > caps.degree:
        raise CapInsufficientError("lead above the degree cap", module="addops", operation="solve_diagonal", witness=f"{lead} > {caps.degree}")
    table = character_table(source, target, caps.degree)
    residue = residue or {}
    retries = config.FGLAB_SOLVER_RETRIES if retries is None else retries
    e_max = config.FGLAB_MAX_LEADING_VALUATION if e_max is None else e_max

    codims = list(range(lead, caps.degree + 1, period))
    groups = []
    for s, d in enumerate(codims):
        lo = 1 if s == 0 else d
        hi = codims[s + 1] - 1 if s + 1 < len(codims) else caps.degree
        groups.append(list(iter_partitions(lo, hi, caps.arity)))
    failures: list[StageFailure] = []

    def constrain(s: int, chosen: list[Fraction]) -> tuple[PadicBall | None, StageFailure | None]:
        d = codims[s]
        ball = None
        for part in groups[s]:
            symbols = table.symbols(part)
            q = symbols.get(d, Fraction(0))
            r = Fraction(residue.get(part, 0))
            for t in range(s):
                r += chosen[t] * symbols.get(codims[t], 0)
            if not q:
                if not is_p_integral(r, p):
                    return None, StageFailure(stage=s, codim=d, partition=list(part), q=q, r=r, reason="coefficient outside Z_(p) for every lambda")
                continue
            constraint = PadicBall(center=-r / q, radius_exponent=-vp(q, p))
            ball = constraint if ball is None else ball_intersect([ball, constraint], p)
            if ball is None:
                return None, StageFailure(stage=s, codim=d, partition=list(part), q=q, r=r, reason="empty ball intersection")
        return ball, None

    budget = [0]

    def extend(s: int, chosen: list[Fraction]) -> list[Fraction] | None:
        if s == len(codims):
            return chosen
        ball, failure = constrain(s, chosen)
        if failure is not None:
            failures.append(failure)
            return None
        for index, value in enumerate(_options(ball, p, retries)):
            if index:
                if budget[0] <= 0:
                    break
                budget[0] -= 1
            found = extend(s + 1, chosen + [value])
            if found is not None:
                return found
        return None

    ball0, failure0 = constrain(0, [])
    if failure0 is not None:
        raise SolverError("stage 0 is infeasible", module="addops", operation="solve_diagonal", witness=failure0.model_dump(mode="json"))

    solution = None
    valuation = None
    if mode == "generator":
        if ball0 is None:
            e_start = 0
        elif ball0.contains_zero(p):
            e_start = ball0.radius_exponent
        else:
            e_start = vp(ball0.center, p)
        for e in range(e_start, e_max + 1):
            lam0 = power_of(p, e)
            if ball0 is not None and not ball0.contains(lam0, p):
                continue
            budget[0] = retries * len(codims)
            solution = extend(1, [lam0])
            if solution is not None:
                valuation = e
                break
    else:
        budget[0] = retries * len(codims)
        for index, lam0 in enumerate(_options(ball0, p, retries, lowest=True)):
            if index:
                if budget[0] <= 0:
                    break
                budget[0] -= 1
            solution = extend(1, [lam0])
            if solution is not None:
                valuation = None if lam0 == 0 else int(vp(lam0, p))
                break

    if solution is None:
        witness = failures[-1].model_dump(mode="json") if failures else None
        raise SolverError(
            f"no integral completion of lead {lead} up to e={e_max}" if mode == "generator" else f"no integral completion of lead {lead}",
            module="addops",
            operation="solve_diagonal",
            witness=witness,
        )

    multipliers = {d: lam for d, lam in zip(codims, solution) if lam}
    op = DiagonalOperation(
        source=source,
        target=target,
        lead=lead,
        multipliers=multipliers,
        caps=caps,
        leading_valuation=valuation,
        label=label or f"phi_{lead}",
    )
    failure, _ = _first_failure(table, multipliers, caps, residue)
    if failure is not None:
        raise InternalConsistencyError(
            "solved operation fails integrality",
            module="addops",
            operation="solve_diagonal",
            witness=failure.model_dump(mode="json"),
        )
    logger.info(f"solved {op.label} {source.label} -> {target.label}: e={valuation}, caps={caps.arity}/{caps.degree}")
    return op


def solve_generator(
    source: FormalGroupLaw,
    target: FormalGroupLaw,
    lead: int,
    caps: OperationCaps,
    e_max: int | None = None,
) -> DiagonalOperation:
    """Integral operation with lambda_0 = p^e, e minimal for the search."""
    return solve_diagonal(source, target, lead, caps, mode="generator", e_max=e_max)


def solve_basis(
    source: FormalGroupLaw,
    target: FormalGroupLaw,
    caps: OperationCaps,
    leads: Iterable[int] | None = None,
) -> list[DiagonalOperation]:
    """Generators for every lead 1..N (or the given leads)."""
    leads = list(leads or range(1, caps.degree + 1))
    return [solve_generator(source, target, i, caps) for i in progress(leads, desc="generators")]


def valuation_verdict(valuations: list[int | None]) -> str:
    """diverging (strictly increasing), bounded (constant) or inconclusive."""
    if not valuations or any(v is None for v in valuations):
        return "inconclusive"
    if all(a < b for a, b in zip(valuations, valuations[1:])):
        return "diverging"
    if len(set(valuations)) == 1:
        return "bounded"
    return "inconclusive"


def required_leading_valuation(
    source: FormalGroupLaw,
    target: FormalGroupLaw,
    lead: int,
    cap_schedule: Iterable[int],
) -> list[int | None]:
    """Minimal leading valuation at each cap; None where the search gave up."""
    valuations: list[int | None] = []
    for cap in cap_schedule:
        caps = OperationCaps(arity=cap, degree=cap)
        e_max = max(config.FGLAB_MAX_LEADING_VALUATION, 2 * cap)
        try:
            op = solve_generator(source.truncate(cap), target.truncate(cap), lead, caps, e_max=e_max)
            valuations.append(op.leading_valuation)
        except SolverError as err:
            logger.warning(f"search at cap {cap} gave up: {err}")
            valuations.append(None)
    return valuations


def compose(op2: DiagonalOperation, op1: DiagonalOperation) -> DiagonalOperation:
    """op2 after op1: Chern-character multipliers multiply."""
    if not op1.target.same_as(op2.source):
        raise InputError("target of op1 differs from source of op2", module="addops", operation="compose", witness=f"{op1.target.label} vs {op2.source.label}")
    caps = OperationCaps(arity=min(op1.caps.arity, op2.caps.arity), degree=min(op1.caps.degree, op2.caps.degree))
    multipliers = {
        d: lam * op2.multipliers[d]
        for d, lam in op1.multipliers.items()
        if d in op2.multipliers and d <= caps.degree
    }
    lead = min(multipliers, default=max(op1.lead, op2.lead))
    return DiagonalOperation(
        source=op1.source,
        target=op2.target,
        lead=lead,
        multipliers=multipliers,
        caps=caps,
        label=f"{op2.label}o{op1.label}",
    )


def expand_in_basis(op: DiagonalOperation, basis: list[DiagonalOperation]) -> dict[int, Fraction]:
    """Coefficients b_k with op = sum_k b_k basis_k, by triangular solve over the codimensions."""
    leads = [b.lead for b in basis]
    if any(a >= b for a, b in zip(leads, leads[1:])):
        raise InputError("basis leads must increase strictly", module="addops", operation="expand_in_basis", witness=leads)
    by_lead = {}
    for b in basis:
        if not b.lead_coefficient:
            raise InputError("singular basis", module="addops", operation="expand_in_basis", witness=f"lead {b.lead}")
        by_lead[b.lead] = b
    degree = min([op.caps.degree] + [b.caps.degree for b in basis])
    coefficients: dict[int, Fraction] = {}
    for d in range(1, degree + 1):
        residual = op.multipliers.get(d, Fraction(0))
        for k, c in coefficients.items():
            residual -= c * by_lead[k].multipliers.get(d, 0)
        if not residual:
            continue
        if d not in by_lead:
            raise InputError("operation outside the span of the basis", module="addops", operation="expand_in_basis", witness=f"codim {d}")
        coefficients[d] = residual / by_lead[d].lead_coefficient
    return coefficients


class Combination(BaseModel):
    """A formal sum sum_i a_i phi_i over a solved basis."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coefficients: dict[int, Rational]
    basis: list[DiagonalOperation]

    def to_operation(self) -> DiagonalOperation:
        by_lead = {b.lead: b for b in self.basis}
        missing = [i for i, a in self.coefficients.items() if a and i not in by_lead]
        if missing:
            raise InputError("coefficient without a basis element", module="addops", operation="Combination", witness=missing)
        terms = [(a, by_lead[i]) for i, a in sorted(self.coefficients.items()) if a]
        return combine(terms)

    def to_json(self) -> dict:
        return {str(i): format_rational(a) for i, a in sorted(self.coefficients.items()) if a}


class InversionResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    invertible: bool
    failure_index: int | None = None
    reason: str = ""
    inverse: Combination | None = None

    def to_json(self) -> dict:
        return {
            "invertible": self.invertible,
            "failure_index": self.failure_index,
            "reason": self.reason,
            "inverse": self.inverse.to_json() if self.inverse else None,
        }


def _unit_criterion(combination: Combination) -> InversionResult | None:
    first = combination.basis[0].source
    for i in range(1, first.p**first.n):
        a_i = combination.coefficients.get(i, Fraction(0))
        if not is_p_unit(a_i, first.p):
            return InversionResult(invertible=False, failure_index=i, reason=f"a_{i} = {format_rational(a_i)} is not a p-unit")
    return None


def invert(combination: Combination) -> InversionResult:
    """Two-sided inverse of sum a_i phi_i, or the first non-unit a_i with i < p^n."""
    failed = _unit_criterion(combination)
    if failed is not None:
        return failed
    op = combination.to_operation()
    inverse = {}
    for d in range(1, op.caps.degree + 1):
        mu = op.multipliers.get(d, Fraction(0))
        if not mu:
            return InversionResult(invertible=False, failure_index=d, reason=f"multiplier at codim {d} vanishes")
        inverse[d] = 1 / mu
    inverse_op = DiagonalOperation(source=op.target, target=op.source, lead=1, multipliers=inverse, caps=op.caps, label="inverse")
    coefficients = expand_in_basis(inverse_op, combination.basis)
    report = is_integral(inverse_op)
    if not report.ok:
        raise ClaimMismatchError(
            "unit criterion holds but the inverse is not integral",
            module="addops",
            operation="invert",
            witness=report.failure.model_dump(mode="json"),
        )
    fractional = [i for i, c in coefficients.items() if not is_p_integral(c, op.p)]
    if fractional:
        # the basis leads may not be minimal at these caps
        logger.warning(f"inverse has fractional basis coefficients at {fractional}")
    product = compose(inverse_op, op)
    if any(product.multipliers.get(d) != 1 for d in range(1, op.caps.degree + 1)):
        raise InternalConsistencyError("inverse does not compose to the identity", module="addops", operation="invert")
    return InversionResult(invertible=True, inverse=Combination(coefficients=coefficients, basis=combination.basis))


def inverse_by_induction(combination: Combination) -> InversionResult:
    """Rebuild the inverse codimension by codimension.

    Starts from sum_(i<p^n) phi_i / (a_i eta_i^2) and corrects the first
    surviving codimension k by (id + x phi_k) with x = -alpha_k / (1 + alpha_k beta_k).
    The result must agree with ``invert``.
    """
    failed = _unit_criterion(combination)
    if failed is not None:
        return failed
    basis = combination.basis
    by_lead = {b.lead: b for b in basis}
    phi = combination.to_operation()
    F = phi.source
    pn = F.p**F.n
    identity = identity_operation(F, phi.caps)
    base_terms = []
    for i in range(1, min(pn, phi.caps.degree + 1)):
        eta = by_lead[i].lead_coefficient
        base_terms.append((1 / (combination.coefficients[i] * eta**2), by_lead[i]))
    psi = combine(base_terms)
    for k in range(pn, phi.caps.degree + 1):
        alphas = expand_in_basis(combine([(1, compose(psi, phi)), (-1, identity)]), basis)
        early = [i for i, a in alphas.items() if i < k and a]
        if early:
            raise InternalConsistencyError("correction left a lower codimension", module="addops", operation="inverse_by_induction", witness=early)
        alpha = alphas.get(k, Fraction(0))
        if not alpha:
            continue
        beta = expand_in_basis(compose(by_lead[k], by_lead[k]), basis).get(k, Fraction(0))
        if 1 + alpha * beta == 0:
            raise InternalConsistencyError("degenerate correction", module="addops", operation="inverse_by_induction", witness=k)
        x = -alpha / (1 + alpha * beta)
        logger.debug(f"inverse step k={k}: alpha={alpha}, beta={beta}, x={x}")
        psi = compose(combine([(1, identity), (x, by_lead[k])]), psi)
    direct = invert(combination)
    coefficients = expand_in_basis(psi, basis)
    if direct.inverse is None or coefficients != direct.inverse.coefficients:
        raise InternalConsistencyError("inductive and direct inverses differ", module="addops", operation="inverse_by_induction")
    return InversionResult(invertible=True, inverse=Combination(coefficients=coefficients, basis=basis))


class CrossIsoReport(BaseModel):
    """Sum of generators K1 -> K2 below p^n and the unit test on both composites."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    forward: DiagonalOperation
    backward: DiagonalOperation
    left: dict[int, Rational]
    right: dict[int, Rational]
    invertible: bool
    failure: str = ""

    def to_json(self) -> dict:
        return {
            "forward": self.forward.to_json(),
            "backward": self.backward.to_json(),
            "left": {str(i): format_rational(c) for i, c in sorted(self.left.items())},
            "right": {str(i): format_rational(c) for i, c in sorted(self.right.items())},
            "invertible": self.invertible,
            "failure": self.failure,
        }


def cross_iso(spec1: MoravaSpec, spec2: MoravaSpec, caps: OperationCaps) -> CrossIsoReport:
    """phi = sum_(i<p^n) phi_i from K1 to K2, certified through both composites."""
    if (spec1.p, spec1.n) != (spec2.p, spec2.n):
        raise InputError("Morava laws of different type", module="addops", operation="cross_iso", witness=f"{spec1.p},{spec1.n} vs {spec2.p},{spec2.n}")
    K1 = morava(spec1, caps.degree)
    K2 = morava(spec2, caps.degree)
    K1.label, K2.label = "K1", "K2"
    leads = range(1, min(spec1.p**spec1.n, caps.degree + 1))
    forward = combine((1, solve_generator(K1, K2, i, caps)) for i in leads)
    backward = combine((1, solve_generator(K2, K1, i, caps)) for i in leads)
    sides = {}
    failure = ""
    for side, composite, law in (("left", compose(backward, forward), K1), ("right", compose(forward, backward), K2)):
        coefficients = expand_in_basis(composite, solve_basis(law, law, caps))
        sides[side] = coefficients
        for i in leads:
            if not failure and not is_p_unit(coefficients.get(i, 0), spec1.p):
                failure = f"{side} composite: a_{i} is not a p-unit"
    report = CrossIsoReport(forward=forward, backward=backward, left=sides["left"], right=sides["right"], invertible=not failure, failure=failure)
    logger.info(f"cross_iso p={spec1.p} n={spec1.n}: invertible={report.invertible}")
    return report


def apply_to_class(op: DiagonalOperation, S: TruncatedSeries) -> TruncatedSeries:
    """Image of the source class S(z_1..z_l) on a product of projective spaces."""
    degree = min(op.caps.degree, S.cap)
    names = S.variables
    w_names = tuple(f"w{j}" for j in range(1, len(names) + 1))
    exp_source = op.source.exp.truncate(degree)
    into_w = {name: exp_source.embed(w_names, rename={"x": w}) for name, w in zip(names, w_names)}
    chow = substitute(S.truncate(degree), into_w)
    scaled = {e: c * op.multipliers.get(sum(e), 0) for e, c in chow.terms.items()}
    chow = TruncatedSeries(w_names, chow.cap, scaled)
    log_target = op.target.log.truncate(degree)
    back = {w: log_target.embed(names, rename={"x": name}) for name, w in zip(names, w_names)}
    return substitute(chow, back)


def veronese_defect(op: DiagonalOperation, l: int, m: int, positions: Iterable[int] = (0,)) -> TruncatedSeries:
    """G_l with z_j -> [m] z_j minus the image of the pulled-back class; zero when compatible."""
    positions = set(positions)
    names = variable_names("z", l)
    degree = op.caps.degree
    G = evaluate_G(op, l)
    target_m = m_series(op.target.truncate(degree), m)
    left = substitute(G, {names[j]: target_m.embed(names, rename={"x": names[j]}) for j in positions})
    source_m = m_series(op.source.truncate(degree), m)
    S = TruncatedSeries.constant(1, names, degree)
    for j, name in enumerate(names):
        factor = source_m.embed(names, rename={"x": name}) if j in positions else TruncatedSeries.variable(name, names, degree)
        S = S * factor
    return left - apply_to_class(op, S)


class VeroneseRow(BaseModel):
    arity: int
    coefficient: Literal["alpha", "beta"]
    lhs: Rational
    rhs: Rational
    ok: bool


class VeroneseReport(BaseModel):
    rows: list[VeroneseRow]

    @computed_field
    @property
    def ok(self) -> bool:
        return all(row.ok for row in self.rows)


def veronese_coefficients(op: DiagonalOperation, l: int) -> dict[str, Fraction | None]:
    """alpha, beta, delta: G_l coefficients at (1^l), (p^n, 1^(l-1)), (p^n, p^n, 1^(l-2))."""
    pn = op.p**op.source.n
    patterns = {
        "alpha": (1,) * l,
        "beta": (pn,) + (1,) * (l - 1),
        "delta": (pn, pn) + (1,) * (l - 2) if l >= 2 else None,
    }
    values: dict[str, Fraction | None] = {}
    for name, part in patterns.items():
        if part is None or len(part) > op.caps.arity or sum(part) > op.caps.degree:
            values[name] = None
        else:
            values[name] = op.table.coefficient(op.multipliers, part)
    return values


def veronese_recursion(op: DiagonalOperation, v: Fraction) -> VeroneseReport:
    """Check alpha_(l+P) = alpha_l + c beta_l and beta_(l+P) = beta_l + c delta_l,
    c = (p^(p^n) - p) / v, for a self-operation of K(n).
    """
    if not op.source.same_as(op.target):
        raise InputError("recursion holds for self-operations", module="addops", operation="veronese_recursion")
    if not v:
        raise InputError("v must be nonzero", module="addops", operation="veronese_recursion")
    p, period = op.p, op.period
    factor = Fraction(p ** (p**op.source.n) - p) / v
    rows: list[VeroneseRow] = []
    l = (op.lead - 1) % period + 1
    while l + period <= op.caps.arity:
        here = veronese_coefficients(op, l)
        there = veronese_coefficients(op, l + period)
        if there["alpha"] is not None and here["beta"] is not None:
            rhs = here["alpha"] + factor * here["beta"]
            rows.append(VeroneseRow(arity=l + period, coefficient="alpha", lhs=there["alpha"], rhs=rhs, ok=there["alpha"] == rhs))
        if l >= 2 and there["beta"] is not None and here["delta"] is not None:
            rhs = here["beta"] + factor * here["delta"]
            rows.append(VeroneseRow(arity=l + period, coefficient="beta", lhs=there["beta"], rhs=rhs, ok=there["beta"] == rhs))
        l += period
    if not rows:
        raise CapInsufficientError("caps too small for any recursion step", module="addops", operation="veronese_recursion", witness=f"L={op.caps.arity}, N={op.caps.degree}")
    return VeroneseReport(rows=rows)
