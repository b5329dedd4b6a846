"""Chern classes from a Morava K-theory to a p^n-typical theory.

The tower c_1, c_2, ... is built index by index. With c_tot = sum_i c_i t^i,
the source logarithm log(c_tot) = sum_i theta_i t^i has additive
coefficients theta_i, so c_i = theta_i + P_i with P_i fixed by the classes
below i. Each theta_i is solved by the integrality solver with P_i folded in
as a residue.
"""
from fractions import Fraction
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field
from sympy import is_primitive_root, primitive_root

from .addops import (
    DiagonalOperation,
    OperationCaps,
    VeroneseReport,
    d_constant,
    d_recursion,
    evaluate_G,
    solve_diagonal,
    veronese_recursion,
)
from .arith import Rational, format_rational, is_p_integral, is_p_unit, require_prime, vp
from .errors import CapInsufficientError, ClaimMismatchError, ConstantUnavailableError, InputError, InternalConsistencyError, SolverError
from .fgl import FormalGroupLaw, m_series, v_n
from .logger import get_logger
from .series import TruncatedSeries, compose_univariate, substitute, variable_names
from .utils import progress, time_logger

logger = get_logger(__file__)

TPoly = list[TruncatedSeries]


class TowerCaps(BaseModel):
    """Largest Chern index I, arity cap L and degree cap N."""

    max_index: int = Field(ge=1)
    arity: int = Field(ge=1)
    degree: int = Field(ge=1)

    def operation_caps(self) -> OperationCaps:
        return OperationCaps(arity=self.arity, degree=self.degree)


def _tmul(a: TPoly, b: TPoly, top: int) -> TPoly:
    """Product of t-polynomials with series coefficients, cut above t^top."""
    zero = a[0] * 0
    out = [zero] * (top + 1)
    for i, ai in enumerate(a[: top + 1]):
        if not ai:
            continue
        for j, bj in enumerate(b[: top + 1 - i]):
            if bj:
                out[i + j] = out[i + j] + ai * bj
    return out


def _tpow(a: TPoly, k: int, top: int) -> TPoly:
    result = [a[0] * 0 + 1] + [a[0] * 0] * top
    for _ in range(k):
        result = _tmul(result, a, top)
    return result


def _partition_view(series: TruncatedSeries) -> dict[tuple[int, ...], Fraction]:
    return {tuple(sorted(exp, reverse=True)): c for exp, c in series.terms.items()}


class ChernTower(BaseModel):
    """Chern classes c_i on products of projective spaces, with their additive parts."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    source: FormalGroupLaw
    target: FormalGroupLaw
    caps: TowerCaps
    thetas: dict[int, DiagonalOperation] = Field(default_factory=dict)
    classes: dict[int, dict[int, TruncatedSeries]] = Field(default_factory=dict)
    residues: dict[int, dict[int, TruncatedSeries]] = Field(default_factory=dict)
    mu: dict[int, int] = Field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def period(self) -> int:
        return self.source.period

    @property
    def max_index(self) -> int:
        return max(self.thetas, default=0)

    def total_class(self, l: int) -> TPoly:
        """c_tot on z_1...z_l as a t-polynomial, constant term zero."""
        names = variable_names("z", l)
        zero = TruncatedSeries.zero(names, self.caps.degree)
        return [zero] + [self.classes[i][l] for i in range(1, self.max_index + 1)]

    def generator_valuation(self, i: int) -> int:
        """vp of the theta_i lead plus the measured mu_i."""
        return int(vp(self.thetas[i].lead_coefficient, self.p)) + self.mu[i]

    def leading_constant(self, i: int, codim: int) -> Fraction:
        """Coefficient of z_1...z_codim in c_i(z_1...z_codim)."""
        if i not in self.classes:
            raise CapInsufficientError("index above the tower", module="chern", operation="leading_constant", witness=f"i={i}")
        if codim > self.caps.arity or codim > self.caps.degree:
            raise CapInsufficientError("codim above the caps", module="chern", operation="leading_constant", witness=f"codim={codim}")
        return self.classes[i][codim].coefficient((1,) * codim)

    def to_json(self) -> dict:
        return {
            "source": self.source.label,
            "target": self.target.label,
            "caps": self.caps.model_dump(),
            "thetas": {str(i): theta.to_json() for i, theta in sorted(self.thetas.items())},
            "mu": {str(i): m for i, m in sorted(self.mu.items())},
        }


@time_logger
def build_tower(source: FormalGroupLaw, target: FormalGroupLaw, caps: TowerCaps) -> ChernTower:
    """Solve theta_1..theta_I so that every c_i = theta_i + P_i is integral."""
    if source.period is None:
        raise InputError("source must be a Morava law", module="chern", operation="build_tower", witness=source.label)
    log = source.log.univariate_coefficients()
    op_caps = caps.operation_caps()
    tower = ChernTower(source=source, target=target, caps=caps)
    for i in progress(range(1, caps.max_index + 1), desc="tower"):
        residues: dict[int, TruncatedSeries] = {}
        residue_view: dict[tuple[int, ...], Fraction] = {}
        for l in range(1, caps.arity + 1):
            names = variable_names("z", l)
            zero = TruncatedSeries.zero(names, caps.degree)
            lower = [zero] + [tower.classes[j][l] for j in range(1, i)] + [zero]
            P = zero
            for k, l_k in sorted(log.items()):
                if k < 2 or k > i:
                    continue
                P = P - _tpow(lower, k, i)[i].scale(l_k)
            residues[l] = P
            residue_view.update(_partition_view(P))
        try:
            theta = solve_diagonal(source, target, i, op_caps, mode="tower", residue=residue_view, label=f"theta_{i}")
        except SolverError as err:
            raise SolverError(f"tower stops at index {i}: {err.message}", module="chern", operation="build_tower", witness=err.witness) from err
        tower.thetas[i] = theta
        tower.residues[i] = residues
        tower.classes[i] = {l: evaluate_G(theta, l) + residues[l] for l in range(1, caps.arity + 1)}
        lowest = min((vp(c, source.p) for P in residues.values() for c in P.terms.values()), default=0)
        tower.mu[i] = int(max(0, -lowest))
        logger.info(f"c_{i}: lead {format_rational(theta.lead_coefficient)}, mu={tower.mu[i]}")
    return tower


class TowerViolation(BaseModel):
    index: int
    arity: int
    kind: Literal["integrality", "degree", "grading"]
    detail: str


def check_tower_invariants(tower: ChernTower) -> list[TowerViolation]:
    """Integrality, min degree >= i and grading support l = i mod p^n - 1 for every c_i(l)."""
    violations = []
    for i, by_arity in sorted(tower.classes.items()):
        for l, series in sorted(by_arity.items()):
            bad = [c for c in series.terms.values() if not is_p_integral(c, tower.p)]
            if bad:
                violations.append(TowerViolation(index=i, arity=l, kind="integrality", detail=format_rational(bad[0])))
            low = series.min_degree()
            if low is not None and low < i:
                violations.append(TowerViolation(index=i, arity=l, kind="degree", detail=f"min degree {low}"))
            if series and (l - i) % tower.period:
                violations.append(TowerViolation(index=i, arity=l, kind="grading", detail="nonzero off the grading"))
    return violations


def _tlog_sum(tower: ChernTower, names: tuple[str, ...], arities: list[tuple[int, int]]) -> TPoly:
    """sum_i (theta_i(u) + theta_i(v)) t^i for classes on disjoint variable blocks."""
    top = tower.max_index
    out = [TruncatedSeries.zero(names, tower.caps.degree) for _ in range(top + 1)]
    for offset, width in arities:
        block = names[offset: offset + width]
        for i in range(1, top + 1):
            G = evaluate_G(tower.thetas[i], width)
            out[i] = out[i] + G.embed(names, rename=dict(zip(G.variables, block)))
    return out


def verify_cartan(tower: ChernTower, a: int, b: int) -> bool:
    """F(c_tot(u), c_tot(v)) = c_tot(u + v) for u = z_1..z_a and v = z_(a+1)..z_(a+b)."""
    if a + b > tower.caps.degree:
        raise CapInsufficientError("a + b above the degree cap", module="chern", operation="verify_cartan", witness=f"{a}+{b}")
    if max(a, b) > tower.caps.arity:
        raise CapInsufficientError("block above the arity cap", module="chern", operation="verify_cartan", witness=f"{a}, {b}")
    top = tower.max_index
    names = variable_names("z", a + b)
    blocks = []
    for offset, width in ((0, a), (a, b)):
        block = names[offset: offset + width]
        blocks.append([
            c.embed(names, rename=dict(zip(c.variables, block)))
            for c in tower.total_class(width)
        ])
    law = tower.source.truncate(top).law
    zero = TruncatedSeries.zero(names, tower.caps.degree)
    left = [zero] * (top + 1)
    powers_u = [_tpow(blocks[0], k, top) for k in range(top + 1)]
    powers_v = [_tpow(blocks[1], k, top) for k in range(top + 1)]
    for (i, j), c in sorted(law.terms.items()):
        term = _tmul(powers_u[i], powers_v[j], top)
        left = [x + y.scale(c) for x, y in zip(left, term)]
    exponent = _tlog_sum(tower, names, [(0, a), (a, b)])
    right = [zero] * (top + 1)
    for k, e_k in sorted(tower.source.exp.univariate_coefficients().items()):
        if k > top:
            break
        term = _tpow(exponent, k, top)
        right = [x + y.scale(e_k) for x, y in zip(right, term)]
    ok = all(x == y for x, y in zip(left[1:], right[1:]))
    if not ok:
        logger.warning(f"Cartan identity fails on blocks {a}, {b}")
    return ok


def constant_a(tower: ChernTower, i: int) -> Fraction:
    """Coefficient of z_1...z_i in c_i(z_1...z_i): nonzero, and a unit for i <= p^n."""
    value = tower.leading_constant(i, i)
    if not value:
        raise ClaimMismatchError("a_i vanishes", module="chern", operation="constant_a", witness=f"i={i}")
    if i <= tower.p**tower.source.n and not is_p_unit(value, tower.p):
        raise ClaimMismatchError("a_i is not a unit", module="chern", operation="constant_a", witness=f"a_{i}={format_rational(value)}")
    return value


def constant_e(tower: ChernTower, j: int) -> Fraction:
    """Coefficient of z_1...z_l in c_(p^n)(z_1...z_l), l = 1 + j(p^n - 1); always a unit."""
    pn = tower.p**tower.source.n
    if pn not in tower.classes:
        raise CapInsufficientError("tower does not reach p^n", module="chern", operation="constant_e", witness=f"I={tower.max_index}")
    value = tower.leading_constant(pn, 1 + j * tower.period)
    if not is_p_unit(value, tower.p):
        raise ClaimMismatchError("e_j is not a unit", module="chern", operation="constant_e", witness=f"e_{j}={format_rational(value)}")
    return value


def lemma_recursion_report(tower: ChernTower) -> VeroneseReport:
    """alpha/beta recursion along [p] for theta_(p^n) of a self tower."""
    pn = tower.p**tower.source.n
    if pn not in tower.thetas:
        raise CapInsufficientError("tower does not reach p^n", module="chern", operation="lemma_recursion_report")
    return veronese_recursion(tower.thetas[pn], v_n(tower.source, tower.source.n))


class AdamsOperation(BaseModel):
    """Multiplicative operation z -> [k](z) of a law."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    law: FormalGroupLaw
    k: int
    series: TruncatedSeries

    def apply(self, S: TruncatedSeries) -> TruncatedSeries:
        """Psi_k of a class given as a series in projective-space variables."""
        assignment = {name: self.series.embed(S.variables, rename={"x": name}) for name in S.variables}
        return substitute(S, assignment)

    def diagonal(self, d_max: int) -> dict[int, Fraction]:
        """Chern-character multipliers, after checking [k](exp(w)) = exp(k w)."""
        F = self.law
        if d_max > F.cap:
            raise CapInsufficientError("d_max above the law cap", module="chern", operation="adams.diagonal", witness=d_max)
        lhs = compose_univariate(self.series, F.exp)
        rhs = F.exp_of(TruncatedSeries.univariate({1: self.k}, "x", F.cap))
        if lhs != rhs:
            raise InternalConsistencyError("[k](exp w) differs from exp(k w)", module="chern", operation="adams.diagonal", witness=self.k)
        return {d: Fraction(self.k) ** d for d in range(1, d_max + 1)}


def adams(F: FormalGroupLaw, k: int) -> AdamsOperation:
    return AdamsOperation(law=F, k=k, series=m_series(F, k))


def default_adams_k(p: int) -> int:
    """Smallest primitive root mod p^2 for odd p, and 3 for p = 2."""
    require_prime(p, "default_adams_k")
    return 3 if p == 2 else int(primitive_root(p**2))


def _valid_k(p: int, k: int) -> bool:
    if p == 2:
        return k % 4 == 3
    return k % p != 0 and bool(is_primitive_root(k, p**2))


def expected_t(p: int, j: int) -> int:
    """Predicted valuation of h_j, j >= 2."""
    if p != 2:
        return int(vp(j - 1, p)) + 1
    if (j - 1) % 2 == 0:
        return int(vp(j - 1, 2)) + 2
    return 1


class ConstantRecord(BaseModel):
    """One extracted constant with its closed-form cross-check."""

    name: str
    index: int
    value: Rational
    expected: Rational | None = None
    predicted_vp: int | None = None


def _scaled_constants(tower: ChernTower, k: int, j_max: int, name: str) -> list[ConstantRecord]:
    p, period = tower.p, tower.period
    pn = p**tower.source.n
    psi = adams(tower.source, k)
    records = []
    for j in range(2, j_max + 1):
        l = 1 + j * period
        e_j = constant_e(tower, j)
        c = tower.classes[pn][l].truncate(l)
        chi = psi.apply(c) - c.scale(Fraction(k) ** pn)
        value = chi.coefficient((1,) * l)
        expected = e_j * Fraction(k) ** pn * (Fraction(k) ** ((j - 1) * period) - 1)
        if value != expected:
            raise InternalConsistencyError(
                f"{name}_{j} differs from e_j k^(p^n) (k^((j-1)(p^n-1)) - 1)",
                module="chern",
                operation=f"{name}_constants",
                witness=f"{format_rational(value)} vs {format_rational(expected)}",
            )
        records.append(ConstantRecord(name=name, index=j, value=value, expected=expected))
    return records


def chi_constants(tower: ChernTower, k: int | None = None, j_max: int = 3) -> list[ConstantRecord]:
    """h_j: coefficient of z_1...z_l in (Psi_k - k^(p^n) id)(c_(p^n)), l = 1 + j(p^n - 1)."""
    k = default_adams_k(tower.p) if k is None else k
    records = _scaled_constants(tower, k, j_max, "h")
    if _valid_k(tower.p, k):
        for record in records:
            record.predicted_vp = expected_t(tower.p, record.index)
            if vp(record.value, tower.p) != record.predicted_vp:
                raise ClaimMismatchError(
                    "vp(h_j) differs from t_j",
                    module="chern",
                    operation="chi_constants",
                    witness=f"j={record.index}, vp={vp(record.value, tower.p)}, t={record.predicted_vp}",
                )
    return records


def f_constants(tower: ChernTower, j_max: int = 3) -> list[ConstantRecord]:
    """f_j: the chi constants for k = p, of valuation exactly p^n."""
    pn = tower.p**tower.source.n
    records = _scaled_constants(tower, tower.p, j_max, "f")
    for record in records:
        record.predicted_vp = pn
        if vp(record.value, tower.p) != pn:
            raise ClaimMismatchError("vp(f_j) differs from p^n", module="chern", operation="f_constants", witness=f"j={record.index}")
    return records


class MuBRow(BaseModel):
    index: int
    d_constant: Rational | None = None
    d_recursion: Rational
    mu: int
    b: Rational


def closed_mu(p: int, n: int, i: int) -> int:
    """k for i = p^(nk) v with p^n not dividing v."""
    pn = p**n
    k = 0
    while i % pn == 0:
        i //= pn
        k += 1
    return k


@time_logger
def mu_and_b(
    p: int,
    n: int,
    i_max: int,
    chow_tower: ChernTower | None = None,
    caps: OperationCaps | None = None,
) -> list[MuBRow]:
    """mu_i and b_i = d_i / p^mu_i, cross-checked against d_constant and a Chow tower when given."""
    require_prime(p, "mu_and_b")
    d = d_recursion(p, n, i_max)
    rows = []
    for i in range(1, i_max + 1):
        mu = closed_mu(p, n, i)
        b = d[i - 1] / Fraction(p) ** mu
        direct = None
        if caps is not None:
            direct = d_constant(p, n, i, caps)
            if direct != d[i - 1]:
                raise ClaimMismatchError(
                    "d_constant differs from the recursion",
                    module="chern",
                    operation="mu_and_b",
                    witness=f"i={i}: {format_rational(direct)} vs {format_rational(d[i - 1])}",
                )
        if chow_tower is not None and i in chow_tower.thetas:
            measured = Fraction(p) ** int(vp(chow_tower.thetas[i].lead_coefficient, p))
            if measured != b or chow_tower.mu[i] != mu:
                raise ClaimMismatchError(
                    "Chow tower disagrees with b_i or mu_i",
                    module="chern",
                    operation="mu_and_b",
                    witness=f"i={i}: b={format_rational(b)} vs {format_rational(measured)}, mu={mu} vs {chow_tower.mu[i]}",
                )
        rows.append(MuBRow(index=i, d_constant=direct, d_recursion=d[i - 1], mu=mu, b=b))
    return rows


class ConstantEntry(BaseModel):
    """A leading constant usable by the gamma engine, keyed "op@codim"."""

    key: str
    name: str
    index: int
    value: Rational
    provenance: str
    caps: str = ""


class ConstantsTable(BaseModel):
    """Named constants with provenance, looked up by operation and codimension."""

    p: int
    n: int
    entries: list[ConstantEntry] = Field(default_factory=list)

    def add(self, entry: ConstantEntry) -> None:
        self.entries = [e for e in self.entries if e.key != entry.key] + [entry]

    def lookup(self, op: str, codim: int) -> Fraction:
        key = f"{op}@{codim}"
        for entry in self.entries:
            if entry.key == key:
                return entry.value
        raise ConstantUnavailableError("no leading constant", module="chern", operation="ConstantsTable.lookup", witness=key)

    @classmethod
    def closed_form(cls, p: int, n: int, j_max: int = 3, k: int | None = None) -> "ConstantsTable":
        """Unit representatives a_i = e_j = 1 with the closed h_j and f_j."""
        require_prime(p, "ConstantsTable.closed_form")
        k = default_adams_k(p) if k is None else k
        pn = p**n
        period = pn - 1
        table = cls(p=p, n=n)
        for i in range(1, pn + 1):
            table.add(ConstantEntry(key=f"chern({i})@{i}", name="a", index=i, value=Fraction(1), provenance="unit representative"))
        for j in range(1, j_max + 1):
            codim = 1 + j * period
            table.add(ConstantEntry(key=f"chern({pn})@{codim}", name="e", index=j, value=Fraction(1), provenance="unit representative"))
            if j < 2:
                continue
            h = Fraction(k) ** pn * (Fraction(k) ** ((j - 1) * period) - 1)
            f = Fraction(p) ** pn * (Fraction(p) ** ((j - 1) * period) - 1)
            table.add(ConstantEntry(key=f"chi({k})@{codim}", name="h", index=j, value=h, provenance=f"closed form, k={k}"))
            table.add(ConstantEntry(key=f"psi_p@{codim}", name="f", index=j, value=f, provenance="closed form"))
        return table

    @classmethod
    def from_tower(cls, tower: ChernTower, k: int | None = None, j_max: int | None = None) -> "ConstantsTable":
        """Leading constants read off a built self tower."""
        p, n, period = tower.p, tower.source.n, tower.period
        pn = p**n
        caps = f"I={tower.caps.max_index},L={tower.caps.arity},N={tower.caps.degree}"
        table = cls(p=p, n=n)
        for i in tower.classes:
            for codim in range(i, min(tower.caps.arity, tower.caps.degree) + 1, period):
                value = tower.leading_constant(i, codim)
                if value:
                    table.add(ConstantEntry(key=f"chern({i})@{codim}", name="a" if codim == i else "c", index=i, value=value, provenance="tower", caps=caps))
        if pn in tower.classes:
            reach = (min(tower.caps.arity, tower.caps.degree) - 1) // period
            j_max = reach if j_max is None else min(j_max, reach)
            k = default_adams_k(p) if k is None else k
            for record in chi_constants(tower, k, j_max):
                table.add(ConstantEntry(key=f"chi({k})@{1 + record.index * period}", name="h", index=record.index, value=record.value, provenance="tower", caps=caps))
            for record in f_constants(tower, j_max):
                table.add(ConstantEntry(key=f"psi_p@{1 + record.index * period}", name="f", index=record.index, value=record.value, provenance="tower", caps=caps))
        return table


def constants_rows(table: ConstantsTable) -> list[list[str]]:
    """CSV rows index, constant, value, vp, caps, sorted by constant then index."""
    rows = []
    for entry in sorted(table.entries, key=lambda e: (e.name, e.index, e.key)):
        valuation = vp(entry.value, table.p)
        rows.append([
            str(entry.index),
            entry.key,
            format_rational(entry.value),
            "inf" if valuation == float("inf") else str(valuation),
            entry.caps or entry.provenance,
        ])
    return rows
