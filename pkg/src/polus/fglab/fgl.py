"""Logarithm-backed formal group laws over torsion-free coefficient rings.

A law is stored through its logarithm; the exponential, the law F(x, y)
and m-series are derived from it and cached.
"""
import math
from fractions import Fraction
from functools import cached_property
from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from .arith import Rational, format_rational, is_p_integral, is_p_unit, parse_rational, require_prime, vp
from .errors import CapInsufficientError, InputError, InternalConsistencyError
from .logger import get_logger
from .rings import QQ, GradedPolynomialRing
from .series import (
    TruncatedSeries,
    compose_univariate,
    is_pn_gradable,
    reverse,
    series_to_text,
)

logger = get_logger(__file__)

LawKind = Literal["morava", "multiplicative", "additive", "log"]


def _is_power_of(d: int, base: int) -> bool:
    while d % base == 0:
        d //= base
    return d == 1


class FormalGroupLaw:
    """Formal group law F(x, y) = exp(log x + log y) truncated at ``cap``."""

    def __init__(self, p: int, log: TruncatedSeries, kind: LawKind = "log", n: int | None = None, label: str = "") -> None:
        self.p = require_prime(p, "FormalGroupLaw")
        coefficients = log.univariate_coefficients()
        ring = log.ring
        if not ring.is_zero(coefficients.get(0, ring.zero)) or coefficients.get(1) != ring.one:
            raise InputError(
                "logarithm must be x + higher terms",
                module="fgl",
                operation="FormalGroupLaw",
                witness=series_to_text(log),
            )
        self.log = log
        self.kind = kind
        self.n = n
        self.label = label or kind

    @property
    def cap(self) -> int:
        return self.log.cap

    @property
    def ring(self):
        return self.log.ring

    @property
    def period(self) -> int | None:
        """p^n - 1 for laws carrying a height n."""
        return None if self.n is None else self.p**self.n - 1

    def same_as(self, other: "FormalGroupLaw") -> bool:
        """Same prime and same logarithm up to the common cap."""
        return self is other or (self.p == other.p and self.log == other.log)

    def truncate(self, cap: int) -> "FormalGroupLaw":
        return FormalGroupLaw(self.p, self.log.truncate(cap), self.kind, self.n, self.label)

    @cached_property
    def exp(self) -> TruncatedSeries:
        return reverse(self.log)

    @cached_property
    def law(self) -> TruncatedSeries:
        return self.apply(
            TruncatedSeries.variable("x", ("x", "y"), self.cap, self.ring),
            TruncatedSeries.variable("y", ("x", "y"), self.cap, self.ring),
        )

    @cached_property
    def p_series(self) -> TruncatedSeries:
        return m_series(self, self.p)

    def log_of(self, u: TruncatedSeries) -> TruncatedSeries:
        return compose_univariate(self.log, u)

    def exp_of(self, u: TruncatedSeries) -> TruncatedSeries:
        return compose_univariate(self.exp, u)

    def apply(self, u: TruncatedSeries, v: TruncatedSeries) -> TruncatedSeries:
        """F(u, v) for series u, v without constant term in a common frame."""
        return self.exp_of(self.log_of(u) + self.log_of(v))

    def check_axioms(self) -> str | None:
        """Return the first failing identity among unit, commutativity and associativity."""
        frame = ("x", "y", "z")
        x, y, z = (TruncatedSeries.variable(v, frame, self.cap, self.ring) for v in frame)
        zero = TruncatedSeries.zero(frame, self.cap, self.ring)
        if self.apply(x, zero) != x:
            return "F(x, 0) = x"
        if self.law != self.law.embed(("x", "y"), rename={"x": "y", "y": "x"}):
            return "F(x, y) = F(y, x)"
        if self.apply(self.apply(x, y), z) != self.apply(x, self.apply(y, z)):
            return "F(F(x, y), z) = F(x, F(y, z))"
        return None

    def is_integral(self) -> bool:
        """All coefficients of F(x, y) lie in Z_(p)."""
        if self.ring is not QQ:
            raise InputError("integrality needs rational coefficients", module="fgl", operation="is_integral")
        return all(is_p_integral(c, self.p) for c in self.law.terms.values())

    def __repr__(self) -> str:
        return f"FormalGroupLaw({self.label}, p={self.p}, cap={self.cap})"


class MoravaSpec(BaseModel):
    """Unit inputs a_1, a_2, ... of a Morava logarithm x + sum a_i/p^i x^(p^(ni))."""

    p: int
    n: int = Field(ge=1)
    a: list[Rational] = Field(default_factory=lambda: [Fraction(1)], min_length=1)

    @field_validator("p")
    @classmethod
    def check_prime(cls, p: int) -> int:
        return require_prime(p, "MoravaSpec")

    @model_validator(mode="after")
    def check_units(self) -> "MoravaSpec":
        for i, a_i in enumerate(self.a, start=1):
            if not is_p_unit(a_i, self.p):
                raise InputError("a_i must be a p-unit", module="fgl", operation="MoravaSpec", witness=f"a_{i}={format_rational(a_i)}")
        return self

    def padded(self, k: int) -> list[Fraction]:
        """a_1..a_k, unspecified entries repeating the last given value."""
        return [self.a[min(i, len(self.a) - 1)] for i in range(k)]

    def congruence_defects(self, k: int | None = None) -> list[int]:
        """Indices i <= k with a_i not congruent to a_1^i mod p."""
        return congruence_defects(self.padded(k or len(self.a)), self.p)


def congruence_defects(a: list[Fraction], p: int) -> list[int]:
    """Indices k with a_k not congruent to a_1^k mod p; empty for an empty list."""
    if not a:
        return []
    return [k for k, a_k in enumerate(a, start=1) if vp(a_k - a[0] ** k, p) < 1]


def morava(spec: MoravaSpec, cap: int) -> FormalGroupLaw:
    """Height-n law with logarithm x + sum_i a_i/p^i x^(p^(ni))."""
    if cap < 1:
        raise InputError("cap must be positive", module="fgl", operation="morava", witness=cap)
    p, n = spec.p, spec.n
    count = 0
    while p ** (n * (count + 1)) <= cap:
        count += 1
    a = spec.padded(count) if count else []
    coefficients = {1: Fraction(1)}
    for i, a_i in enumerate(a, start=1):
        coefficients[p ** (n * i)] = a_i / Fraction(p) ** i
    label = f"K({n})"
    logger.debug(f"morava log for {label}, p={p}: {coefficients}")
    return FormalGroupLaw(p, TruncatedSeries.univariate(coefficients, "x", cap), "morava", n, label)


def multiplicative(p: int, beta, cap: int) -> FormalGroupLaw:
    """x + y + beta xy, with logarithm sum (-beta)^(k-1) x^k / k."""
    beta = parse_rational(beta)
    coefficients = {k: (-beta) ** (k - 1) / k for k in range(1, cap + 1)}
    return FormalGroupLaw(p, TruncatedSeries.univariate(coefficients, "x", cap), "multiplicative", label=f"multiplicative({format_rational(beta)})")


def additive(p: int, cap: int) -> FormalGroupLaw:
    return FormalGroupLaw(p, TruncatedSeries.univariate({1: 1}, "x", cap), "additive", label="additive")


def from_log_coefficients(p: int, pairs, cap: int) -> FormalGroupLaw:
    """Law from (exponent, coefficient) pairs of its logarithm."""
    coefficients: dict[int, Fraction] = {}
    for pair in pairs:
        try:
            exponent, coef = pair
            exponent = int(exponent)
        except (TypeError, ValueError) as err:
            raise InputError("expected [exponent, coefficient] pairs", module="fgl", operation="from_log_coefficients", witness=pair) from err
        if exponent < 1:
            raise InputError("exponents start at 1", module="fgl", operation="from_log_coefficients", witness=exponent)
        coefficients[exponent] = coefficients.get(exponent, Fraction(0)) + parse_rational(coef)
    if coefficients.get(1) != 1:
        raise InputError("linear coefficient of a logarithm must be 1", module="fgl", operation="from_log_coefficients", witness=coefficients.get(1))
    return FormalGroupLaw(p, TruncatedSeries.univariate(coefficients, "x", cap), "log", label="log")


def fgl_from_json(data: Mapping[str, Any], cap: int, default_p: int | None = None) -> FormalGroupLaw:
    """Build a law from its JSON description; "p" falls back to ``default_p``."""
    if not isinstance(data, Mapping) or "kind" not in data:
        raise InputError("law JSON needs a 'kind'", module="fgl", operation="fgl_from_json", witness=data)
    p = data.get("p", default_p)
    if p is None:
        raise InputError("law JSON needs a prime 'p'", module="fgl", operation="fgl_from_json")
    p = require_prime(int(p), "fgl_from_json")
    kind = data["kind"]
    if kind == "morava":
        spec = MoravaSpec(p=p, n=data.get("n", 1), a=data.get("a", ["1"]))
        return morava(spec, cap)
    if kind == "multiplicative":
        return multiplicative(p, data.get("beta", "-1"), cap)
    if kind == "additive":
        return additive(p, cap)
    if kind == "log":
        return from_log_coefficients(p, data.get("coeffs", []), cap)
    raise InputError("unknown law kind", module="fgl", operation="fgl_from_json", witness=kind)


def law_to_json(F: FormalGroupLaw) -> dict:
    return {
        "p": F.p,
        "kind": F.kind,
        "label": F.label,
        "cap": F.cap,
        "log": F.log.to_json(),
        "exp": F.exp.to_json(),
        "law": F.law.to_json(),
    }


def m_series(F: FormalGroupLaw, m: int) -> TruncatedSeries:
    """[m](x) = exp(m log x)."""
    return F.exp_of(F.log.scale(m))


def height_mod_p(F: FormalGroupLaw) -> int | float:
    """Height of the reduction mod p, from the first unit coefficient of [p](x)."""
    if F.ring is not QQ:
        raise InputError("height needs rational coefficients", module="fgl", operation="height_mod_p")
    p = F.p
    if F.kind == "additive" or set(F.log.terms) == {(1,)}:
        return math.inf
    if F.cap < p:
        raise CapInsufficientError("cap below p sees no height", module="fgl", operation="height_mod_p", witness=f"cap={F.cap}")
    series = F.p_series.univariate_coefficients()
    for d in sorted(series):
        if not is_p_integral(series[d], p):
            raise InputError("[p](x) is not p-integral", module="fgl", operation="height_mod_p", witness=f"x^{d}: {format_rational(series[d])}")
    for d in sorted(series):
        c = series[d]
        if not is_p_unit(c, p):
            continue
        if d > 1 and _is_power_of(d, p):
            return round(math.log(d, p))
        raise InternalConsistencyError(
            "first unit coefficient of [p](x) outside a p-power degree",
            module="fgl",
            operation="height_mod_p",
            witness=f"x^{d}",
        )
    raise CapInsufficientError("no unit coefficient of [p](x) below the cap", module="fgl", operation="height_mod_p", witness=f"cap={F.cap}")


def is_p_typical(F: FormalGroupLaw) -> bool:
    return all(_is_power_of(exp[0], F.p) for exp in F.log.terms)


def is_pn_typical(F: FormalGroupLaw, n: int) -> bool:
    """Log criterion, cross-checked with p-typicality plus a p^n-gradable p-series."""
    if n < 1:
        raise InputError("n must be positive", module="fgl", operation="is_pn_typical", witness=n)
    by_log = all(_is_power_of(exp[0], F.p**n) for exp in F.log.terms)
    by_series = is_p_typical(F) and is_pn_gradable(F.p_series, F.p, n)
    if by_log != by_series:
        raise InternalConsistencyError(
            "log and p-series typicality criteria disagree",
            module="fgl",
            operation="is_pn_typical",
            witness=f"log={by_log}, p-series={by_series}",
        )
    return by_log


def morava_coefficients(F: FormalGroupLaw, n: int) -> list[Fraction]:
    """Read a_i = p^i [x^(p^(ni))] log back from a Morava logarithm."""
    coefficients = F.log.univariate_coefficients()
    result = []
    i = 1
    while F.p ** (n * i) <= F.cap:
        result.append(coefficients.get(F.p ** (n * i), Fraction(0)) * Fraction(F.p) ** i)
        i += 1
    return result


def v_n(F: FormalGroupLaw, n: int) -> Fraction:
    """Coefficient of x^(p^n) in [p](x)."""
    if F.p**n > F.cap:
        raise CapInsufficientError("cap below p^n", module="fgl", operation="v_n", witness=f"p^n={F.p ** n}, cap={F.cap}")
    return F.p_series.coefficient((F.p**n,))


def araki_log(m: int, p: int, cap: int) -> TruncatedSeries:
    """Universal p-typical logarithm over Q[v_1..v_m] from the Araki relation.

    l_0 = 1 and l_k (p - p^(p^k)) = sum_{i<k} l_i v_(k-i)^(p^i), with v_j = 0
    for j > m.
    """
    require_prime(p, "araki_log")
    if cap < p:
        raise CapInsufficientError("cap below p", module="fgl", operation="araki_log", witness=f"cap={cap}")
    ring = GradedPolynomialRing(p, range(1, m + 1))
    logs = [ring.one]
    k = 1
    while p**k <= cap:
        total = ring.zero
        for i in range(k):
            total = total + logs[i] * ring.generator(k - i) ** (p**i)
        logs.append(total / (p - p ** (p**k)))
        k += 1
    return TruncatedSeries(("x",), cap, {(p**k,): l_k for k, l_k in enumerate(logs)}, ring)


class BpnReport(BaseModel):
    """Outcome of specializing the Araki logarithm to BP{n}."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    m: int
    p: int
    cap: int
    killed: list[int]
    exponents: list[int]
    passed: bool
    log: TruncatedSeries = Field(exclude=True)

    def to_json(self) -> dict:
        data = self.model_dump()
        data["log"] = {str(e): repr(self.log.coefficient((e,))) for e in self.exponents}
        return data


def bpn_check(n: int, m: int, p: int, cap: int) -> BpnReport:
    """Kill v_j for n not dividing j and test that only x^(p^(ni)) terms survive."""
    if n < 1:
        raise InputError("n must be positive", module="fgl", operation="bpn_check", witness=n)
    log = araki_log(m, p, cap)
    killed = [j for j in range(1, m + 1) if j % n]
    specialized = log.map_coefficients(lambda c: c.kill(killed))
    exponents = sorted(exp[0] for exp in specialized.terms)
    passed = all(_is_power_of(e, p**n) for e in exponents)
    logger.info(f"bpn_check n={n} m={m} p={p}: exponents {exponents}, passed={passed}")
    return BpnReport(n=n, m=m, p=p, cap=cap, killed=killed, exponents=exponents, passed=passed, log=specialized)


def strict_iso(F1: FormalGroupLaw, F2: FormalGroupLaw, verify: bool = True, verify_cap: int | None = None) -> TruncatedSeries:
    """gamma = exp_1(log_2(x)), so that F1(gamma(x), gamma(y)) = gamma(F2(x, y)).

    The identity is verified up to ``verify_cap`` (default the full cap).
    """
    if F1.p != F2.p:
        raise InputError("laws at different primes", module="fgl", operation="strict_iso", witness=f"{F1.p} vs {F2.p}")
    cap = min(F1.cap, F2.cap)
    F1, F2 = F1.truncate(cap), F2.truncate(cap)
    gamma = F1.exp_of(F2.log)
    if verify:
        check = min(cap, verify_cap or cap)
        G1, G2 = F1.truncate(check), F2.truncate(check)
        g = gamma.truncate(check)
        frame = ("x", "y")
        gx = g.embed(frame)
        gy = g.embed(frame, rename={"x": "y"})
        left = G1.apply(gx, gy)
        right = compose_univariate(g, G2.law)
        if left != right:
            raise InternalConsistencyError(
                "gamma does not intertwine the laws",
                module="fgl",
                operation="strict_iso",
                witness=series_to_text(left - right),
            )
    return gamma


def first_non_integral(gamma: TruncatedSeries, p: int) -> tuple[int, Fraction] | None:
    """Lowest-degree coefficient outside Z_(p), if any."""
    for exp in sorted(gamma.terms, key=sum):
        if not is_p_integral(gamma.terms[exp], p):
            return sum(exp), gamma.terms[exp]
    return None


def iso_is_integral(gamma: TruncatedSeries, p: int) -> bool:
    return first_non_integral(gamma, p) is None


class GradedLawSpec(BaseModel):
    """A graded law datum: a unit a and a rational b."""

    a: Rational
    b: Rational = Fraction(0)


class ObstructionVerdict(BaseModel):
    """Whether a unit alpha solves alpha = a1/a2 and b1 alpha^2 = b2 mod p."""

    p: int
    alpha: Rational
    defect_valuation: int | None
    obstructed: bool

    @computed_field
    @property
    def verdict(self) -> str:
        return "obstructed" if self.obstructed else "unobstructed"


def graded_iso_obstruction(spec1: GradedLawSpec, spec2: GradedLawSpec, p: int) -> ObstructionVerdict:
    """alpha is forced to a1/a2 mod p; the second congruence then decides."""
    require_prime(p, "graded_iso_obstruction")
    for name, spec in (("spec1", spec1), ("spec2", spec2)):
        if not is_p_unit(spec.a, p):
            raise InputError("a must be a p-unit", module="fgl", operation="graded_iso_obstruction", witness=f"{name}.a={format_rational(spec.a)}")
    alpha = spec1.a / spec2.a
    defect = spec1.b * alpha**2 - spec2.b
    valuation = vp(defect, p)
    obstructed = valuation < 1
    return ObstructionVerdict(
        p=p,
        alpha=alpha,
        defect_valuation=None if valuation == math.inf else int(valuation),
        obstructed=obstructed,
    )


