"""Truncated multivariate power series.

A TruncatedSeries is an immutable sparse map from exponent tuples to
coefficients of a CoefficientRing, together with a total-degree cap N. Every
stored term has total degree <= N and results of arithmetic are cut at the
smallest cap of the operands.
"""
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Mapping

from sympy.utilities.iterables import multiset_permutations, ordered_partitions

from . import config
from .arith import format_rational, parse_rational
from .errors import CapInsufficientError, InputError, SeriesError
from .logger import get_logger
from .rings import QQ, CoefficientRing

logger = get_logger(__file__)

Exponent = tuple[int, ...]


def _check_storage(count: int, operation: str) -> None:
    budget = config.FGLAB_MAX_MEMORY_MB * 2**20
    if count * config.BYTES_PER_TERM > budget:
        raise CapInsufficientError(
            f"series storage exceeds FGLAB_MAX_MEMORY_MB={config.FGLAB_MAX_MEMORY_MB}",
            module="series",
            operation=operation,
            witness=f"terms={count}",
        )


@lru_cache(maxsize=4096)
def partitions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """Partitions of ``total`` into exactly ``parts`` positive parts, each sorted descending."""
    if parts == 0:
        return ((),) if total == 0 else ()
    if total < parts or parts < 0:
        return ()
    return tuple(tuple(sorted(part, reverse=True)) for part in ordered_partitions(total, parts))


def variable_names(prefix: str, count: int) -> tuple[str, ...]:
    """("z1", ..., "z<count>")."""
    return tuple(f"{prefix}{j}" for j in range(1, count + 1))


class TruncatedSeries:
    """Sparse truncated power series in named variables."""

    __slots__ = ("variables", "cap", "terms", "ring")

    def __init__(
        self,
        variables: Iterable[str],
        cap: int,
        terms: Mapping[Exponent, Any] | None = None,
        ring: CoefficientRing = QQ,
    ) -> None:
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise SeriesError("repeated variable names", module="series", operation="init", witness=variables)
        if cap < 0:
            raise SeriesError("negative cap", module="series", operation="init", witness=cap)
        clean: dict[Exponent, Any] = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(variables) or any(e < 0 for e in exp):
                raise SeriesError("bad exponent vector", module="series", operation="init", witness=exp)
            if sum(exp) > cap:
                continue
            coef = ring.coerce(coef)
            if not ring.is_zero(coef):
                clean[exp] = coef
        _check_storage(len(clean), "init")
        self.variables = variables
        self.cap = cap
        self.terms = clean
        self.ring = ring

    @classmethod
    def _raw(cls, variables: tuple[str, ...], cap: int, terms: dict[Exponent, Any], ring: CoefficientRing) -> "TruncatedSeries":
        """Build without validation; terms must already be clean and within the cap."""
        _check_storage(len(terms), "arith")
        series = cls.__new__(cls)
        series.variables = variables
        series.cap = cap
        series.terms = terms
        series.ring = ring
        return series

    # constructors

    @classmethod
    def zero(cls, variables: Iterable[str], cap: int, ring: CoefficientRing = QQ) -> "TruncatedSeries":
        return cls(variables, cap, {}, ring)

    @classmethod
    def constant(cls, value, variables: Iterable[str], cap: int, ring: CoefficientRing = QQ) -> "TruncatedSeries":
        variables = tuple(variables)
        return cls(variables, cap, {(0,) * len(variables): value}, ring)

    @classmethod
    def variable(cls, name: str, variables: Iterable[str], cap: int, ring: CoefficientRing = QQ) -> "TruncatedSeries":
        variables = tuple(variables)
        if name not in variables:
            raise SeriesError("unknown variable", module="series", operation="variable", witness=name)
        exp = tuple(int(v == name) for v in variables)
        return cls(variables, cap, {exp: ring.one}, ring)

    @classmethod
    def univariate(cls, coefficients: Mapping[int, Any], var: str = "x", cap: int = 0, ring: CoefficientRing = QQ) -> "TruncatedSeries":
        """Series sum c_k var^k from a degree -> coefficient map."""
        return cls((var,), cap, {(k,): c for k, c in coefficients.items()}, ring)

    # structure

    def _same_frame(self, other: "TruncatedSeries", operation: str) -> None:
        if self.variables != other.variables:
            raise SeriesError(
                "series in different variables",
                module="series",
                operation=operation,
                witness=f"{self.variables} vs {other.variables}",
            )
        if self.ring != other.ring:
            raise SeriesError("series over different rings", module="series", operation=operation)

    def _lift(self, other, operation: str) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._same_frame(other, operation)
            return other
        return TruncatedSeries.constant(other, self.variables, self.cap, self.ring)

    def coefficient(self, exp: Exponent):
        return self.terms.get(tuple(exp), self.ring.zero)

    def constant_term(self):
        return self.coefficient((0,) * len(self.variables))

    def univariate_coefficients(self) -> dict[int, Any]:
        if len(self.variables) != 1:
            raise SeriesError("series is not univariate", module="series", operation="univariate_coefficients", witness=self.variables)
        return {exp[0]: c for exp, c in self.terms.items()}

    def min_degree(self) -> int | None:
        """Lowest total degree of a stored term, None for the zero series."""
        return min((sum(exp) for exp in self.terms), default=None)

    def homogeneous_component(self, d: int) -> "TruncatedSeries":
        terms = {exp: c for exp, c in self.terms.items() if sum(exp) == d}
        return TruncatedSeries._raw(self.variables, self.cap, terms, self.ring)

    def truncate(self, cap: int) -> "TruncatedSeries":
        if cap > self.cap:
            raise SeriesError("cannot extend a cap", module="series", operation="truncate", witness=f"{self.cap} -> {cap}")
        terms = {exp: c for exp, c in self.terms.items() if sum(exp) <= cap}
        return TruncatedSeries._raw(self.variables, cap, terms, self.ring)

    def embed(self, variables: Iterable[str], rename: Mapping[str, str] | None = None) -> "TruncatedSeries":
        """Rewrite in a larger (or renamed) ordered variable list."""
        variables = tuple(variables)
        rename = dict(rename or {})
        names = [rename.get(v, v) for v in self.variables]
        if len(set(names)) != len(names) or not set(names) <= set(variables):
            raise SeriesError("cannot embed", module="series", operation="embed", witness=f"{names} into {variables}")
        positions = [variables.index(v) for v in names]
        terms = {}
        for exp, c in self.terms.items():
            new = [0] * len(variables)
            for pos, e in zip(positions, exp):
                new[pos] = e
            terms[tuple(new)] = c
        return TruncatedSeries._raw(variables, self.cap, terms, self.ring)

    def map_coefficients(self, func) -> "TruncatedSeries":
        return TruncatedSeries(self.variables, self.cap, {exp: func(c) for exp, c in self.terms.items()}, self.ring)

    # arithmetic

    def __add__(self, other) -> "TruncatedSeries":
        other = self._lift(other, "add")
        cap = min(self.cap, other.cap)
        terms = {exp: c for exp, c in self.terms.items() if sum(exp) <= cap}
        for exp, c in other.terms.items():
            if sum(exp) > cap:
                continue
            total = terms.get(exp, self.ring.zero) + c
            if self.ring.is_zero(total):
                terms.pop(exp, None)
            else:
                terms[exp] = total
        return TruncatedSeries._raw(self.variables, cap, terms, self.ring)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.variables, self.cap, {exp: -c for exp, c in self.terms.items()}, self.ring)

    def __sub__(self, other) -> "TruncatedSeries":
        return self + (-self._lift(other, "sub"))

    def __rsub__(self, other) -> "TruncatedSeries":
        return self._lift(other, "sub") - self

    def scale(self, scalar) -> "TruncatedSeries":
        scalar = self.ring.coerce(scalar)
        if self.ring.is_zero(scalar):
            return TruncatedSeries._raw(self.variables, self.cap, {}, self.ring)
        return TruncatedSeries._raw(self.variables, self.cap, {exp: c * scalar for exp, c in self.terms.items()}, self.ring)

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._same_frame(other, "mul")
        cap = min(self.cap, other.cap)
        left = sorted(((sum(e), e, c) for e, c in self.terms.items()), key=lambda t: t[0])
        right = sorted(((sum(e), e, c) for e, c in other.terms.items()), key=lambda t: t[0])
        zero = self.ring.zero
        terms: dict[Exponent, Any] = {}
        for d1, e1, c1 in left:
            if right and d1 + right[0][0] > cap:
                break
            for d2, e2, c2 in right:
                if d1 + d2 > cap:
                    break
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, zero) + c1 * c2
        terms = {exp: c for exp, c in terms.items() if not self.ring.is_zero(c)}
        return TruncatedSeries._raw(self.variables, cap, terms, self.ring)

    def __rmul__(self, other) -> "TruncatedSeries":
        return self.scale(other)

    def __pow__(self, k: int) -> "TruncatedSeries":
        if not isinstance(k, int) or k < 0:
            raise SeriesError("only non-negative integer powers", module="series", operation="pow", witness=k)
        result = TruncatedSeries.constant(self.ring.one, self.variables, self.cap, self.ring)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            if isinstance(other, (int, Fraction)):
                other = TruncatedSeries.constant(other, self.variables, self.cap, self.ring)
            else:
                return NotImplemented
        if self.variables != other.variables:
            return False
        cap = min(self.cap, other.cap)
        mine = {e: c for e, c in self.terms.items() if sum(e) <= cap}
        theirs = {e: c for e, c in other.terms.items() if sum(e) <= cap}
        return mine == theirs

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"TruncatedSeries({series_to_text(self)}, cap={self.cap})"

    # predicates

    def is_symmetric(self) -> bool:
        """Invariance under every permutation of the variables."""
        for exp, c in self.terms.items():
            for other in multiset_permutations(list(exp)):
                if self.terms.get(tuple(other)) != c:
                    return False
        return True

    def divisible_by_variables(self) -> bool:
        """True iff every variable divides every stored monomial."""
        return all(all(e > 0 for e in exp) for exp in self.terms)

    def symmetric_coefficients(self) -> dict[tuple[int, ...], Any]:
        """Partition-indexed view: coefficient at each sorted exponent pattern.

        Parts are listed in descending order, zeros dropped.
        """
        view: dict[tuple[int, ...], Any] = {}
        for exp, c in self.terms.items():
            key = tuple(sorted((e for e in exp if e), reverse=True))
            if key in view and view[key] != c:
                raise SeriesError("series is not symmetric", module="series", operation="symmetric_coefficients", witness=exp)
            view[key] = c
        return view

    # serialization

    def to_json(self) -> dict:
        if self.ring is not QQ:
            raise SeriesError("only rational series serialize", module="series", operation="to_json", witness=self.ring.name)
        return {
            "vars": list(self.variables),
            "cap": self.cap,
            "terms": [{"exp": list(exp), "coef": format_rational(self.terms[exp])} for exp in sorted(self.terms)],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "TruncatedSeries":
        try:
            variables = [str(v) for v in data["vars"]]
            cap = int(data["cap"])
            terms = {tuple(term["exp"]): parse_rational(term["coef"]) for term in data["terms"]}
        except (KeyError, TypeError) as err:
            raise InputError("malformed series JSON", module="series", operation="from_json", witness=str(err)) from err
        return cls(variables, cap, terms, QQ)


def expand_symmetric(
    coefficients: Mapping[tuple[int, ...], Any],
    variables: Iterable[str],
    cap: int,
    ring: CoefficientRing = QQ,
) -> TruncatedSeries:
    """Materialize a symmetric series from its partition-indexed view."""
    variables = tuple(variables)
    count = len(variables)
    terms = {}
    for part, c in coefficients.items():
        if len(part) > count or sum(part) > cap:
            continue
        padded = list(part) + [0] * (count - len(part))
        for exp in multiset_permutations(padded):
            terms[tuple(exp)] = c
    return TruncatedSeries(variables, cap, terms, ring)


def series_to_text(f: TruncatedSeries) -> str:
    """Human-readable rendering in canonical term order."""
    if not f.terms:
        return "0"
    parts = []
    for exp in sorted(f.terms, key=lambda e: (sum(e), tuple(-x for x in e))):
        monomial = "*".join(
            name if e == 1 else f"{name}^{e}" for name, e in zip(f.variables, exp) if e
        )
        coef = f.ring.format(f.terms[exp])
        if not monomial:
            parts.append(coef)
        elif coef == "1":
            parts.append(monomial)
        else:
            parts.append(f"({coef})*{monomial}")
    return " + ".join(parts)


def compose_univariate(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """f(g) for univariate f, g in any variables, g without constant term.

    The result cap is min(f.cap, g.cap).
    """
    coefficients = f.univariate_coefficients()
    if not g.ring.is_zero(g.constant_term()):
        raise SeriesError("inner series has a constant term", module="series", operation="compose_univariate", witness=g.constant_term())
    cap = min(f.cap, g.cap)
    g = g.truncate(cap)
    result = TruncatedSeries.zero(g.variables, cap, g.ring)
    power = TruncatedSeries.constant(g.ring.one, g.variables, cap, g.ring)
    lowest = g.min_degree() or 1
    for k in range(0, max(coefficients, default=-1) + 1):
        if k * lowest > cap:
            break
        if k in coefficients:
            result = result + power.scale(coefficients[k])
        power = power * g
    return result


def substitute(
    f: TruncatedSeries,
    assignment: Mapping[str, TruncatedSeries],
    polynomial: bool = False,
) -> TruncatedSeries:
    """Compose f with the series in ``assignment``.

    All replacement series must share one variable list; unassigned variables
    of f are carried over to it. With ``polynomial=True`` f is read as an
    exact polynomial, and replacements may have a constant term.
    """
    unknown = set(assignment) - set(f.variables)
    if unknown:
        raise SeriesError("substituting an absent variable", module="series", operation="substitute", witness=sorted(unknown))
    replacements = list(assignment.values())
    out_vars: list[str] = list(replacements[0].variables) if replacements else []
    for name in f.variables:
        if name not in assignment and name not in out_vars:
            out_vars.append(name)
    out_vars = tuple(out_vars)
    images: list[TruncatedSeries] = []
    for name in f.variables:
        if name in assignment:
            image = assignment[name]
            if image.ring != f.ring:
                raise SeriesError("replacement over another ring", module="series", operation="substitute", witness=name)
            image = image.embed(out_vars)
        else:
            image = TruncatedSeries.variable(name, out_vars, f.cap, f.ring)
        images.append(image)
    cap = min(image.cap for image in images) if images else f.cap
    if not polynomial:
        cap = min(cap, f.cap)
    lows = []
    for name, image in zip(f.variables, images):
        if not f.ring.is_zero(image.constant_term()):
            if not polynomial:
                raise SeriesError(
                    "replacement has a nonzero constant term",
                    module="series",
                    operation="substitute",
                    witness=name,
                )
            lows.append(0)
        else:
            lows.append(image.min_degree() or cap + 1)
    images = [image.truncate(cap) for image in images]

    powers: list[dict[int, TruncatedSeries]] = [{} for _ in images]

    def power(i: int, e: int) -> TruncatedSeries:
        cache = powers[i]
        if e not in cache:
            cache[e] = images[i] if e == 1 else power(i, e - 1) * images[i]
        return cache[e]

    result_terms: dict[Exponent, Any] = {}
    zero = f.ring.zero
    one_series = TruncatedSeries.constant(f.ring.one, out_vars, cap, f.ring)
    for exp, c in f.terms.items():
        if sum(e * low for e, low in zip(exp, lows)) > cap:
            continue
        term = one_series
        for i, e in enumerate(exp):
            if e:
                term = term * power(i, e)
            if not term.terms:
                break
        for texp, tc in term.terms.items():
            result_terms[texp] = result_terms.get(texp, zero) + c * tc
    result_terms = {e: c for e, c in result_terms.items() if not f.ring.is_zero(c)}
    return TruncatedSeries._raw(out_vars, cap, result_terms, f.ring)


def _invert_univariate(coefficients: list, cap: int, ring: CoefficientRing) -> list:
    """1/h as a coefficient list up to degree cap; h[0] must be invertible."""
    inverse_lead = ring.inverse(coefficients[0])
    result = [inverse_lead]
    for k in range(1, cap + 1):
        acc = ring.zero
        for j in range(1, min(k, len(coefficients) - 1) + 1):
            acc = acc + coefficients[j] * result[k - j]
        result.append(-(acc * inverse_lead))
    return result


def _mul_lists(a: list, b: list, cap: int, ring: CoefficientRing) -> list:
    out = [ring.zero] * (cap + 1)
    for i, ai in enumerate(a[: cap + 1]):
        if ring.is_zero(ai):
            continue
        for j, bj in enumerate(b[: cap + 1 - i]):
            if not ring.is_zero(bj):
                out[i + j] = out[i + j] + ai * bj
    return out


def reverse(f: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse of a univariate series by Lagrange inversion.

    g_n = (1/n) [y^(n-1)] (y / f(y))^n.
    """
    ring = f.ring
    coefficients = f.univariate_coefficients()
    if not ring.is_zero(coefficients.get(0, ring.zero)):
        raise SeriesError("series has a constant term", module="series", operation="reverse", witness=coefficients[0])
    lead = coefficients.get(1, ring.zero)
    try:
        ring.inverse(lead)
    except SeriesError as err:
        raise SeriesError("linear coefficient is not invertible", module="series", operation="reverse", witness=lead) from err
    cap = f.cap
    if cap == 0:
        return TruncatedSeries.zero(f.variables, 0, ring)
    shifted = [coefficients.get(k + 1, ring.zero) for k in range(cap)]
    quotient = _invert_univariate(shifted, cap - 1, ring)
    result = {}
    power = [ring.one] + [ring.zero] * (cap - 1)
    for n in range(1, cap + 1):
        power = _mul_lists(power, quotient, cap - 1, ring)
        value = power[n - 1] * Fraction(1, n)
        if not ring.is_zero(value):
            result[(n,)] = value
    return TruncatedSeries(f.variables, cap, result, ring)


def is_pn_gradable(f: TruncatedSeries, p: int, n: int) -> bool:
    """Every positive exponent of every monomial is 1 mod p^n - 1."""
    if n < 1:
        raise InputError("n must be positive", module="series", operation="is_pn_gradable", witness=n)
    modulus = p**n - 1
    if modulus == 1:
        return True
    return all(e % modulus == 1 for exp in f.terms for e in exp if e)


def symmetric_product_expand(f: TruncatedSeries, l: int, degree: int, prefix: str = "z") -> TruncatedSeries:
    """Degree-``degree`` component of prod_{j=1..l} f(z_j), symmetric in z_1..z_l."""
    ring = f.ring
    coefficients = f.univariate_coefficients()
    if not ring.is_zero(coefficients.get(0, ring.zero)):
        raise SeriesError("series has a constant term", module="series", operation="symmetric_product_expand")
    if degree > f.cap:
        raise SeriesError("degree above the cap", module="series", operation="symmetric_product_expand", witness=f"{degree} > {f.cap}")
    view = {}
    for part in partitions(degree, l):
        value = ring.one
        for m in part:
            value = value * coefficients.get(m, ring.zero)
            if ring.is_zero(value):
                break
        if not ring.is_zero(value):
            view[part] = value
    return expand_symmetric(view, variable_names(prefix, l), degree, ring)
