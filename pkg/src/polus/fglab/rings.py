"""Coefficient rings for truncated series.

Two instantiations exist: the rationals, where p-valuations are defined,
and graded polynomial rings in Araki generators v_j of degree 1 - p^j.
"""
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Iterable

from .arith import format_rational, require_prime, vp
from .errors import SeriesError


class CoefficientRing(ABC):
    """Contract for the coefficients of a TruncatedSeries."""

    name: str = "ring"

    @property
    @abstractmethod
    def zero(self): ...

    @property
    @abstractmethod
    def one(self): ...

    @abstractmethod
    def coerce(self, value): ...

    @abstractmethod
    def inverse(self, value): ...

    def is_zero(self, value) -> bool:
        return not value

    def valuation(self, value, p: int):
        raise SeriesError(f"no p-valuation on {self.name}", module="series", operation="valuation")

    def degree(self, value):
        raise SeriesError(f"no grading on {self.name}", module="series", operation="degree")

    def format(self, value) -> str:
        return str(value)


class RationalRing(CoefficientRing):
    """The field of rationals, with p-valuations."""

    name = "QQ"

    @property
    def zero(self) -> Fraction:
        return Fraction(0)

    @property
    def one(self) -> Fraction:
        return Fraction(1)

    def coerce(self, value) -> Fraction:
        if isinstance(value, GradedPolynomial):
            if not value.is_constant():
                raise SeriesError("non-constant polynomial in QQ", module="series", operation="coerce", witness=str(value))
            return value.constant_term()
        return Fraction(value)

    def inverse(self, value) -> Fraction:
        if value == 0:
            raise SeriesError("zero is not invertible", module="series", operation="inverse")
        return 1 / Fraction(value)

    def valuation(self, value, p: int):
        return vp(value, p)

    def format(self, value) -> str:
        return format_rational(value)


QQ = RationalRing()


class GradedPolynomial:
    """Sparse polynomial in generators v_j with rational coefficients.

    Exponent vectors are indexed like ``ring.generators``; zero terms are
    never stored.
    """

    __slots__ = ("ring", "terms")

    def __init__(self, ring: "GradedPolynomialRing", terms: dict[tuple[int, ...], Fraction] | None = None) -> None:
        self.ring = ring
        self.terms = {exp: Fraction(c) for exp, c in (terms or {}).items() if c}

    # arithmetic

    def _lift(self, other) -> "GradedPolynomial":
        if isinstance(other, GradedPolynomial):
            if other.ring != self.ring:
                raise SeriesError("polynomials from different rings", module="series", operation="arith")
            return other
        return self.ring.constant(other)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, 0) + c
        return GradedPolynomial(self.ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial(self.ring, {exp: -c for exp, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, GradedPolynomial):
            scalar = Fraction(other)
            return GradedPolynomial(self.ring, {exp: c * scalar for exp, c in self.terms.items()})
        other = self._lift(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, 0) + c1 * c2
        return GradedPolynomial(self.ring, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GradedPolynomial):
            return self * self.ring.inverse(other)
        return self * (1 / Fraction(other))

    def __pow__(self, k: int):
        if k < 0:
            return self.ring.inverse(self) ** (-k)
        result = self.ring.one
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, GradedPolynomial):
            return self.ring == other.ring and self.terms == other.terms
        try:
            return self.terms == self.ring.constant(other).terms
        except (TypeError, ValueError):
            return NotImplemented

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    # queries

    def is_constant(self) -> bool:
        return all(not any(exp) for exp in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get(self.ring.zero_exponent, Fraction(0))

    def monomial_degree(self, exp: tuple[int, ...]) -> int:
        return sum(e * d for e, d in zip(exp, self.ring.degrees))

    def degrees(self) -> set[int]:
        return {self.monomial_degree(exp) for exp in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def homogeneous_degree(self) -> int | None:
        """Degree of a nonzero homogeneous polynomial, None for zero."""
        degrees = self.degrees()
        if len(degrees) > 1:
            raise SeriesError("polynomial is not homogeneous", module="series", operation="degree", witness=str(self))
        return next(iter(degrees), None)

    def kill(self, indices: Iterable[int]) -> "GradedPolynomial":
        """Set the generators v_j, j in indices, to zero."""
        positions = [self.ring.position(j) for j in indices if j in self.ring.generators]
        terms = {exp: c for exp, c in self.terms.items() if not any(exp[i] for i in positions)}
        return GradedPolynomial(self.ring, terms)

    def coefficients(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp in sorted(self.terms):
            monomial = "*".join(
                f"v{j}" if e == 1 else f"v{j}^{e}" for j, e in zip(self.ring.generators, exp) if e
            )
            coef = format_rational(self.terms[exp])
            parts.append(f"({coef})*{monomial}" if monomial else f"({coef})")
        return " + ".join(parts)


class GradedPolynomialRing(CoefficientRing):
    """Q[v_j : j in generators] graded by deg v_j = 1 - p^j."""

    def __init__(self, p: int, generators: Iterable[int]) -> None:
        self.p = require_prime(p, "GradedPolynomialRing")
        self.generators = tuple(sorted(set(generators)))
        self.degrees = tuple(1 - p**j for j in self.generators)
        self.zero_exponent = (0,) * len(self.generators)
        self.name = f"Q[{', '.join(f'v{j}' for j in self.generators)}]"

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedPolynomialRing) and (self.p, self.generators) == (other.p, other.generators)

    def __hash__(self) -> int:
        return hash((self.p, self.generators))

    def position(self, j: int) -> int:
        return self.generators.index(j)

    def constant(self, value) -> GradedPolynomial:
        return GradedPolynomial(self, {self.zero_exponent: Fraction(value)})

    def generator(self, j: int) -> GradedPolynomial:
        """The generator v_j, or p for j = 0."""
        if j == 0:
            return self.constant(self.p)
        if j not in self.generators:
            return GradedPolynomial(self)
        exp = [0] * len(self.generators)
        exp[self.position(j)] = 1
        return GradedPolynomial(self, {tuple(exp): Fraction(1)})

    @property
    def zero(self) -> GradedPolynomial:
        return GradedPolynomial(self)

    @property
    def one(self) -> GradedPolynomial:
        return self.constant(1)

    def coerce(self, value) -> GradedPolynomial:
        if isinstance(value, GradedPolynomial):
            return value
        return self.constant(value)

    def inverse(self, value) -> GradedPolynomial:
        value = self.coerce(value)
        if not value.is_constant() or not value:
            raise SeriesError("only nonzero constants are invertible", module="series", operation="inverse", witness=str(value))
        return self.constant(1 / value.constant_term())

    def degree(self, value):
        return self.coerce(value).homogeneous_degree()

    def format(self, value) -> str:
        return repr(value)
