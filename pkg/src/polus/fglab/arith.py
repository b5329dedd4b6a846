"""Exact rational arithmetic with p-local structure.

The scalar everywhere is ``fractions.Fraction``. This module adds p-adic
valuations, integrality and unit tests, and the p-adic balls used by the
integrality solver.
"""
import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Annotated, Iterator

from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator
from sympy import isprime, multiplicity

from .errors import InputError

ExactRational = Fraction

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


@lru_cache(maxsize=512)
def _is_prime(p: int) -> bool:
    return bool(isprime(p))


def require_prime(p: int, operation: str = "require_prime") -> int:
    """Return p if it is a prime number, raise InputError otherwise."""
    if isinstance(p, bool) or not isinstance(p, int) or p < 2 or not _is_prime(p):
        raise InputError("not a prime", module="arith", operation=operation, witness=f"p={p}")
    return p


def parse_rational(value) -> Fraction:
    """Parse an int, a Fraction or a "num/den" string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError("booleans are not rationals", module="arith", operation="parse_rational", witness=value)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL_RE.match(text):
            raise InputError("expected 'num/den'", module="arith", operation="parse_rational", witness=value)
        try:
            return Fraction(text)
        except ZeroDivisionError as err:
            raise InputError("zero denominator", module="arith", operation="parse_rational", witness=value) from err
    raise InputError("unsupported rational", module="arith", operation="parse_rational", witness=repr(value))


def format_rational(value: Fraction) -> str:
    """Format as "num/den", den omitted when 1, sign carried by the numerator."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# pydantic field type for exact rationals, serialized as "num/den"
Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]


def _vp_int(value: int, p: int) -> int:
    return int(multiplicity(p, abs(value)))


def vp(x, p: int) -> int | float:
    """p-adic valuation of a rational; ``math.inf`` for zero."""
    require_prime(p, "vp")
    x = Fraction(x)
    if x == 0:
        return math.inf
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def is_p_integral(x, p: int) -> bool:
    """True iff x lies in Z_(p)."""
    require_prime(p, "is_p_integral")
    return Fraction(x).denominator % p != 0


def is_p_unit(x, p: int) -> bool:
    """True iff x is a unit of Z_(p)."""
    require_prime(p, "is_p_unit")
    x = Fraction(x)
    return x != 0 and x.numerator % p != 0 and x.denominator % p != 0


def power_of(p: int, k: int) -> Fraction:
    """p**k as a Fraction, for any integer k."""
    return Fraction(p) ** k


class PadicBall(BaseModel):
    """The set {x : vp(x - center) >= radius_exponent}."""

    model_config = ConfigDict(frozen=True)

    center: Rational
    radius_exponent: int

    def contains(self, x, p: int) -> bool:
        return vp(Fraction(x) - self.center, p) >= self.radius_exponent

    def contains_zero(self, p: int) -> bool:
        return vp(self.center, p) >= self.radius_exponent


def ball_intersect(balls: list[PadicBall], p: int) -> PadicBall | None:
    """Exact intersection of p-adic balls; None marks the empty set.

    Two balls are either nested or disjoint, so folding keeps the smaller
    ball whenever its center lies in the larger one.
    """
    require_prime(p, "ball_intersect")
    if not balls:
        raise InputError("empty list of balls", module="arith", operation="ball_intersect")
    current = balls[0]
    for ball in balls[1:]:
        small, big = (ball, current) if ball.radius_exponent > current.radius_exponent else (current, ball)
        if vp(small.center - big.center, p) < big.radius_exponent:
            return None
        current = small
    return current


def canonical_pick(ball: PadicBall | None, p: int) -> Fraction:
    """Deterministic representative of a ball.

    Returns 0 when the ball contains 0. Otherwise returns the p-adic expansion
    of the center cut to the digits nu <= j <= k, with nu = vp(center) and
    k the radius exponent. The digit at j = k is kept, so the ball
    vp(x - 3/2) >= 0 at p = 2 picks 3/2 rather than 1/2.
    """
    require_prime(p, "canonical_pick")
    if ball is None:
        raise InputError("empty ball", module="arith", operation="canonical_pick")
    center = ball.center
    k = ball.radius_exponent
    nu = vp(center, p)
    if nu >= k:
        return Fraction(0)
    unit = center / power_of(p, nu)
    modulus = p ** (k - nu + 1)
    digits = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
    return Fraction(digits) * power_of(p, nu)


def ball_alternatives(ball: PadicBall, p: int, count: int) -> Iterator[Fraction]:
    """Yield ``count`` further representatives pick + t p^k, t = 1..count."""
    pick = canonical_pick(ball, p)
    step = power_of(p, ball.radius_exponent)
    for t in range(1, count + 1):
        yield pick + t * step


def padic_digits(x, p: int, upto: int) -> list[tuple[int, int]]:
    """Digits (j, c_j) of the p-adic expansion of x for vp(x) <= j <= upto."""
    require_prime(p, "padic_digits")
    x = Fraction(x)
    if x == 0:
        return []
    nu = vp(x, p)
    if nu > upto:
        return []
    unit = x / power_of(p, nu)
    modulus = p ** (upto - nu + 1)
    value = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
    digits = []
    for j in range(nu, upto + 1):
        value, digit = divmod(value, p)
        if digit:
            digits.append((j, digit))
    return digits
