"""Test p-local rational arithmetic."""

from fractions import Fraction
import math

import pytest

from polus.fglab.arith import (
    PadicBall,
    ball_alternatives,
    ball_intersect,
    canonical_pick,
    format_rational,
    is_p_integral,
    is_p_unit,
    padic_digits,
    parse_rational,
    require_prime,
    vp,
)
from polus.fglab.errors import InputError


def test_vp() -> None:
    """Test valuations of rationals, zero included."""
    assert vp(Fraction(12), 2) == 2
    assert vp(Fraction(3, 8), 2) == -3
    assert vp(Fraction(5, 7), 3) == 0
    assert vp(0, 5) == math.inf


def test_integrality_and_units() -> None:
    """Test membership in Z_(p) and in its units."""
    assert is_p_integral(Fraction(1, 3), 2)
    assert not is_p_integral(Fraction(1, 6), 2)
    assert is_p_unit(Fraction(5, 3), 2)
    assert not is_p_unit(Fraction(4, 3), 2)
    assert not is_p_unit(0, 2)


def test_require_prime() -> None:
    """Test that composite, small and boolean primes are rejected."""
    assert require_prime(7) == 7
    for bad in (1, 4, 0, -3, True):
        with pytest.raises(InputError):
            require_prime(bad)


def test_parse_and_format_rational() -> None:
    """Test the num/den text form."""
    assert parse_rational("-3/6") == Fraction(-1, 2)
    assert parse_rational(4) == Fraction(4)
    assert format_rational(Fraction(-1, 2)) == "-1/2"
    assert format_rational(Fraction(6, 3)) == "2"
    for bad in ("1/0", "x", "1.5", True):
        with pytest.raises(InputError):
            parse_rational(bad)


def test_ball_intersection() -> None:
    """Test that balls are nested or disjoint."""
    big = PadicBall(center=Fraction(1), radius_exponent=1)
    small = PadicBall(center=Fraction(3), radius_exponent=3)
    assert ball_intersect([big, small], 2) == small
    other = PadicBall(center=Fraction(2), radius_exponent=2)
    assert ball_intersect([big, other], 2) is None


def test_canonical_pick() -> None:
    """Test the deterministic representative of a ball."""
    assert canonical_pick(PadicBall(center=Fraction(8), radius_exponent=2), 2) == 0
    ball = PadicBall(center=Fraction(1, 3), radius_exponent=2)
    pick = canonical_pick(ball, 2)
    assert pick == 3
    assert ball.contains(pick, 2)
    assert canonical_pick(PadicBall(center=Fraction(5), radius_exponent=3), 2) == 5
    assert canonical_pick(PadicBall(center=Fraction(3, 2), radius_exponent=0), 2) == Fraction(3, 2)
    with pytest.raises(InputError):
        canonical_pick(None, 2)


def test_ball_alternatives() -> None:
    """Test that alternatives stay in the ball and are distinct."""
    ball = PadicBall(center=Fraction(1, 3), radius_exponent=2)
    values = list(ball_alternatives(ball, 2, 3))
    assert values == [7, 11, 15]
    assert all(ball.contains(v, 2) for v in values)


def test_padic_digits() -> None:
    """Test the p-adic expansion of a rational."""
    assert padic_digits(Fraction(11), 2, 4) == [(0, 1), (1, 1), (3, 1)]
    assert padic_digits(Fraction(-1), 3, 2) == [(0, 2), (1, 2), (2, 2)]
    assert padic_digits(0, 2, 3) == []
