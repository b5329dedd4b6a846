"""Test formal group laws, heights, BP{n} and isomorphisms."""

from fractions import Fraction
import math

import pytest

from polus.fglab.arith import is_p_unit
from polus.fglab.errors import CapInsufficientError, InputError
from polus.fglab.fgl import (
    GradedLawSpec,
    MoravaSpec,
    additive,
    araki_log,
    bpn_check,
    congruence_defects,
    first_non_integral,
    fgl_from_json,
    from_log_coefficients,
    graded_iso_obstruction,
    height_mod_p,
    is_p_typical,
    is_pn_typical,
    iso_is_integral,
    law_to_json,
    m_series,
    morava,
    morava_coefficients,
    multiplicative,
    strict_iso,
    v_n,
)
from polus.fglab.rings import GradedPolynomialRing
from polus.fglab.series import TruncatedSeries, is_pn_gradable, series_to_text

CASES = [(2, 1), (2, 2), (3, 1), (3, 2)]


@pytest.mark.parametrize("p,n", CASES)
def test_morava_core(p: int, n: int) -> None:
    """Test axioms, height, typicality and gradability of K(n)."""
    F = morava(MoravaSpec(p=p, n=n), 16)
    assert F.check_axioms() is None
    assert F.is_integral()
    assert height_mod_p(F) == n
    assert is_pn_typical(F, n)
    assert is_pn_gradable(F.p_series, p, n)
    assert is_p_unit(v_n(F, n), p)


def test_law_basics(k1_p2) -> None:
    """Test the fixture law through F(x, 0) = x and [1](x) = x."""
    x = TruncatedSeries.variable("x", ("x",), 16)
    assert m_series(k1_p2, 1) == x
    assert k1_p2.law.coefficient((1, 0)) == 1
    assert k1_p2.law.coefficient((0, 1)) == 1


def test_typicality_criteria_agree(k1_p2, k2_p2) -> None:
    """Test that K(1) is not 2^2-typical while K(2) is 2-typical."""
    assert not is_pn_typical(k1_p2, 2)
    assert is_pn_typical(k2_p2, 1)
    assert is_p_typical(k1_p2)
    assert not is_p_typical(multiplicative(2, -1, 8))


def test_height_of_simple_laws() -> None:
    """Test heights of the additive and multiplicative laws."""
    assert height_mod_p(additive(3, 8)) == math.inf
    assert height_mod_p(multiplicative(2, -1, 8)) == 1
    with pytest.raises(CapInsufficientError):
        height_mod_p(from_log_coefficients(3, [[1, "1"], [2, "3"]], 2))


def test_height_needs_integral_p_series() -> None:
    """Test that a law with a non-integral [p]-series has no height."""
    F = from_log_coefficients(2, [[1, "1"], [2, "1/8"]], 8)
    with pytest.raises(InputError):
        height_mod_p(F)


def test_morava_spec() -> None:
    """Test padding, unit validation and congruence defects."""
    spec = MoravaSpec(p=3, n=1, a=["2", "2"])
    assert spec.padded(4) == [2, 2, 2, 2]
    assert spec.congruence_defects(3) == [2]
    assert MoravaSpec(p=2, n=1, a=[1, 3, 5]).congruence_defects() == []
    with pytest.raises(ValueError):
        MoravaSpec(p=2, n=1, a=[2])
    with pytest.raises(ValueError):
        MoravaSpec(p=4, n=1)


def test_congruence_defects_of_read_back_coefficients() -> None:
    """Test the congruence check on coefficients read back from a logarithm."""
    a = morava_coefficients(morava(MoravaSpec(p=3, n=1, a=[2]), 9), 1)
    assert a == [2, 2]
    assert congruence_defects(a, 3) == [2]
    assert congruence_defects([Fraction(3), Fraction(9)], 3) == []
    assert congruence_defects([], 2) == []


def test_morava_coefficients_round_trip() -> None:
    """Test that a_i are read back from the logarithm."""
    F = morava(MoravaSpec(p=2, n=1, a=[1, 3, 5]), 16)
    assert morava_coefficients(F, 1) == [1, 3, 5, 5]


def test_araki_first_coefficient() -> None:
    """Test l_1 = v_1 / (p - p^p)."""
    log = araki_log(4, 2, 17)
    ring = GradedPolynomialRing(2, range(1, 5))
    assert log.coefficient((2,)) == ring.generator(1) / (2 - 4)
    assert log.coefficient((1,)) == ring.one


def test_bpn_check() -> None:
    """Test that killing v_j, n not dividing j, leaves x^(p^(ni)) only."""
    report = bpn_check(2, 4, 2, 17)
    assert report.passed
    assert report.killed == [1, 3]
    assert report.exponents == [1, 4, 16]
    assert bpn_check(1, 4, 2, 17).passed


@pytest.mark.parametrize("p", [2, 3])
def test_artin_hasse(p: int) -> None:
    """Test that the multiplicative law and K(1) are integrally isomorphic."""
    gamma = strict_iso(multiplicative(p, -1, 16), morava(MoravaSpec(p=p, n=1), 16))
    assert iso_is_integral(gamma, p)
    assert gamma.coefficient((1,)) == 1


def test_non_integral_iso() -> None:
    """Test that K(1) with a_1 = 1 and a_1 = 2 are not isomorphic over Z_(3)."""
    F1 = morava(MoravaSpec(p=3, n=1, a=[1]), 16)
    F2 = morava(MoravaSpec(p=3, n=1, a=[2]), 16)
    gamma = strict_iso(F1, F2)
    assert first_non_integral(gamma, 3) == (3, Fraction(1, 3))
    assert not iso_is_integral(gamma, 3)


def test_iso_of_identical_laws(k1_p2) -> None:
    """Test that the isomorphism of a law with itself is x."""
    gamma = strict_iso(k1_p2, k1_p2)
    assert series_to_text(gamma) == "x"


def test_iso_across_primes() -> None:
    """Test that laws at different primes are rejected."""
    with pytest.raises(InputError):
        strict_iso(additive(2, 4), additive(3, 4))


def test_graded_iso_obstruction() -> None:
    """Test the congruence b1 alpha^2 = b2 mod p with alpha = a1 / a2."""
    p = 3
    for a1 in (1, 2):
        for a2 in (1, 2):
            for b1 in range(3):
                for b2 in range(3):
                    verdict = graded_iso_obstruction(GradedLawSpec(a=a1, b=b1), GradedLawSpec(a=a2, b=b2), p)
                    alpha = Fraction(a1, a2)
                    expected = (b1 * alpha**2 - b2).numerator % p != 0
                    assert verdict.obstructed == expected
                    assert verdict.alpha == alpha
    assert graded_iso_obstruction(GradedLawSpec(a=1, b=1), GradedLawSpec(a=1, b=0), p).verdict == "obstructed"
    with pytest.raises(InputError):
        graded_iso_obstruction(GradedLawSpec(a=3, b=1), GradedLawSpec(a=1), p)


def test_law_json() -> None:
    """Test law descriptions in both directions."""
    F = fgl_from_json({"kind": "morava", "p": 2, "n": 2, "a": ["1", "3"]}, 16)
    assert morava_coefficients(F, 2) == [1, 3]
    data = law_to_json(F)
    assert data["kind"] == "morava"
    assert data["log"]["vars"] == ["x"]
    G = fgl_from_json({"kind": "log", "coeffs": [[1, "1"], [2, "1/2"]]}, 6, default_p=2)
    assert G.log.coefficient((2,)) == Fraction(1, 2)
    assert fgl_from_json({"kind": "additive"}, 4, default_p=5).p == 5
    for bad in ({"p": 2}, {"kind": "nope", "p": 2}, {"kind": "additive"}):
        with pytest.raises(InputError):
            fgl_from_json(bad, 4)
    with pytest.raises(InputError):
        from_log_coefficients(2, [[1, "2"]], 4)
