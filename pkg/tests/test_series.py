"""Test truncated power series and coefficient rings."""

from fractions import Fraction

import pytest

from polus.fglab import config
from polus.fglab.errors import CapInsufficientError, SeriesError
from polus.fglab.rings import GradedPolynomialRing
from polus.fglab.series import (
    TruncatedSeries,
    compose_univariate,
    expand_symmetric,
    is_pn_gradable,
    partitions,
    reverse,
    series_to_text,
    substitute,
    symmetric_product_expand,
)


def _gradable(rng, p: int, n: int, cap: int) -> TruncatedSeries:
    period = p**n - 1
    coefficients = {1: Fraction(1)}
    for k in range(1 + period, cap + 1, period):
        coefficients[k] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return TruncatedSeries.univariate(coefficients, "x", cap)


def test_product_is_truncated() -> None:
    """Test that products drop terms above the cap."""
    x = TruncatedSeries.variable("x", ("x",), 3)
    f = (1 + x) * (1 - x)
    assert f == TruncatedSeries.univariate({0: 1, 2: -1}, "x", 3)
    assert (x**4).terms == {}
    assert (x + x).coefficient((1,)) == 2


def test_mixed_frames_are_rejected() -> None:
    """Test that series in different variables do not mix."""
    x = TruncatedSeries.variable("x", ("x",), 3)
    y = TruncatedSeries.variable("y", ("y",), 3)
    with pytest.raises(SeriesError):
        x + y
    with pytest.raises(SeriesError):
        TruncatedSeries(("x", "x"), 3)


def test_reverse_of_log() -> None:
    """Test that the reverse of log(1 + x) is exp(x) - 1."""
    log = TruncatedSeries.univariate({k: Fraction((-1) ** (k - 1), k) for k in range(1, 7)}, "x", 6)
    exp = reverse(log)
    assert exp.univariate_coefficients() == {1: 1, 2: Fraction(1, 2), 3: Fraction(1, 6), 4: Fraction(1, 24), 5: Fraction(1, 120), 6: Fraction(1, 720)}
    assert compose_univariate(exp, log) == TruncatedSeries.variable("x", ("x",), 6)
    assert compose_univariate(log, exp) == TruncatedSeries.variable("x", ("x",), 6)


def test_reverse_needs_unit_lead() -> None:
    """Test that a series without a unit linear term has no reverse."""
    with pytest.raises(SeriesError):
        reverse(TruncatedSeries.univariate({2: 1}, "x", 4))
    with pytest.raises(SeriesError):
        reverse(TruncatedSeries.univariate({0: 1, 1: 1}, "x", 4))


def test_gradability_closure(rng) -> None:
    """Test that composition and reversion keep p^n-gradability."""
    for p, n in ((2, 2), (3, 1), (2, 3)):
        for _ in range(3):
            f = _gradable(rng, p, n, 15)
            g = _gradable(rng, p, n, 15)
            assert is_pn_gradable(f, p, n)
            assert is_pn_gradable(compose_univariate(f, g), p, n)
            assert is_pn_gradable(reverse(f), p, n)


def test_gradability_of_squares() -> None:
    """Test that x^2 is not gradable for p^n - 1 > 1."""
    f = TruncatedSeries.univariate({1: 1, 2: 1}, "x", 4)
    assert not is_pn_gradable(f, 2, 2)
    assert is_pn_gradable(f, 2, 1)


def test_substitute_truncation_compatibility(rng) -> None:
    """Test that substitution commutes with lowering the cap."""
    frame = ("x", "y")
    for _ in range(3):
        f = TruncatedSeries(frame, 6, {(i, j): rng.randint(-3, 3) for i in range(4) for j in range(4) if 0 < i + j})
        u = TruncatedSeries(("s", "t"), 6, {(1, 0): 1, (1, 1): rng.randint(-2, 2), (0, 2): rng.randint(-2, 2)})
        v = TruncatedSeries(("s", "t"), 6, {(0, 1): 1, (2, 0): rng.randint(-2, 2)})
        full = substitute(f, {"x": u, "y": v})
        for cap in (2, 4):
            low = substitute(f.truncate(cap), {"x": u.truncate(cap), "y": v.truncate(cap)})
            assert full.truncate(cap) == low


def test_substitute_rejects_constant_terms() -> None:
    """Test that a replacement with a constant term needs polynomial mode."""
    f = TruncatedSeries.univariate({2: 1}, "x", 4)
    shifted = TruncatedSeries.univariate({0: 1, 1: 1}, "s", 4)
    with pytest.raises(SeriesError):
        substitute(f, {"x": shifted})
    square = substitute(f, {"x": shifted}, polynomial=True)
    assert square == TruncatedSeries.univariate({0: 1, 1: 2, 2: 1}, "s", 4)


def test_symmetric_product_expand() -> None:
    """Test the degree-3 part of f(z1) f(z2) for f = x + x^2."""
    f = TruncatedSeries.univariate({1: 1, 2: 1}, "x", 4)
    g = symmetric_product_expand(f, 2, 3)
    assert g.variables == ("z1", "z2")
    assert g.terms == {(2, 1): 1, (1, 2): 1}
    assert g.is_symmetric()
    assert g.divisible_by_variables()
    assert g.symmetric_coefficients() == {(2, 1): 1}


def test_expand_symmetric() -> None:
    """Test materializing a partition-indexed view."""
    g = expand_symmetric({(2, 1): Fraction(3), (1, 1, 1): Fraction(1)}, ("a", "b", "c"), 3)
    assert len(g.terms) == 7
    assert g.coefficient((0, 1, 2)) == 3
    assert g.coefficient((1, 1, 1)) == 1


def test_partitions() -> None:
    """Test partitions into exactly k parts."""
    assert set(partitions(5, 2)) == {(4, 1), (3, 2)}
    assert partitions(2, 3) == ()
    assert partitions(0, 0) == ((),)


def test_storage_budget(monkeypatch) -> None:
    """Test that a zero storage budget fails cleanly."""
    monkeypatch.setattr(config, "FGLAB_MAX_MEMORY_MB", 0)
    with pytest.raises(CapInsufficientError):
        TruncatedSeries.univariate({1: 1}, "x", 3)


def test_json_and_text() -> None:
    """Test the serialized and printed forms."""
    f = TruncatedSeries(("x", "y"), 3, {(1, 0): 1, (1, 1): Fraction(-1, 2)})
    assert TruncatedSeries.from_json(f.to_json()) == f
    assert series_to_text(f) == "x + (-1/2)*x*y"
    assert series_to_text(TruncatedSeries.zero(("x",), 2)) == "0"


def test_graded_polynomials() -> None:
    """Test graded arithmetic over Q[v1, v2]."""
    ring = GradedPolynomialRing(2, [1, 2])
    v1, v2 = ring.generator(1), ring.generator(2)
    assert ring.generator(0) == 2
    assert (v1**3).homogeneous_degree() == -3
    assert v2.homogeneous_degree() == -3
    assert (v1**3 + v2).is_homogeneous()
    assert not (v1 + v2).is_homogeneous()
    assert (v1 * v2 + v1).kill([2]) == v1
    with pytest.raises(SeriesError):
        ring.inverse(v1)
