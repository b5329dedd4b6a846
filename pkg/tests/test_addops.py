"""Test additive operations between free theories."""

from fractions import Fraction

import pytest

from polus.fglab.addops import (
    Combination,
    DiagonalOperation,
    OperationCaps,
    apply_to_class,
    chern_character_operation,
    compose,
    cross_iso,
    d_constant,
    d_recursion,
    default_source,
    evaluate_G,
    expand_in_basis,
    identity_operation,
    inverse_by_induction,
    invert,
    is_integral,
    required_leading_valuation,
    solve_basis,
    solve_generator,
    valuation_verdict,
    veronese_coefficients,
    veronese_defect,
    veronese_recursion,
)
from polus.fglab.arith import is_p_unit, vp
from polus.fglab.errors import CapInsufficientError, InputError
from polus.fglab.fgl import MoravaSpec, v_n
from polus.fglab.series import TruncatedSeries


def test_d_recursion() -> None:
    """Test the denominators of ch_i from their recursion."""
    assert d_recursion(2, 1, 6) == [1, 2, 2, 8, 8, 16]
    assert d_recursion(2, 2, 8) == [1, 1, 1, 2, 2, 2, 2, 4]
    with pytest.raises(InputError):
        d_recursion(2, 1, 0)


D_TABLE_CASES = [(2, 1, i) for i in range(1, 5)] + [(2, 2, i) for i in range(1, 9)] + [(3, 1, i) for i in range(1, 7)]


@pytest.mark.parametrize("p,n,i", D_TABLE_CASES)
def test_d_constant_matches_recursion(p: int, n: int, i: int) -> None:
    """Test the direct integrality search against the recursion, caps i + 2(p^n - 1)."""
    cap = i + 2 * (p**n - 1)
    assert d_constant(p, n, i, OperationCaps(arity=cap, degree=cap)) == d_recursion(p, n, i)[-1]


def test_d_recursion_below_pn_squared() -> None:
    """Test d_i = p^k for i = k p^n + j with k < p^n."""
    assert d_recursion(3, 1, 6) == [1, 1, 3, 3, 3, 9]
    for p, n in [(2, 1), (2, 2), (3, 1)]:
        pn = p**n
        d = d_recursion(p, n, pn * pn - 1)
        assert all(d[i - 1] == p ** (i // pn) for i in range(1, pn * pn))


def test_d_constant_needs_caps() -> None:
    """Test that caps below i cannot decide d_i."""
    with pytest.raises(CapInsufficientError):
        d_constant(2, 1, 4, OperationCaps(arity=3, degree=6))


def test_chern_character_is_not_integral(k1_small, small_caps) -> None:
    """Test that ch_2 needs the factor 2."""
    op = chern_character_operation(k1_small, 2, small_caps)
    report = is_integral(op)
    assert not report.ok
    assert report.failure.valuation == -1
    assert is_integral(op.scaled(2)).ok


def test_identity_symbols(k1_small, small_caps) -> None:
    """Test that the identity maps z1 z2 to itself."""
    op = identity_operation(k1_small, small_caps)
    G = evaluate_G(op, 2)
    assert G.terms == {(1, 1): 1}
    assert is_integral(op).ok


@pytest.mark.parametrize("lead,expected", [(1, 0), (2, 1)])
def test_generator_leading_valuation(k1_small, small_caps, lead: int, expected: int) -> None:
    """Test leading valuations 0 below p^n and 1 at p^n for K(1) at p = 2."""
    op = solve_generator(k1_small, k1_small, lead, small_caps)
    assert op.leading_valuation == expected
    assert vp(op.lead_coefficient, 2) == expected
    assert op.support_ok()
    assert is_integral(op).ok


def test_generator_for_k2() -> None:
    """Test leading valuations for K(2) at p = 2, below and at p^n."""
    caps = OperationCaps(arity=6, degree=8)
    K = default_source(2, 2, 8)
    assert solve_generator(K, K, 3, caps).leading_valuation == 0
    assert solve_generator(K, K, 4, caps).leading_valuation == 1


def test_symbols_are_symmetric_and_divisible(k1_small, small_caps) -> None:
    """Test that every G_l of a solved operation is symmetric and divisible by z1...zl."""
    op = solve_generator(k1_small, k1_small, 2, small_caps)
    for l in range(1, 4):
        G = evaluate_G(op, l)
        assert G.is_symmetric()
        assert G.divisible_by_variables()
    with pytest.raises(CapInsufficientError):
        evaluate_G(op, 7)


def test_apply_to_class_matches_symbols(k1_small, small_caps) -> None:
    """Test that applying the operation to z1 z2 gives G_2."""
    op = solve_generator(k1_small, k1_small, 1, small_caps)
    names = ("z1", "z2")
    S = TruncatedSeries(names, small_caps.degree, {(1, 1): 1})
    assert apply_to_class(op, S) == evaluate_G(op, 2)


def test_identity_is_veronese_compatible(k1_small, small_caps) -> None:
    """Test pull-back along [2] and the alpha/beta recursion on the identity."""
    op = identity_operation(k1_small, small_caps)
    assert not veronese_defect(op, 2, 2)
    report = veronese_recursion(op, v_n(k1_small, 1))
    assert report.ok
    assert report.rows
    assert veronese_coefficients(op, 3) == {"alpha": 1, "beta": 0, "delta": 0}


def test_adams_rows_of_veronese_recursion(k1_small) -> None:
    """Test the alpha/beta rows for z -> [3](z) on K(1) at p = 2.

    [2](x) = x - x^2 + ..., so c = 2 / (-1) = -2, and [3](x) = 3x - 3x^2 + ...,
    so alpha_l = 3^l, beta_l = -3^l, delta_l = 3^l.
    """
    caps = OperationCaps(arity=4, degree=6)
    psi = DiagonalOperation(
        source=k1_small,
        target=k1_small,
        lead=1,
        multipliers={d: Fraction(3) ** d for d in range(1, 7)},
        caps=caps,
        label="psi_3",
    )
    v = v_n(k1_small, 1)
    assert v == -1
    assert veronese_coefficients(psi, 3) == {"alpha": 27, "beta": -27, "delta": 27}
    report = veronese_recursion(psi, v)
    assert [(row.arity, row.coefficient, row.lhs, row.rhs) for row in report.rows] == [
        (2, "alpha", 9, 9),
        (3, "alpha", 27, 27),
        (3, "beta", -27, -27),
        (4, "alpha", 81, 81),
        (4, "beta", -81, -81),
    ]
    assert report.ok


def test_compose_and_expand(k1_small, small_caps) -> None:
    """Test composition with the identity and expansion in a solved basis."""
    basis = solve_basis(k1_small, k1_small, small_caps)
    assert [b.lead for b in basis] == list(range(1, 7))
    identity = identity_operation(k1_small, small_caps)
    assert compose(basis[2], identity).multipliers == basis[2].multipliers
    assert expand_in_basis(basis[2], basis) == {3: 1}
    with pytest.raises(InputError):
        expand_in_basis(basis[0], list(reversed(basis)))


def test_composition_constants_below_pn(k1_small, small_caps) -> None:
    """Test that phi_i o phi_i has a unit i-th coefficient only below p^n."""
    basis = solve_basis(k1_small, k1_small, small_caps)
    for phi in basis[:4]:
        beta = expand_in_basis(compose(phi, phi), basis).get(phi.lead, Fraction(0))
        if phi.lead < 2:
            assert is_p_unit(beta, 2)
        else:
            assert beta and vp(beta, 2) >= 1


def test_composition_constants_k2() -> None:
    """Test phi_i o phi_i on K(2) at p = 2: unit for i < 4, divisible by 2 for 4 <= i <= 6."""
    K = default_source(2, 2, 8)
    caps = OperationCaps(arity=6, degree=8)
    basis = solve_basis(K, K, caps)
    assert [b.lead for b in basis] == list(range(1, 9))
    assert compose(basis[4], identity_operation(K, caps)).multipliers == basis[4].multipliers
    assert expand_in_basis(basis[2], basis) == {3: 1}
    for phi in basis[:6]:
        beta = expand_in_basis(compose(phi, phi), basis).get(phi.lead, Fraction(0))
        if phi.lead < 4:
            assert is_p_unit(beta, 2)
        else:
            assert beta and vp(beta, 2) >= 1


def test_invert(k1_small, small_caps, rng) -> None:
    """Test that sum a_i phi_i is invertible iff a_i is a unit for i < p^n."""
    basis = solve_basis(k1_small, k1_small, small_caps)
    for _ in range(3):
        coefficients = {i: Fraction(rng.randint(-6, 6)) for i in range(2, 7)}
        coefficients[1] = Fraction(2 * rng.randint(0, 4) + 1)
        result = invert(Combination(coefficients=coefficients, basis=basis))
        assert result.invertible
        assert inverse_by_induction(Combination(coefficients=coefficients, basis=basis)).inverse.coefficients == result.inverse.coefficients
    failed = invert(Combination(coefficients={1: Fraction(2), 2: Fraction(1)}, basis=basis))
    assert not failed.invertible
    assert failed.failure_index == 1


CROSS_ISO_PAIRS = [
    (MoravaSpec(p=2, n=1, a=[1]), MoravaSpec(p=2, n=1, a=[3]), OperationCaps(arity=6, degree=6)),
    (MoravaSpec(p=3, n=1, a=[1]), MoravaSpec(p=3, n=1, a=[2]), OperationCaps(arity=6, degree=6)),
    (MoravaSpec(p=2, n=2, a=[1]), MoravaSpec(p=2, n=2, a=[3]), OperationCaps(arity=6, degree=8)),
]


@pytest.mark.parametrize("spec1,spec2,caps", CROSS_ISO_PAIRS)
def test_cross_iso(spec1: MoravaSpec, spec2: MoravaSpec, caps: OperationCaps) -> None:
    """Test that two K(n)'s with different a_1 are isomorphic through the sum of low generators."""
    report = cross_iso(spec1, spec2, caps)
    assert report.invertible, report.failure
    for i in range(1, spec1.p**spec1.n):
        assert is_p_unit(report.left.get(i, 0), spec1.p)
        assert is_p_unit(report.right.get(i, 0), spec1.p)


def test_cross_iso_rejects_mismatched_type(small_caps) -> None:
    """Test that laws of different height are refused."""
    with pytest.raises(InputError):
        cross_iso(MoravaSpec(p=2, n=1), MoravaSpec(p=2, n=2), small_caps)


def test_valuation_verdict() -> None:
    """Test the verdict on valuation sequences."""
    assert valuation_verdict([1, 2, 4]) == "diverging"
    assert valuation_verdict([0, 0, 0]) == "bounded"
    assert valuation_verdict([0, 1, 1]) == "inconclusive"
    assert valuation_verdict([0, None]) == "inconclusive"
    assert valuation_verdict([]) == "inconclusive"


def test_leading_valuation_bounded_for_self_operations() -> None:
    """Test that K(1) -> K(1) needs no growing leading valuation."""
    source = default_source(2, 1, 8)
    valuations = required_leading_valuation(source, source, 1, [4, 8])
    assert valuation_verdict(valuations) == "bounded"


def test_leading_valuation_diverges_to_lower_height() -> None:
    """Test that K(2) -> K(1) needs a strictly growing leading valuation."""
    source = default_source(2, 2, 16)
    target = default_source(2, 1, 16)
    valuations = required_leading_valuation(source, target, 1, [4, 8, 16])
    assert valuation_verdict(valuations) == "diverging"
