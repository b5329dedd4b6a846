"""Test gamma filtration bounds on cellular modules."""

from fractions import Fraction
from random import Random

import pytest

from polus.fglab.chern import ConstantsTable
from polus.fglab.errors import ConstantUnavailableError, InputError
from polus.fglab.gamma import (
    ParametricVector,
    ParamPoly,
    cell_vector,
    elementary_divisor_valuations,
    gamma_generators,
    graded_report,
    guaranteed_span,
    instantiate,
    module_from_json,
    multiply,
    op_value,
    padic_span_contains,
    pfister,
    pfister_expectation,
    soundness_failures,
)

PROJECTIVE_PLANE = {
    "p": 2,
    "n": 1,
    "name": "P2",
    "cells": [
        {"name": "e", "codim": 0},
        {"name": "h", "codim": 1},
        {"name": "pt", "codim": 2, "subvariety": True},
    ],
    "products": [{"a": "h", "b": "h", "lead": {"coef": "1", "cell": "pt"}, "tail": "none"}],
}


def _vector(label: str, **entries) -> ParametricVector:
    return ParametricVector(entries=dict(entries), weight=1, label=label)


def test_param_poly() -> None:
    """Test exact arithmetic with unknown parameters."""
    a = ParamPoly.param("a")
    square = (a + 1) * (a - 1)
    assert square == a * a - 1
    assert square.params() == {"a"}
    assert square.evaluate({"a": Fraction(3)}) == 8
    assert not square.is_known()
    assert ParamPoly.known(Fraction(1, 3)).is_integral(2)
    assert not (a * Fraction(1, 2)).is_integral(2)
    assert not (a - a)
    assert repr(ParamPoly()) == "0"


def test_module_validation() -> None:
    """Test the structural checks on a variety description."""
    module = module_from_json(PROJECTIVE_PLANE)
    assert module.dimension == 2
    assert module.unit.name == "e"
    bad_unit = dict(PROJECTIVE_PLANE, cells=PROJECTIVE_PLANE["cells"] + [{"name": "e2", "codim": 0}])
    with pytest.raises(InputError):
        module_from_json(bad_unit)
    bad_lead = dict(PROJECTIVE_PLANE, products=[{"a": "h", "b": "h", "lead": {"coef": "1", "cell": "h"}}])
    with pytest.raises(InputError):
        module_from_json(bad_lead)
    with pytest.raises(InputError):
        module_from_json(dict(PROJECTIVE_PLANE, p=4))


def test_cell_products() -> None:
    """Test known leads and unknown tails of cell products."""
    module = pfister(1)
    assert module.cell_product("h1", "h2") == {"h3": ParamPoly.known(1)}
    product = module.cell_product("h1", "l3")
    assert product["l2"] == ParamPoly.known(1)
    assert set(product) == {"l2", "l1", "l0"}
    assert not product["l1"].is_known()
    assert module.cell_product("h0", "l1") == {"l1": ParamPoly.known(1)}


def test_multiply_adds_weights() -> None:
    """Test that products of cells sit in the sum of their levels."""
    module = module_from_json(PROJECTIVE_PLANE)
    h = cell_vector(module, "h")
    square = multiply(module, h, h)
    assert square.weight == 2
    assert square.entries == {"pt": ParamPoly.known(1)}


def test_guaranteed_span_clears_unknowns() -> None:
    """Test elimination of unknown entries through known pivots."""
    t = ParamPoly.param("t")
    span = guaranteed_span([_vector("v1", a=ParamPoly.known(1), b=t), _vector("v2", b=ParamPoly.known(1))], 2, ["a", "b"])
    assert span.matrix() == [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
    assert [row.pivot for row in span.rows] == ["a", "b"]
    assert span.dropped == []


def test_guaranteed_span_pays_valuation() -> None:
    """Test that a non-unit pivot clears an unknown only after scaling by p^v."""
    t = ParamPoly.param("t")
    span = guaranteed_span([_vector("v1", a=ParamPoly.known(1), b=t), _vector("v2", b=ParamPoly.known(2))], 2, ["a", "b"])
    rows = {row.label: row for row in span.rows}
    assert rows["v1"].entries == {"a": Fraction(2)}
    assert rows["v1"].cost == 1
    assert span.matrix() == [[Fraction(2), Fraction(0)], [Fraction(0), Fraction(2)]]


def test_guaranteed_span_drops_unknown_rows() -> None:
    """Test that a row with an uncleared unknown is not guaranteed."""
    span = guaranteed_span([_vector("v1", a=ParamPoly.param("t"))], 2, ["a"])
    assert span.rows == []
    assert span.dropped == ["v1"]
    with pytest.raises(InputError):
        guaranteed_span([_vector("v1", a=ParamPoly.known(Fraction(1, 2)))], 2, ["a"])


def test_elementary_divisors() -> None:
    """Test p-power elementary divisors over Z_(p)."""
    rows = [[Fraction(2), Fraction(0)], [Fraction(0), Fraction(3)]]
    assert elementary_divisor_valuations(rows, 2, 2) == [0, 1]
    assert elementary_divisor_valuations([[Fraction(4), Fraction(2)]], 2, 2) == [1]
    assert elementary_divisor_valuations([], 2, 2) == []


def test_padic_span_contains() -> None:
    """Test membership in a Z_(p)-span."""
    rows = [[Fraction(2), Fraction(0)]]
    assert padic_span_contains(rows, [Fraction(4), Fraction(0)], 2)
    assert padic_span_contains(rows, [Fraction(6), Fraction(0)], 2)
    assert not padic_span_contains(rows, [Fraction(1), Fraction(0)], 2)
    assert not padic_span_contains(rows, [Fraction(0), Fraction(1)], 2)
    assert padic_span_contains(rows, [Fraction(0), Fraction(0)], 2)


def test_instantiate() -> None:
    """Test evaluating a vector at one parameter value."""
    v = _vector("v", a=ParamPoly.param("s") * 2 + 1)
    assert instantiate(v, {"s": Fraction(3)}) == {"a": Fraction(7)}
    with pytest.raises(InputError):
        instantiate(v, {})


def test_op_value() -> None:
    """Test leading constants and unknown tails of operation values."""
    module = pfister(1)
    constants = ConstantsTable.closed_form(2, 1, j_max=5)
    value = op_value(module, "l3", "chi(3)", constants)
    assert value.entries["l3"] == ParamPoly.known(18)
    assert set(value.entries) == {"l3", "l2", "l1", "l0"}
    assert value.weight == 3
    assert op_value(module, "l3", "chern(2)", constants).weight == 2
    with pytest.raises(InputError):
        op_value(module, "h1", "chern(1)", constants)
    with pytest.raises(InputError):
        op_value(module, "l3", "gamma(2)", constants)
    with pytest.raises(ConstantUnavailableError):
        op_value(module, "l3", "chern(3)", constants)


def test_generators_respect_levels() -> None:
    """Test that every generator of gamma^m has weight at least m."""
    module = pfister(1)
    constants = ConstantsTable.closed_form(2, 1, j_max=5)
    generators = gamma_generators(module, 3, constants=constants)
    assert generators
    assert all(g.weight >= 3 for g in generators)
    assert all(g.leading_codim(module) >= 3 for g in generators)
    with pytest.raises(InputError):
        gamma_generators(module, -1)


def test_projective_plane_report() -> None:
    """Test that gr of P2 is free of rank 1 in each degree."""
    module = module_from_json(PROJECTIVE_PLANE)
    report = graded_report(module, ConstantsTable(p=2, n=1), 2)
    assert [(d.free_rank, d.torsion) for d in report.degrees] == [(1, []), (1, []), (1, [])]
    assert report.degree(2).tau_basis == ["pt"]
    assert report.degree(0).bound == "quotient"


@pytest.mark.parametrize("n", [1, 2])
def test_pfister_report(n: int) -> None:
    """Test gr^i free of rank 1 below 2^n and Z + Z/2 at 2^n."""
    module = pfister(n)
    constants = ConstantsTable.closed_form(2, n, j_max=(module.dimension - 1) // module.period)
    report = graded_report(module, constants, 2**n)
    for i, (rank, torsion) in pfister_expectation(n).items():
        assert report.degree(i).free_rank == rank
        assert report.degree(i).torsion == torsion
    assert report.to_json()["iso_flag"] is True


def test_pfister_inputs() -> None:
    """Test the shape of the split Pfister quadric."""
    module = pfister(1)
    assert module.dimension == 6
    assert len(module.cells) == 8
    with pytest.raises(InputError):
        pfister(1, p=3)
    with pytest.raises(InputError):
        pfister(0)


def test_guaranteed_rows_survive_instantiation() -> None:
    """Test that guaranteed rows lie in the span for random parameter values."""
    module = pfister(1)
    constants = ConstantsTable.closed_form(2, 1, j_max=5)
    generators = gamma_generators(module, 3, constants=constants)
    span = guaranteed_span(generators, 2, [c.name for c in module.ordered()])
    assert span.rows
    assert soundness_failures(generators, span, Random(7), 2) == []


def test_graded_report_rejects_negative_degree() -> None:
    """Test the degree range check."""
    with pytest.raises(InputError):
        graded_report(pfister(1), ConstantsTable.closed_form(2, 1), -1)
