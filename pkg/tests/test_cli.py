"""Test the command line interface."""

import json

from polus.fglab import config
from polus.fglab.__main__ import app
from typer.testing import CliRunner

runner = CliRunner()

PLANE = {
    "p": 2,
    "n": 1,
    "cells": [
        {"name": "e", "codim": 0},
        {"name": "h", "codim": 1},
        {"name": "pt", "codim": 2, "subvariety": True},
    ],
    "products": [{"a": "h", "b": "h", "lead": {"coef": "1", "cell": "pt"}, "tail": "none"}],
}


def test_cli_dtable_csv() -> None:
    """Test the d-table as CSV against its recursion."""
    result = runner.invoke(app, ["ops", "dtable", "--p", "2", "--n", "1", "--max", "4", "--format", "csv"])
    assert result.exit_code == 0, result.output
    assert result.output.splitlines() == [
        "index,d_constant,d_recursion,match",
        "1,1,1,true",
        "2,2,2,true",
        "3,2,2,true",
        "4,8,8,true",
    ]


def test_cli_fgl_show() -> None:
    """Test the JSON summary of K(1)."""
    result = runner.invoke(app, ["fgl", "show", "--p", "2", "--n", "1", "--cap-degree", "12"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["height"] == 1
    assert payload["integral"] is True
    assert payload["pn_typical"] is True
    assert payload["axioms"] == "ok"


def test_cli_iso_identity() -> None:
    """Test that a law is isomorphic to itself through x."""
    result = runner.invoke(app, ["fgl", "iso", "--p", "2", "--left", "morava", "--right", "morava", "--cap-degree", "10"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["gamma"] == "x"
    assert payload["integral"] is True


def test_cli_iso_expectation_mismatch() -> None:
    """Test exit 2 when a stated integrality does not hold."""
    args = ["fgl", "iso", "--p", "3", "--left", "morava:1", "--right", "morava:2", "--cap-degree", "10"]
    result = runner.invoke(app, args + ["--expect", "integral"])
    assert result.exit_code == 2
    assert json.loads(result.output)["first_non_integral"] == {"degree": 3, "coefficient": "1/3"}
    result = runner.invoke(app, args + ["--expect", "non-integral"])
    assert result.exit_code == 0


def test_cli_rejects_bad_input() -> None:
    """Test exit 1 on a composite prime and an unknown format."""
    assert runner.invoke(app, ["ops", "dtable", "--p", "4"]).exit_code == 1
    assert runner.invoke(app, ["ops", "dtable", "--format", "xml"]).exit_code == 1
    assert runner.invoke(app, ["fgl", "show", "--law", "formal"]).exit_code == 1


def test_cli_closed_form_constants() -> None:
    """Test the CSV header of the constants table."""
    result = runner.invoke(app, ["chern", "constants", "--closed-form", "--p", "2", "--n", "1", "--j-max", "3", "--format", "csv"])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == "index,constant,value,vp,caps"
    assert "2,chi(3)@3,18,1,\"closed form, k=3\"" in lines


def test_cli_gamma_pfister() -> None:
    """Test the Pfister quadric for n = 1 with a soundness sample."""
    result = runner.invoke(app, ["gamma", "pfister", "--p", "2", "--n", "1", "--samples", "1", "--seed", "3"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["degrees"]["2"]["torsion"] == ["2"]
    assert payload["degrees"]["1"]["free_rank"] == 1
    assert payload["soundness"]["failures"] == []


def test_cli_gamma_compute(tmp_path) -> None:
    """Test gamma bounds of a variety read from JSON, written with --out."""
    variety = tmp_path / "plane.json"
    variety.write_text(json.dumps(PLANE))
    out = tmp_path / "report.json"
    result = runner.invoke(app, ["gamma", "compute", "--variety", str(variety), "--out", str(out)])
    assert result.exit_code == 0
    assert result.output == ""
    payload = json.loads(out.read_text())
    assert [payload["degrees"][str(i)]["free_rank"] for i in range(3)] == [1, 1, 1]
    assert payload["degrees"]["2"]["tau_basis"] == ["pt"]


def test_cli_gamma_compute_missing_file(tmp_path) -> None:
    """Test exit 1 on an unreadable variety."""
    result = runner.invoke(app, ["gamma", "compute", "--variety", str(tmp_path / "absent.json")])
    assert result.exit_code == 1


def test_cli_storage_budget(monkeypatch) -> None:
    """Test exit 3 when a series outgrows FGLAB_MAX_MEMORY_MB."""
    monkeypatch.setattr(config, "FGLAB_MAX_MEMORY_MB", 0)
    result = runner.invoke(app, ["fgl", "show", "--p", "2", "--n", "1", "--cap-degree", "8"])
    assert result.exit_code == 3


def test_cli_is_deterministic() -> None:
    """Test that identical invocations print identical artifacts."""
    args = ["chern", "constants", "--closed-form", "--p", "3", "--n", "1"]
    assert runner.invoke(app, args).output == runner.invoke(app, args).output


def test_cli_fgl_show_congruence_defects() -> None:
    """Test that a_k not congruent to a_1^k is reported for a Morava law."""
    result = runner.invoke(app, ["fgl", "show", "--p", "3", "--n", "1", "--law", "morava:2", "--cap-degree", "9"])
    payload = json.loads(result.output)
    assert payload["a"] == ["2", "2"]
    assert payload["congruence_defects"] == [2]
