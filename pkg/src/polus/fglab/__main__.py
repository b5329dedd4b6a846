"""fglab cli."""
from pathlib import Path
from typing import Any

import typer
from pydantic import ValidationError

from .logger import get_logger
from .runner import RunConfig, run

logger = get_logger(__file__)

app = typer.Typer(help="Exact computations with formal group laws and Morava K-theory operations.")
fgl_app = typer.Typer(help="Formal group laws: properties, isomorphisms, BP{n}.")
ops_app = typer.Typer(help="Additive operations: generators, d-table, non-existence checks.")
chern_app = typer.Typer(help="Chern classes and their constants.")
gamma_app = typer.Typer(help="Gamma filtration bounds on cellular varieties.")
app.add_typer(fgl_app, name="fgl")
app.add_typer(ops_app, name="ops")
app.add_typer(chern_app, name="chern")
app.add_typer(gamma_app, name="gamma")

P_OPTION = typer.Option(2, "--p", help="Prime p.")
N_OPTION = typer.Option(1, "--n", help="Height n of the source K(n).")
ARITY_OPTION = typer.Option(None, "--cap-arity", help="Number of projective-space factors checked.")
DEGREE_OPTION = typer.Option(None, "--cap-degree", help="Total degree cap of every series.")
MAX_INDEX_OPTION = typer.Option(None, "--max-index", "--max", help="Largest index computed.")
OUT_OPTION = typer.Option(None, "--out", help="Write the artifact here instead of stdout.")
FORMAT_OPTION = typer.Option("json", "--format", help="json, csv or text.")


def _execute(command: str, options: dict[str, Any] | None = None, inputs: list[Path] | None = None, **fields: Any) -> None:
    try:
        cfg = RunConfig(command=command, options=options or {}, inputs=inputs or [], **fields)
    except (ValidationError, ValueError) as err:
        logger.error(f"[cli.{command}] {err}")
        raise typer.Exit(1)
    code = run(cfg)
    raise typer.Exit(code)


@fgl_app.command("show")
def fgl_show(
    law: str = typer.Option("morava", "--law", help="morava[:a1,a2,...], multiplicative[:beta], additive or a law JSON path."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Law, exp, [p]-series, height and typicality of one formal group law."""
    _execute("fgl show", {"law": law}, p=p, n=n, cap_degree=cap_degree, fmt=fmt, out=out)


@fgl_app.command("iso")
def fgl_iso(
    left: str = typer.Option("morava", "--left", help="Law F1 (same forms as --law)."),
    right: str = typer.Option("morava", "--right", help="Law F2 (same forms as --law)."),
    verify_cap: int | None = typer.Option(None, "--verify-cap", help="Verify the intertwining identity up to this degree."),
    expect: str | None = typer.Option(None, "--expect", help="integral or non-integral; a different outcome exits 2."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Strict isomorphism exp_1(log_2(x)) from F2 to F1 and its integrality."""
    options = {"left": left, "right": right, "verify_cap": verify_cap, "expect": expect}
    _execute("fgl iso", options, p=p, n=n, cap_degree=cap_degree, fmt=fmt, out=out)


@fgl_app.command("bpn-check")
def fgl_bpn_check(
    m: int = typer.Option(4, "--m", help="Number of Araki generators."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Specialize the Araki logarithm to BP{n} and check its exponents."""
    _execute("fgl bpn-check", {"m": m}, p=p, n=n, cap_degree=cap_degree, fmt=fmt, out=out)


@ops_app.command("generator")
def ops_generator(
    lead: str = typer.Option("1", "--lead", help="Lead codimension, or a comma-separated list."),
    target_n: int | None = typer.Option(None, "--target-n", help="Height of the target K(m); 0 for Chow. Default n."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    cap_arity: int | None = ARITY_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Solve integral generators p^e ch_i + ... of the additive operations."""
    options = {"lead": lead, "target_n": target_n}
    _execute("ops generator", options, p=p, n=n, cap_arity=cap_arity, cap_degree=cap_degree, fmt=fmt, out=out)


@ops_app.command("dtable")
def ops_dtable(
    p: int = P_OPTION,
    n: int = N_OPTION,
    max_index: int | None = MAX_INDEX_OPTION,
    cap_arity: int | None = ARITY_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Denominators d_i of ch_i by direct search, against their recursion."""
    _execute("ops dtable", p=p, n=n, max_index=max_index, cap_arity=cap_arity, cap_degree=cap_degree, fmt=fmt, out=out)


@ops_app.command("nonexistence")
def ops_nonexistence(
    target_n: int | None = typer.Option(None, "--target-n", help="Height of the target K(m). Default n - 1."),
    lead: int = typer.Option(1, "--lead", help="Lead codimension searched."),
    caps: str = typer.Option("4,8,16", "--caps", help="Comma-separated cap schedule."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Required leading valuation along a cap schedule, with its verdict."""
    options = {"target_n": target_n, "lead": lead, "caps": caps}
    _execute("ops nonexistence", options, p=p, n=n, fmt=fmt, out=out)


@chern_app.command("constants")
def chern_constants(
    k: int | None = typer.Option(None, "--k", help="Adams operation index. Default 3 for p = 2, else a primitive root mod p^2."),
    j_max: int = typer.Option(3, "--j-max", help="Largest j of e_j, h_j and f_j."),
    closed_form: bool = typer.Option(False, "--closed-form", help="Closed formulas with unit representatives instead of a tower."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    max_index: int | None = MAX_INDEX_OPTION,
    cap_arity: int | None = ARITY_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Leading constants a_i, e_j, h_j and f_j of the self Chern tower."""
    options = {"k": k, "j_max": j_max, "closed_form": closed_form}
    _execute(
        "chern constants", options,
        p=p, n=n, max_index=max_index, cap_arity=cap_arity, cap_degree=cap_degree, fmt=fmt, out=out,
    )


@chern_app.command("tower")
def chern_tower(
    target: str = typer.Option("chow", "--target", help="chow or self."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    max_index: int | None = MAX_INDEX_OPTION,
    cap_arity: int | None = ARITY_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Build the Chern tower and check Cartan, support and mu/b invariants."""
    _execute(
        "chern tower", {"target": target},
        p=p, n=n, max_index=max_index, cap_arity=cap_arity, cap_degree=cap_degree, fmt=fmt, out=out,
    )


@gamma_app.command("compute")
def gamma_compute(
    variety: Path = typer.Option(..., "--variety", help="Variety JSON: cells, products, iso_flag."),
    constants: Path | None = typer.Option(None, "--constants", help="Constants JSON from `chern constants --format json`."),
    max_index: int | None = MAX_INDEX_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """Bounds on gr_gamma of a cellular variety."""
    inputs = [variety] + ([constants] if constants is not None else [])
    _execute("gamma compute", inputs=inputs, max_index=max_index, cap_degree=cap_degree, fmt=fmt, out=out)


@gamma_app.command("pfister")
def gamma_pfister(
    samples: int = typer.Option(0, "--samples", help="Random parameter instantiations for the soundness check."),
    seed: int = typer.Option(0, "--seed", help="Seed of the soundness check."),
    p: int = P_OPTION,
    n: int = N_OPTION,
    cap_degree: int | None = DEGREE_OPTION,
    fmt: str = FORMAT_OPTION,
    out: Path | None = OUT_OPTION,
) -> None:
    """gr_gamma of the split Pfister quadric against the predicted torsion."""
    _execute("gamma pfister", {"samples": samples}, p=p, n=n, cap_degree=cap_degree, fmt=fmt, out=out, seed=seed)


if __name__ == "__main__":
    app()
