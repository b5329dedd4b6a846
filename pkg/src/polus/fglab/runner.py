"""Experiment runner behind the command line.

``run`` dispatches a ``RunConfig`` to one handler per subcommand. A handler
returns an ``Artifact``: the payload to emit, and the stated properties it
found violated (exit 2) or could not decide at the given caps (exit 3).
"""
from pathlib import Path
from random import Random
from typing import Any, Callable, Literal

import typer
from pydantic import BaseModel, Field, ValidationError, field_validator

from . import config
from .addops import (
    OperationCaps,
    d_constant,
    d_recursion,
    default_source,
    is_integral,
    required_leading_valuation,
    solve_generator,
    valuation_verdict,
)
from .arith import format_rational, require_prime
from .artifacts import Artifact, Format, emit, load_json, parse_int_list, parse_law
from .chern import (
    ConstantsTable,
    TowerCaps,
    build_tower,
    check_tower_invariants,
    constants_rows,
    lemma_recursion_report,
    mu_and_b,
    verify_cartan,
)
from .errors import CapInsufficientError, ClaimMismatchError, FglabError, InputError
from .fgl import (
    MoravaSpec,
    additive,
    bpn_check,
    congruence_defects,
    first_non_integral,
    height_mod_p,
    is_p_typical,
    is_pn_typical,
    law_to_json,
    morava,
    morava_coefficients,
    strict_iso,
)
from .gamma import (
    GammaReport,
    gamma_generators,
    graded_report,
    guaranteed_span,
    module_from_json,
    pfister,
    pfister_expectation,
    soundness_failures,
)
from .logger import get_logger
from .series import is_pn_gradable, series_to_text

logger = get_logger(__file__)

Command = Literal[
    "fgl show",
    "fgl iso",
    "fgl bpn-check",
    "ops generator",
    "ops dtable",
    "ops nonexistence",
    "chern constants",
    "chern tower",
    "gamma compute",
    "gamma pfister",
]


class RunConfig(BaseModel):
    """One experiment: a subcommand with its prime, caps, inputs and output."""

    command: Command
    p: int = 2
    n: int = Field(1, ge=1)
    cap_arity: int | None = Field(None, ge=1)
    cap_degree: int | None = Field(None, ge=1)
    max_index: int | None = Field(None, ge=1)
    inputs: list[Path] = Field(default_factory=list)
    options: dict[str, Any] = Field(default_factory=dict)
    fmt: Format = "json"
    out: Path | None = None
    seed: int = 0

    @field_validator("p")
    @classmethod
    def check_prime(cls, p: int) -> int:
        return require_prime(p, "RunConfig")

    @property
    def period(self) -> int:
        return self.p**self.n - 1

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value


def _degree(cfg: RunConfig, default: int | None = None) -> int:
    if cfg.cap_degree is not None:
        return cfg.cap_degree
    return config.FGLAB_DEFAULT_CAP if default is None else default


def fgl_show(cfg: RunConfig) -> Artifact:
    cap = _degree(cfg)
    F = parse_law(cfg.option("law", "morava"), cfg.p, cfg.n, cap)
    artifact = Artifact()
    payload = law_to_json(F)
    payload["p_series"] = F.p_series.to_json()
    axioms = F.check_axioms()
    integral = F.is_integral()
    payload["axioms"] = axioms or "ok"
    payload["integral"] = integral
    payload["p_typical"] = is_p_typical(F)
    n = F.n or cfg.n
    payload["pn_typical"] = is_pn_typical(F, n)
    payload["pn_gradable"] = is_pn_gradable(F.p_series, F.p, n)
    if axioms:
        artifact.mismatches.append(f"axiom fails: {axioms}")
    if integral:
        try:
            height = height_mod_p(F)
            payload["height"] = "inf" if height == float("inf") else height
        except CapInsufficientError as err:
            payload["height"] = None
            artifact.insufficient.append(str(err))
    if F.kind == "morava":
        a = morava_coefficients(F, n)
        defects = congruence_defects(a, F.p)
        payload["a"] = [format_rational(x) for x in a]
        payload["congruence_defects"] = defects
        if payload.get("height") not in (None, n) and integral:
            artifact.mismatches.append(f"height {payload['height']} differs from n={n}")
        if not payload["pn_typical"]:
            artifact.mismatches.append("Morava law is not p^n-typical")
        if integral and defects:
            artifact.mismatches.append(f"integral law with a_k not congruent to a_1^k at k={defects}")
    artifact.payload = payload
    return artifact


def fgl_iso(cfg: RunConfig) -> Artifact:
    cap = _degree(cfg)
    left = parse_law(cfg.option("left", "morava"), cfg.p, cfg.n, cap)
    right = parse_law(cfg.option("right", "morava"), cfg.p, cfg.n, cap)
    gamma = strict_iso(left, right, verify=True, verify_cap=cfg.option("verify_cap"))
    failure = first_non_integral(gamma, cfg.p)
    payload = {
        "left": left.label,
        "right": right.label,
        "cap": cap,
        "gamma": series_to_text(gamma),
        "integral": failure is None,
        "first_non_integral": None if failure is None else {"degree": failure[0], "coefficient": format_rational(failure[1])},
    }
    artifact = Artifact(payload=payload)
    expect = cfg.option("expect")
    if expect is not None and (expect == "integral") != (failure is None):
        artifact.mismatches.append(f"expected {expect}, isomorphism is {'integral' if failure is None else 'not integral'}")
    return artifact


def fgl_bpn_check(cfg: RunConfig) -> Artifact:
    report = bpn_check(cfg.n, int(cfg.option("m", 4)), cfg.p, _degree(cfg, 17))
    artifact = Artifact(payload=report.to_json())
    if not report.passed:
        artifact.mismatches.append(f"BP{{{cfg.n}}} logarithm keeps exponents {report.exponents}")
    return artifact


def _target(cfg: RunConfig, target_n: int, cap: int):
    if target_n == 0:
        return additive(cfg.p, cap)
    return morava(MoravaSpec(p=cfg.p, n=target_n), cap)


def ops_generator(cfg: RunConfig) -> Artifact:
    caps = OperationCaps(arity=cfg.cap_arity or 8, degree=_degree(cfg))
    target_n = int(cfg.option("target_n", cfg.n))
    source = default_source(cfg.p, cfg.n, caps.degree)
    target = _target(cfg, target_n, caps.degree)
    leads = parse_int_list(str(cfg.option("lead", "1")))
    pn = cfg.p**cfg.n
    artifact = Artifact(header=["lead", "leading_valuation", "expected", "lambda"], rows=[])
    operations = {}
    for lead in leads:
        op = solve_generator(source, target, lead, caps)
        if not is_integral(op).ok:
            artifact.mismatches.append(f"lead {lead}: solved operation is not integral")
        expected = None
        if target_n == cfg.n and lead <= pn:
            expected = 1 if lead == pn else 0
            if op.leading_valuation != expected:
                artifact.mismatches.append(f"lead {lead}: leading valuation {op.leading_valuation}, expected {expected}")
        data = op.to_json()
        operations[str(lead)] = data
        lam = data.get("lambda", data.get("multipliers", {}))
        artifact.rows.append([
            str(lead),
            str(op.leading_valuation),
            "" if expected is None else str(expected),
            " ".join(f"{s}:{v}" for s, v in lam.items()),
        ])
    artifact.payload = {"source": source.label, "target": target.label, "operations": operations}
    return artifact


def ops_dtable(cfg: RunConfig) -> Artifact:
    i_max = cfg.max_index or 6
    recursion = d_recursion(cfg.p, cfg.n, i_max)
    artifact = Artifact(header=["index", "d_constant", "d_recursion", "match"], rows=[])
    for i in range(1, i_max + 1):
        cap = i + 2 * cfg.period
        caps = OperationCaps(arity=cfg.cap_arity or cap, degree=cfg.cap_degree or cap)
        direct = d_constant(cfg.p, cfg.n, i, caps)
        match = direct == recursion[i - 1]
        if not match:
            artifact.mismatches.append(f"d_{i}: search {format_rational(direct)}, recursion {format_rational(recursion[i - 1])}")
        artifact.rows.append([str(i), format_rational(direct), format_rational(recursion[i - 1]), str(match).lower()])
    return artifact


def ops_nonexistence(cfg: RunConfig) -> Artifact:
    schedule = parse_int_list(str(cfg.option("caps", "4,8,16")))
    target_n = int(cfg.option("target_n", max(cfg.n - 1, 1)))
    lead = int(cfg.option("lead", 1))
    top = max(schedule)
    source = default_source(cfg.p, cfg.n, top)
    target = _target(cfg, target_n, top)
    valuations = required_leading_valuation(source, target, lead, schedule)
    verdict = valuation_verdict(valuations)
    expected = "diverging" if target_n < cfg.n else "bounded" if target_n == cfg.n else None
    artifact = Artifact(
        payload={
            "source": source.label,
            "target": target.label,
            "lead": lead,
            "caps": schedule,
            "valuations": valuations,
            "verdict": verdict,
            "expected": expected,
        },
        header=["cap", "leading_valuation"],
        rows=[[str(c), "" if v is None else str(v)] for c, v in zip(schedule, valuations)],
    )
    if verdict == "inconclusive":
        artifact.insufficient.append(f"valuations {valuations} decide nothing")
    elif expected is not None and verdict != expected:
        artifact.mismatches.append(f"verdict {verdict}, expected {expected}")
    return artifact


def chern_constants(cfg: RunConfig) -> Artifact:
    j_max = int(cfg.option("j_max", 3))
    k = cfg.option("k")
    k = None if k is None else int(k)
    artifact = Artifact(header=["index", "constant", "value", "vp", "caps"])
    if cfg.option("closed_form", False):
        table = ConstantsTable.closed_form(cfg.p, cfg.n, j_max, k)
    else:
        pn = cfg.p**cfg.n
        reach = 1 + j_max * cfg.period
        caps = TowerCaps(
            max_index=cfg.max_index or pn,
            arity=cfg.cap_arity or reach,
            degree=cfg.cap_degree or reach,
        )
        source = default_source(cfg.p, cfg.n, caps.degree)
        tower = build_tower(source, source, caps)
        for violation in check_tower_invariants(tower):
            artifact.mismatches.append(f"c_{violation.index}({violation.arity}): {violation.kind} {violation.detail}")
        try:
            recursion = lemma_recursion_report(tower)
            if not recursion.ok:
                bad = [row for row in recursion.rows if not row.ok]
                artifact.mismatches.append(f"alpha/beta recursion fails at arity {bad[0].arity} ({bad[0].coefficient})")
        except CapInsufficientError as err:
            artifact.insufficient.append(str(err))
        table = ConstantsTable.from_tower(tower, k, j_max)
    artifact.rows = constants_rows(table)
    artifact.payload = table.model_dump(mode="json")
    return artifact


def chern_tower(cfg: RunConfig) -> Artifact:
    target_kind = cfg.option("target", "chow")
    pn = cfg.p**cfg.n
    caps = TowerCaps(max_index=cfg.max_index or 2 * pn, arity=cfg.cap_arity or 6, degree=_degree(cfg, 12))
    source = default_source(cfg.p, cfg.n, caps.degree)
    if target_kind == "chow":
        target = additive(cfg.p, caps.degree)
    elif target_kind == "self":
        target = source
    else:
        raise InputError("target is chow or self", module="cli", operation="chern tower", witness=target_kind)
    tower = build_tower(source, target, caps)
    artifact = Artifact(payload=tower.to_json())
    for violation in check_tower_invariants(tower):
        artifact.mismatches.append(f"c_{violation.index}({violation.arity}): {violation.kind} {violation.detail}")
    top = min(6, caps.degree)
    cartan = {}
    for total in range(2, top + 1):
        for a in range(1, total):
            b = total - a
            if max(a, b) > caps.arity:
                continue
            ok = verify_cartan(tower, a, b)
            cartan[f"{a}+{b}"] = ok
            if not ok:
                artifact.mismatches.append(f"Cartan identity fails on blocks {a}, {b}")
    artifact.payload["cartan"] = cartan
    if target_kind == "chow":
        try:
            rows = mu_and_b(cfg.p, cfg.n, tower.max_index, chow_tower=tower)
            artifact.header = ["index", "d", "mu", "b"]
            artifact.rows = [[str(r.index), format_rational(r.d_recursion), str(r.mu), format_rational(r.b)] for r in rows]
            artifact.payload["mu_b"] = [r.model_dump(mode="json") for r in rows]
        except ClaimMismatchError as err:
            artifact.mismatches.append(str(err))
    return artifact


def _gamma_artifact(report: GammaReport) -> Artifact:
    return Artifact(
        payload=report.to_json(),
        header=["degree", "tau_basis", "free_rank", "torsion", "bound"],
        rows=[
            [str(d.degree), " ".join(d.tau_basis), str(d.free_rank), " ".join(d.torsion), d.bound]
            for d in report.degrees
        ],
    )


def gamma_compute(cfg: RunConfig) -> Artifact:
    if not cfg.inputs:
        raise InputError("a variety JSON is required", module="cli", operation="gamma compute")
    module = module_from_json(load_json(cfg.inputs[0]))
    if len(cfg.inputs) > 1:
        constants = ConstantsTable.model_validate(load_json(cfg.inputs[1]))
    else:
        constants = ConstantsTable.closed_form(module.p, module.n, j_max=max((module.dimension - 1) // module.period, 1))
    i_max = cfg.max_index if cfg.max_index is not None else module.dimension
    report = graded_report(module, constants, min(i_max, module.dimension), cfg.cap_degree)
    return _gamma_artifact(report)


def gamma_pfister(cfg: RunConfig) -> Artifact:
    module = pfister(cfg.n, cfg.p)
    constants = ConstantsTable.closed_form(module.p, module.n, j_max=max((module.dimension - 1) // module.period, 1))
    top = 2**cfg.n
    report = graded_report(module, constants, top, cfg.cap_degree)
    artifact = _gamma_artifact(report)
    for i, (rank, torsion) in sorted(pfister_expectation(cfg.n).items()):
        found = report.degree(i)
        if (found.free_rank, found.torsion) != (rank, torsion):
            artifact.mismatches.append(f"gr^{i}: rank {found.free_rank} torsion {found.torsion}, expected rank {rank} torsion {torsion}")
    samples = int(cfg.option("samples", 0))
    if samples:
        order = [c.name for c in module.ordered()]
        generators = gamma_generators(module, top + 1, cfg.cap_degree, constants)
        span = guaranteed_span(generators, module.p, order)
        failures = soundness_failures(generators, span, Random(cfg.seed), samples)
        artifact.payload["soundness"] = {"samples": samples, "seed": cfg.seed, "failures": failures}
        if failures:
            artifact.mismatches.append(f"guaranteed rows outside a sampled span: {failures}")
    return artifact


HANDLERS: dict[str, Callable[[RunConfig], Artifact]] = {
    "fgl show": fgl_show,
    "fgl iso": fgl_iso,
    "fgl bpn-check": fgl_bpn_check,
    "ops generator": ops_generator,
    "ops dtable": ops_dtable,
    "ops nonexistence": ops_nonexistence,
    "chern constants": chern_constants,
    "chern tower": chern_tower,
    "gamma compute": gamma_compute,
    "gamma pfister": gamma_pfister,
}


def run(cfg: RunConfig) -> int:
    """Run one experiment and emit its artifact; returns the exit status."""
    logger.info(f"{cfg.command}: p={cfg.p} n={cfg.n} caps={cfg.cap_arity}/{cfg.cap_degree} max_index={cfg.max_index}")
    try:
        artifact = HANDLERS[cfg.command](cfg)
        text = emit(artifact, cfg.fmt, cfg.out)
    except FglabError as err:
        logger.error(str(err))
        return err.exit_code
    except (ValidationError, ValueError, OSError) as err:
        logger.error(f"[cli.{cfg.command}] {err}")
        return 1
    if cfg.out is None:
        typer.echo(text, nl=False)
    for mismatch in artifact.mismatches:
        logger.error(f"[{cfg.command}] claim mismatch: {mismatch}")
    for reason in artifact.insufficient:
        logger.warning(f"[{cfg.command}] caps insufficient: {reason}")
    if artifact.mismatches:
        return ClaimMismatchError.exit_code
    if artifact.insufficient:
        return CapInsufficientError.exit_code
    return 0
