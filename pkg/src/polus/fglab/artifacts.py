"""Reading inputs and writing artifacts for the command line."""
import csv
from io import StringIO
import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field

from .arith import parse_rational
from .errors import InputError
from .fgl import FormalGroupLaw, MoravaSpec, additive, fgl_from_json, morava, multiplicative
from .logger import get_logger

logger = get_logger(__file__)

Format = Literal["json", "csv", "text"]


def load_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as err:
        raise InputError("cannot read input", module="cli", operation="load_json", witness=str(path)) from err
    except json.JSONDecodeError as err:
        raise InputError("malformed JSON", module="cli", operation="load_json", witness=f"{path}: {err}") from err


def parse_int_list(text: str) -> list[int]:
    """"4,8,16" -> [4, 8, 16]."""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        raise InputError("expected comma-separated integers", module="cli", operation="parse_int_list", witness=text) from err
    if not values:
        raise InputError("empty list", module="cli", operation="parse_int_list", witness=text)
    return values


def parse_law(text: str, p: int, n: int, cap: int) -> FormalGroupLaw:
    """A law from the command line.

    Accepted forms: ``morava`` or ``morava:a1,a2,...`` (height ``n``),
    ``multiplicative`` or ``multiplicative:beta``, ``additive``, or the path
    of a law JSON file.
    """
    kind, _, arg = text.partition(":")
    if kind == "morava":
        a = [parse_rational(x) for x in arg.split(",")] if arg else [parse_rational(1)]
        return morava(MoravaSpec(p=p, n=n, a=a), cap)
    if kind == "multiplicative":
        return multiplicative(p, arg or "-1", cap)
    if kind == "additive":
        return additive(p, cap)
    path = Path(text)
    if path.suffix == ".json":
        return fgl_from_json(load_json(path), cap, default_p=p)
    raise InputError("unknown law", module="cli", operation="parse_law", witness=text)


class Artifact(BaseModel):
    """What a command emits, plus the stated properties it found violated."""

    payload: dict[str, Any] = Field(default_factory=dict)
    header: list[str] | None = None
    rows: list[list[str]] | None = None
    mismatches: list[str] = Field(default_factory=list)
    insufficient: list[str] = Field(default_factory=list)


def to_json_text(payload: dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def to_csv_text(header: list[str], rows: list[list[str]]) -> str:
    buffer = StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _flatten(prefix: str, value: Any, lines: list[str]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], lines)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, item in enumerate(value):
            _flatten(f"{prefix}[{i}]", item, lines)
    else:
        lines.append(f"{prefix}: {value}")


def to_text(artifact: Artifact) -> str:
    if artifact.rows is not None:
        widths = [max(len(str(r[i])) for r in [artifact.header] + artifact.rows) for i in range(len(artifact.header))]
        lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [artifact.header] + artifact.rows]
        return "\n".join(lines) + "\n"
    lines: list[str] = []
    _flatten("", artifact.payload, lines)
    return "\n".join(lines) + "\n"


def render(artifact: Artifact, fmt: Format) -> str:
    if fmt == "csv":
        if artifact.rows is None:
            raise InputError("this command has no CSV form", module="cli", operation="render", witness=fmt)
        return to_csv_text(artifact.header, artifact.rows)
    if fmt == "text":
        return to_text(artifact)
    payload = artifact.payload
    if not payload and artifact.rows is not None:
        payload = {"rows": [dict(zip(artifact.header, row)) for row in artifact.rows]}
    return to_json_text(payload)


def emit(artifact: Artifact, fmt: Format, out: Path | None) -> str:
    """Write the rendered artifact to ``out`` (or return it for stdout)."""
    text = render(artifact, fmt)
    if out is not None:
        Path(out).write_text(text)
        logger.info(f"wrote {out}")
    return text
