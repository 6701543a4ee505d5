"""Canonical text output.

Every emitted file must be byte-identical for identical (config, seed), so all
JSON goes through one dumper (sorted keys, two-space indent, trailing newline)
and all floats use Python's shortest round-trip repr. Non-finite values are
rejected rather than serialized.
"""

from __future__ import annotations

import json
import math
import os

from .errors import NumericalError


def canonical_json(doc) -> str:
    try:
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    except ValueError as exc:
        raise NumericalError(f"refusing to serialize non-finite value: {exc}") from None


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericalError(f"refusing to serialize non-finite value {x}")
    return repr(x)


def pd_matrix_csv(archs: list[str], cells: list[list[float | None]]) -> str:
    """Header row of architecture strings; "null" marks cells the protocol never fills."""
    lines = ["arch," + ",".join(archs)]
    for arch, row in zip(archs, cells):
        rendered = ["null" if v is None else format_float(v) for v in row]
        lines.append(arch + "," + ",".join(rendered))
    return "\n".join(lines) + "\n"


def ktau_csv(rows: list[tuple[int, float]]) -> str:
    lines = ["epoch,ktau"]
    for epoch, value in rows:
        lines.append(f"{epoch},{format_float(value)}")
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
