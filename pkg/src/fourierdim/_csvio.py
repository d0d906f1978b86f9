"""Deterministic CSV / provenance formatting shared by the report writers."""

from __future__ import annotations


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render_csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def render_provenance(entries: dict) -> str:
    lines = [f"{key}={fmt(entries[key])}" for key in sorted(entries)]
    return "\n".join(lines) + "\n"
