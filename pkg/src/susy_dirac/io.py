"""Deterministic CSV/JSON tables for figure data and reports.

Numbers are written with 12 significant digits and negative zero is folded
to zero, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import numbers
from dataclasses import dataclass, field
from typing import Any, Sequence

SCHEMA_VERSION = 1
_DIGITS = 12


class SchemaError(ValueError):
    """Raised when a table does not match its declared columns."""


def format_number(value: float) -> str:
    """Format a real number with 12 significant digits.

    >>> format_number(-0.0)
    '0'
    >>> format_number(2.3094010767585)
    '2.30940107676'
    """
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.{_DIGITS}g}"
    if float(s) == 0.0:
        return "0"
    return s


def _normalize(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, complex):
        raise SchemaError("complex cells must be split into real and imaginary columns")
    if isinstance(value, numbers.Real):
        v = float(value)
        if math.isfinite(v):
            return float(format_number(v))
        return format_number(v)
    return value


@dataclass
class Table:
    """A named table with a column schema.

    Parameters
    ----------
    name : str
        Section name, e.g. ``"contour"``.
    columns : sequence of str
        Column names.
    rows : list of tuple
        Row values; floats are rounded on output.
    kinds : sequence of str, optional
        Per-column kind, ``"float"`` or ``"str"``. Defaults to float.
    """

    name: str
    columns: Sequence[str]
    rows: list = field(default_factory=list)
    kinds: Sequence[str] | None = None

    def __post_init__(self):
        self.columns = tuple(self.columns)
        if self.kinds is None:
            self.kinds = ("float",) * len(self.columns)
        self.kinds = tuple(self.kinds)
        if len(self.kinds) != len(self.columns):
            raise SchemaError("kinds and columns differ in length")

    def append(self, *row) -> None:
        if len(row) != len(self.columns):
            raise SchemaError(f"{self.name}: expected {len(self.columns)} cells, got {len(row)}")
        self.rows.append(tuple(row))

    def validate(self) -> None:
        """Check row widths and cell kinds."""
        for row in self.rows:
            if len(row) != len(self.columns):
                raise SchemaError(f"{self.name}: ragged row {row!r}")
            for cell, kind in zip(row, self.kinds):
                if kind == "float" and not isinstance(cell, (int, float)):
                    try:
                        float(cell)
                    except (TypeError, ValueError):
                        raise SchemaError(f"{self.name}: non-numeric cell {cell!r}") from None
                if kind == "str" and not isinstance(cell, str):
                    raise SchemaError(f"{self.name}: expected text, got {cell!r}")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _cell_text(cell, kind: str) -> str:
    if kind == "str":
        return str(cell)
    if isinstance(cell, bool):
        return "1" if cell else "0"
    return format_number(cell)


def write_csv(tables: Sequence[Table]) -> str:
    """Serialize tables to CSV text.

    Each table is a block: a ``# name`` line, a header row, then data rows.
    Blocks are separated by a blank line.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for k, t in enumerate(tables):
        t.validate()
        if k:
            buf.write("\n")
        buf.write(f"# {t.name}\n")
        w.writerow(t.columns)
        for row in t.rows:
            w.writerow([_cell_text(c, kd) for c, kd in zip(row, t.kinds)])
    return buf.getvalue()


def read_csv(text: str) -> list[Table]:
    """Parse the output of :func:`write_csv`; numeric cells become floats."""
    tables: list[Table] = []
    blocks = [b for b in text.split("\n\n") if b.strip()]
    for block in blocks:
        lines = block.strip("\n").split("\n")
        if not lines[0].startswith("# "):
            raise SchemaError("table block must start with '# name'")
        name = lines[0][2:]
        reader = list(csv.reader(lines[1:]))
        header, body = reader[0], reader[1:]
        kinds = []
        for j in range(len(header)):
            numeric = all(_is_number(r[j]) for r in body) if body else True
            kinds.append("float" if numeric else "str")
        rows = [tuple(float(c) if kd == "float" else c for c, kd in zip(r, kinds)) for r in body]
        t = Table(name, header, rows, kinds)
        t.validate()
        tables.append(t)
    return tables


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_json(tables: Sequence[Table], meta: dict | None = None) -> str:
    """Serialize tables to JSON with ``"schema": 1``."""
    doc: dict[str, Any] = {"schema": SCHEMA_VERSION}
    if meta:
        doc["meta"] = {k: _normalize(v) for k, v in meta.items()}
    out = []
    for t in tables:
        t.validate()
        out.append(
            {
                "name": t.name,
                "columns": list(t.columns),
                "kinds": list(t.kinds),
                "rows": [[_normalize(c) if kd == "float" else c for c, kd in zip(r, t.kinds)] for r in t.rows],
            }
        )
    doc["tables"] = out
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def read_json(text: str) -> tuple[list[Table], dict]:
    """Parse the output of :func:`write_json`.

    Returns
    -------
    tables : list of Table
    meta : dict
    """
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema {doc.get('schema')!r}")
    tables = []
    for entry in doc["tables"]:
        rows = [tuple(r) for r in entry["rows"]]
        t = Table(entry["name"], entry["columns"], rows, entry["kinds"])
        t.validate()
        tables.append(t)
    return tables, doc.get("meta", {})


def dump_report(report: dict) -> str:
    """Serialize a validation report dict deterministically."""
    return json.dumps(_round_tree(report), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _round_tree(obj):
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return format_number(obj)
        return float(format_number(obj))
    return obj
