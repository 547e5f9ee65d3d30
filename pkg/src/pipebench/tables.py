"""In-memory relational tables, CSV/JSON ingestion and curation.

A Table is an immutable, named grid of typed cells.  Cells hold 64-bit
integers, floats, unicode text, booleans, or null.  Ingestion normalizes
messy source files: whitespace is trimmed, common null spellings are
unified, oversized tables are truncated, and column types are inferred
from the data.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

Value = Union[int, float, str, bool, None]

# Spellings normalized to null during curation.  The empty string is
# always treated as missing (CSV cannot distinguish "" from absent).
NULL_STRINGS = ("NA", "Null", "null", "N/A")

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class TableError(Exception):
    """Raised for malformed or irregular table input."""


class ColumnType(Enum):
    INTEGER = "integer"
    REAL = "real"
    TEXT = "text"
    BOOLEAN = "boolean"

    def __repr__(self) -> str:  # keeps schema dumps compact
        return self.value

    @classmethod
    def from_string(cls, s: str) -> "ColumnType":
        for member in cls:
            if member.value == s:
                return member
        raise TableError(f"unknown column type: {s!r}")


def cell_matches(value: Value, ctype: ColumnType) -> bool:
    """True when a cell is null or holds the column's kind."""
    if value is None:
        return True
    if ctype is ColumnType.BOOLEAN:
        return isinstance(value, bool)
    if ctype is ColumnType.INTEGER:
        return isinstance(value, int) and not isinstance(value, bool)
    if ctype is ColumnType.REAL:
        return isinstance(value, float)
    return isinstance(value, str)


@dataclass(frozen=True)
class CurationOptions:
    """Knobs for source-file cleanup.

    ``enabled=False`` keeps raw cells verbatim (only empty fields become
    null); the row cap then does not apply either.
    """

    enabled: bool = True
    row_cap: Optional[int] = 50
    trim_whitespace: bool = True
    null_strings: Sequence[str] = NULL_STRINGS


class Table:
    """Immutable named table: ordered typed columns plus row tuples."""

    __slots__ = ("name", "columns", "rows")

    def __init__(
        self,
        name: str,
        columns: Sequence[tuple[str, ColumnType]],
        rows: Iterable[Sequence[Value]],
    ):
        columns = tuple((str(c), t) for c, t in columns)
        names = [c for c, _ in columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise TableError(f"duplicate column names: {dupes}")
        frozen_rows = []
        for i, row in enumerate(rows):
            row = tuple(row)
            if len(row) != len(columns):
                raise TableError(
                    f"row {i} has {len(row)} cells, expected {len(columns)}"
                )
            for (cname, ctype), cell in zip(columns, row):
                if not cell_matches(cell, ctype):
                    raise TableError(
                        f"row {i}, column {cname!r}: {cell!r} is not {ctype.value}"
                    )
            frozen_rows.append(row)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "rows", tuple(frozen_rows))

    def __setattr__(self, key, value):
        raise AttributeError("Table is immutable")

    # -- basic accessors -------------------------------------------------

    @property
    def column_names(self) -> list[str]:
        return [c for c, _ in self.columns]

    @property
    def column_types(self) -> list[ColumnType]:
        return [t for _, t in self.columns]

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_columns(self) -> int:
        return len(self.columns)

    def column_index(self, name: str) -> int:
        for i, (c, _) in enumerate(self.columns):
            if c == name:
                return i
        raise TableError(f"no column named {name!r} in table {self.name!r}")

    def column_type(self, name: str) -> ColumnType:
        return self.columns[self.column_index(name)][1]

    def column_values(self, name: str) -> list[Value]:
        i = self.column_index(name)
        return [row[i] for row in self.rows]

    def schema(self) -> list[tuple[str, ColumnType]]:
        """Ordered (name, type) pairs."""
        return list(self.columns)

    def with_name(self, name: str) -> "Table":
        return Table(name, self.columns, self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return (
            self.name == other.name
            and self.columns == other.columns
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.name, self.columns, self.rows))

    def __repr__(self) -> str:
        cols = ", ".join(f"{c}:{t.value}" for c, t in self.columns)
        return f"Table({self.name!r}, [{cols}], {self.num_rows} rows)"

    # -- serialization ---------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        for row in self.rows:
            writer.writerow([format_cell(v) for v in row])
        return buf.getvalue()

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "columns": [{"name": c, "type": t.value} for c, t in self.columns],
            "rows": [list(row) for row in self.rows],
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_json_obj(), ensure_ascii=False, indent=indent)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Table":
        try:
            columns = [
                (col["name"], ColumnType.from_string(col["type"]))
                for col in obj["columns"]
            ]
            name = obj["name"]
            raw_rows = obj["rows"]
        except (KeyError, TypeError) as exc:
            raise TableError(f"malformed table JSON: {exc}") from exc
        rows = []
        for raw in raw_rows:
            row = []
            for (_, ctype), cell in zip(columns, raw):
                if cell is not None and ctype is ColumnType.REAL and isinstance(cell, int):
                    cell = float(cell)
                row.append(cell)
            rows.append(row)
        return cls(name, columns, rows)

    @classmethod
    def from_json(cls, text: str) -> "Table":
        return cls.from_json_obj(json.loads(text))


@dataclass
class TableSet:
    """Named collection of tables; the unit a pipeline runs over."""

    tables: dict[str, Table] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tables:
            raise TableError("a table set must contain at least one table")
        for name, table in self.tables.items():
            if name != table.name:
                raise TableError(
                    f"table registered as {name!r} but named {table.name!r}"
                )

    @classmethod
    def of(cls, *tables: Table) -> "TableSet":
        return cls({t.name: t for t in tables})

    def __getitem__(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise TableError(f"no table named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.tables

    def __iter__(self):
        return iter(self.tables.values())

    def __len__(self) -> int:
        return len(self.tables)

    def names(self) -> list[str]:
        return list(self.tables.keys())


# -- cell formatting -----------------------------------------------------


def format_float(v: float) -> str:
    """Up to six fractional digits, trailing zeros trimmed, never bare int."""
    s = f"{v:.6f}"
    s = s.rstrip("0")
    if s.endswith("."):
        s += "0"
    return s


def format_cell(v: Value) -> str:
    """Text form used in CSV output and when stringifying cells."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


# -- type inference ------------------------------------------------------

_BOOL_LEXICON = {"true": True, "false": False, "True": True, "False": False}


def _parse_int(s: str) -> Optional[int]:
    try:
        v = int(s, 10)
    except ValueError:
        return None
    return v


def _parse_float(s: str) -> Optional[float]:
    try:
        v = float(s)
    except ValueError:
        return None
    if not math.isfinite(v):
        return None
    return v


def infer_column_type(raw_cells: Sequence[Optional[str]]) -> ColumnType:
    """Infer the narrowest type covering every non-null cell.

    Integer wins when every cell is a 64-bit integer; numeric columns
    that mix widths (or overflow 64 bits) widen to real; boolean needs
    every cell in the true/false lexicon; anything else is text, which
    is also the fallback for all-null columns.
    """
    non_null = [c for c in raw_cells if c is not None]
    if not non_null:
        return ColumnType.TEXT

    all_int = True
    for c in non_null:
        v = _parse_int(c)
        if v is None or not (INT64_MIN <= v <= INT64_MAX):
            all_int = False
            break
    if all_int:
        return ColumnType.INTEGER

    if all(_parse_float(c) is not None for c in non_null):
        return ColumnType.REAL

    if all(c in _BOOL_LEXICON for c in non_null):
        return ColumnType.BOOLEAN

    return ColumnType.TEXT


def _convert_cell(raw: Optional[str], ctype: ColumnType) -> Value:
    if raw is None:
        return None
    if ctype is ColumnType.INTEGER:
        return _parse_int(raw)
    if ctype is ColumnType.REAL:
        return _parse_float(raw)
    if ctype is ColumnType.BOOLEAN:
        return _BOOL_LEXICON[raw]
    return raw


# -- ingestion -----------------------------------------------------------


def _curate_cell(raw: str, options: CurationOptions) -> Optional[str]:
    # Empty fields are missing data in both modes.
    if raw == "":
        return None
    if not options.enabled:
        return raw
    if options.trim_whitespace:
        raw = raw.strip()
    if raw == "" or raw in options.null_strings:
        return None
    return raw


def table_from_strings(
    name: str,
    header: Sequence[str],
    raw_rows: Sequence[Sequence[str]],
    options: CurationOptions = CurationOptions(),
) -> Table:
    """Build a curated, type-inferred Table from string cells."""
    header = [h.strip() if options.enabled and options.trim_whitespace else h for h in header]
    if len(header) == 0:
        raise TableError(f"{name!r}: irregular table (no columns)")
    if any(h == "" for h in header):
        raise TableError(f"{name!r}: irregular table (empty column name)")
    if len(set(header)) != len(header):
        raise TableError(f"{name!r}: irregular table (duplicate header names)")

    curated: list[list[Optional[str]]] = []
    for i, raw in enumerate(raw_rows):
        if len(raw) == 0:
            continue  # blank line, not a row
        if len(raw) != len(header):
            raise TableError(
                f"{name!r}: irregular table (row {i} has {len(raw)} fields, "
                f"expected {len(header)})"
            )
        curated.append([_curate_cell(cell, options) for cell in raw])

    if options.enabled and options.row_cap is not None:
        curated = curated[: options.row_cap]

    col_types = [
        infer_column_type([row[j] for row in curated]) for j in range(len(header))
    ]
    rows = [
        [_convert_cell(cell, t) for cell, t in zip(row, col_types)] for row in curated
    ]
    return Table(name, list(zip(header, col_types)), rows)


def ingest_csv(
    path: str,
    name: str,
    options: CurationOptions = CurationOptions(),
) -> Table:
    """Read one RFC-4180 CSV file (header row mandatory) into a Table."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            records = list(reader)
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise TableError(f"{path}: CSV parse error: {exc}") from exc
    if not records:
        raise TableError(f"{path}: irregular table (no header row)")
    return table_from_strings(name, records[0], records[1:], options)


def ingest_csv_text(
    text: str,
    name: str,
    options: CurationOptions = CurationOptions(),
) -> Table:
    """Like :func:`ingest_csv` but over an in-memory CSV string."""
    reader = csv.reader(io.StringIO(text))
    records = list(reader)
    if not records:
        raise TableError(f"{name!r}: irregular table (no header row)")
    return table_from_strings(name, records[0], records[1:], options)
