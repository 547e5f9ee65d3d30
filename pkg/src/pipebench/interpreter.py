"""Native execution engine for pipeline programs.

Executes operator calls directly over in-memory Tables, producing the
ground-truth outputs that compiled backend code is expected to match.
Null cells never raise: comparisons against null are false, aggregates
skip null inputs, and sorts place nulls last.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .conditions import BoolOp, Comparison, Condition
from .dsl import OperatorCall, OperatorKind, PipelineProgram
from .propagation import TableSchema, agg_output_type, common_supertype, stub_matches
from .tables import ColumnType, Table, TableSet, Value, format_cell


class ErrorCategory(Enum):
    TYPE = "TypeError"
    COLUMN_OR_INDEX = "ColumnOrIndexError"
    ATTRIBUTE = "AttributeError"
    SEMANTIC_GUARD = "SemanticGuard"
    OTHER = "Other"


class ExecutionError(Exception):
    """Runtime failure of one operator, tagged with an error category."""

    def __init__(self, category: ErrorCategory, message: str, op_index: int = -1):
        self.category = category
        self.op_index = op_index
        super().__init__(message)

    def at(self, op_index: int) -> "ExecutionError":
        return ExecutionError(self.category, str(self), op_index)


@dataclass(frozen=True)
class ExecutionLimits:
    wall_clock_seconds: float = 30.0
    cell_budget: int = 10_000_000


@dataclass(frozen=True)
class TraceEntry:
    op_index: int
    kind: OperatorKind
    output_schema: tuple[tuple[str, ColumnType], ...]
    duration: float


@dataclass
class ExecContext:
    """Live tables plus the per-op execution trace."""

    tables: dict[str, Table]
    current: str
    trace: list[TraceEntry] = field(default_factory=list)

    @classmethod
    def from_tables(cls, data: TableSet) -> "ExecContext":
        tables = {t.name: t for t in data}
        return cls(tables, next(iter(tables)))

    def live(self) -> TableSet:
        return TableSet(dict(self.tables))

    def current_table(self) -> Table:
        return self.tables[self.current]


def _err(category: ErrorCategory, message: str) -> ExecutionError:
    return ExecutionError(category, message)


# -- cell helpers -----------------------------------------------------------


def _is_number(v: Value) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _sort_key(v: Value):
    """Total order inside one column: non-null values first, nulls last."""
    if v is None:
        return (1, 0)
    if isinstance(v, bool):
        return (0, int(v))
    return (0, v)


def compare_cells(cell: Value, op: str, literal) -> bool:
    """Predicate comparison; null never satisfies anything."""
    if cell is None:
        return False
    if isinstance(literal, bool) or isinstance(cell, bool):
        if not (isinstance(cell, bool) and isinstance(literal, bool)):
            return op == "!="
        eq = cell is literal
        if op == "==":
            return eq
        if op == "!=":
            return not eq
        return False
    if _is_number(cell) != _is_number(literal) or isinstance(cell, str) != isinstance(literal, str):
        # mismatched kinds are never equal and never ordered
        return op == "!="
    if op == "==":
        return cell == literal
    if op == "!=":
        return cell != literal
    if op == ">":
        return cell > literal
    if op == ">=":
        return cell >= literal
    if op == "<":
        return cell < literal
    if op == "<=":
        return cell <= literal
    raise _err(ErrorCategory.ATTRIBUTE, f"unknown comparator {op!r}")


def eval_condition(cond: Condition, row: tuple, col_index: dict[str, int]) -> bool:
    if isinstance(cond, BoolOp):
        left = eval_condition(cond.left, row, col_index)
        right = eval_condition(cond.right, row, col_index)
        return (left and right) if cond.op == "and" else (left or right)
    assert isinstance(cond, Comparison)
    if cond.column not in col_index:
        raise _err(
            ErrorCategory.COLUMN_OR_INDEX, f"filter references missing column {cond.column!r}"
        )
    return compare_cells(row[col_index[cond.column]], cond.op, cond.literal)


# -- aggregation ------------------------------------------------------------


def aggregate(func: str, values: list[Value], ctype: ColumnType) -> Value:
    """Aggregate non-null cells; empty input follows dataframe defaults."""
    cells = [v for v in values if v is not None]
    if func == "count":
        return len(cells)
    if func in ("sum", "mean"):
        for v in cells:
            if not _is_number(v):
                raise _err(
                    ErrorCategory.TYPE, f"cannot {func} non-numeric value {v!r}"
                )
    if func == "sum":
        if not cells:
            return 0 if ctype is ColumnType.INTEGER else 0.0
        total = sum(cells)
        return float(total) if ctype is ColumnType.REAL else total
    if func == "mean":
        if not cells:
            return None
        return sum(cells) / len(cells)
    if func in ("min", "max"):
        if not cells:
            return None
        if isinstance(cells[0], bool) or not all(
            _is_number(v) == _is_number(cells[0]) for v in cells
        ):
            raise _err(ErrorCategory.TYPE, f"cannot {func} mixed-type cells")
        return min(cells) if func == "min" else max(cells)
    raise _err(ErrorCategory.ATTRIBUTE, f"unknown aggregation function {func!r}")


def _group_rows(rows, key_indices) -> dict[tuple, list]:
    groups: dict[tuple, list] = {}
    for row in rows:
        key = tuple(row[i] for i in key_indices)
        groups.setdefault(key, []).append(row)
    return groups


def _sorted_group_keys(keys) -> list[tuple]:
    return sorted(keys, key=lambda key: tuple(_sort_key(v) for v in key))


# -- single-op execution ------------------------------------------------------


def _resolve_target(ctx: ExecContext, call: OperatorCall) -> str:
    if call.table is not None:
        if call.table not in ctx.tables:
            raise _err(ErrorCategory.COLUMN_OR_INDEX, f"no live table named {call.table!r}")
        return call.table
    if len(ctx.tables) == 1:
        return next(iter(ctx.tables))
    return ctx.current


def _col_index(table: Table, name: str, what: str) -> int:
    try:
        return table.column_index(name)
    except Exception:
        raise _err(
            ErrorCategory.COLUMN_OR_INDEX,
            f"{what} references missing column {name!r} in table {table.name!r}",
        ) from None


def _exec_filter(table: Table, p: dict) -> Table:
    index = {c: i for i, c in enumerate(table.column_names)}
    cond = p["condition"]
    rows = [row for row in table.rows if eval_condition(cond, row, index)]
    return Table(table.name, table.columns, rows)


def _exec_dropna(table: Table, p: dict) -> Table:
    subset = p["subset"] or table.column_names
    idx = [_col_index(table, c, "dropna") for c in subset]
    if p["how"] == "any":
        rows = [r for r in table.rows if all(r[i] is not None for i in idx)]
    else:
        rows = [r for r in table.rows if any(r[i] is not None for i in idx)]
    return Table(table.name, table.columns, rows)


def _exec_deduplicate(table: Table, p: dict) -> Table:
    subset = p["subset"] or table.column_names
    idx = [_col_index(table, c, "deduplicate") for c in subset]
    keys = [tuple(r[i] for i in idx) for r in table.rows]
    keep_positions = {}
    if p["keep"] == "first":
        for pos, key in enumerate(keys):
            keep_positions.setdefault(key, pos)
    else:
        for pos, key in enumerate(keys):
            keep_positions[key] = pos
    kept = sorted(keep_positions.values())
    return Table(table.name, table.columns, [table.rows[i] for i in kept])


def _cast_cell(v: Value, dtype: str) -> Value:
    if v is None:
        return None
    try:
        if dtype == "int":
            if isinstance(v, bool):
                return int(v)
            if isinstance(v, str):
                return int(v.strip())
            return int(v)
        if dtype == "float":
            if isinstance(v, bool):
                return float(v)
            if isinstance(v, str):
                return float(v.strip())
            return float(v)
        if dtype == "str":
            return format_cell(v)
        if dtype == "bool":
            if isinstance(v, bool):
                return v
            if isinstance(v, int) and v in (0, 1):
                return bool(v)
            if isinstance(v, str) and v in ("true", "false", "True", "False"):
                return v in ("true", "True")
            raise ValueError(v)
    except (ValueError, TypeError, OverflowError) as exc:
        raise _err(ErrorCategory.TYPE, f"cannot cast {v!r} to {dtype}") from exc
    raise _err(ErrorCategory.ATTRIBUTE, f"unknown cast dtype {dtype!r}")


def _exec_cast(table: Table, p: dict) -> Table:
    i = _col_index(table, p["column"], "cast")
    dtype = p["dtype"]
    target = {
        "int": ColumnType.INTEGER,
        "float": ColumnType.REAL,
        "str": ColumnType.TEXT,
        "bool": ColumnType.BOOLEAN,
    }[dtype]
    columns = [
        (c, target if j == i else t) for j, (c, t) in enumerate(table.columns)
    ]
    rows = [
        tuple(_cast_cell(v, dtype) if j == i else v for j, v in enumerate(row))
        for row in table.rows
    ]
    return Table(table.name, columns, rows)


def _exec_groupby(table: Table, p: dict) -> Table:
    by, agg = p["by"], p["agg"]
    by_idx = [_col_index(table, c, "groupby") for c in by]
    agg_items = []
    for col, fn in agg.items():
        agg_items.append((col, fn, _col_index(table, col, "groupby"), table.column_type(col)))
    groups = _group_rows(table.rows, by_idx)
    columns = [(c, table.column_type(c)) for c in by]
    for col, fn, _, ctype in agg_items:
        columns.append((col, agg_output_type(fn, ctype)))
    rows = []
    for key in _sorted_group_keys(groups):
        members = groups[key]
        out = list(key)
        for col, fn, idx, ctype in agg_items:
            out.append(aggregate(fn, [r[idx] for r in members], ctype))
        rows.append(out)
    return Table(table.name, columns, rows)


def _exec_pivot(table: Table, p: dict) -> Table:
    index_i = _col_index(table, p["index"], "pivot")
    columns_i = _col_index(table, p["columns"], "pivot")
    values_i = _col_index(table, p["values"], "pivot")
    vtype = table.columns[values_i][1]
    out_type = agg_output_type(p["aggfunc"], vtype)

    label_order: dict[str, object] = {}
    cells: dict[tuple, dict[str, list]] = {}
    index_order: dict[object, None] = {}
    for row in table.rows:
        idx_v, col_v = row[index_i], row[columns_i]
        if idx_v is None or col_v is None:
            continue  # null keys do not form pivot rows/columns
        label = format_cell(col_v)
        label_order.setdefault(label, col_v)
        index_order.setdefault(idx_v, None)
        cells.setdefault((idx_v, label), {}).setdefault("v", []).append(row[values_i])

    labels = sorted(label_order, key=lambda s: _sort_key(label_order[s]))
    if p["index"] in labels:
        raise _err(
            ErrorCategory.SEMANTIC_GUARD,
            f"pivot label {p['index']!r} collides with the index column",
        )
    columns = [(p["index"], table.columns[index_i][1])] + [(l, out_type) for l in labels]
    rows = []
    for idx_v in sorted(index_order, key=_sort_key):
        out = [idx_v]
        for label in labels:
            bucket = cells.get((idx_v, label))
            out.append(aggregate(p["aggfunc"], bucket["v"], vtype) if bucket else None)
        rows.append(out)
    return Table(table.name, columns, rows)


def _exec_unpivot(table: Table, p: dict) -> Table:
    id_idx = [_col_index(table, c, "unpivot") for c in p["id_vars"]]
    value_idx = [(v, _col_index(table, v, "unpivot")) for v in p["value_vars"]]
    value_type = common_supertype([table.columns[i][1] for _, i in value_idx])
    columns = [(c, table.column_type(c)) for c in p["id_vars"]]
    columns.append((p["var_name"], ColumnType.TEXT))
    columns.append((p["value_name"], value_type))
    rows = []
    for var, i in value_idx:  # variable-major: one block per melted column
        src_type = table.columns[i][1]
        for row in table.rows:
            cell = row[i]
            cell = _coerce_to(cell, src_type, value_type)
            rows.append([row[j] for j in id_idx] + [var, cell])
    return Table(table.name, columns, rows)


def _coerce_to(cell: Value, src: ColumnType, dst: ColumnType) -> Value:
    if cell is None or src is dst:
        return cell
    if dst is ColumnType.REAL and isinstance(cell, (int, float)) and not isinstance(cell, bool):
        return float(cell)
    if dst is ColumnType.TEXT:
        return format_cell(cell)
    return cell


def _exec_explode(table: Table, p: dict) -> Table:
    i = _col_index(table, p["column"], "explode")
    if table.columns[i][1] is not ColumnType.TEXT:
        raise _err(
            ErrorCategory.TYPE,
            f"explode requires a text column, {p['column']!r} is "
            f"{table.columns[i][1].value}",
        )
    rows = []
    for row in table.rows:
        cell = row[i]
        if cell is None or not p["split_comma"]:
            rows.append(row)
            continue
        fragments = [part.strip() for part in cell.split(",")]
        for fragment in fragments:
            rows.append(tuple(fragment if j == i else v for j, v in enumerate(row)))
    return Table(table.name, table.columns, rows)


def _exec_transpose(table: Table, p: dict) -> Table:
    columns = [("index", ColumnType.TEXT)] + [
        (str(i), ColumnType.TEXT) for i in range(table.num_rows)
    ]
    rows = []
    for j, (name, _) in enumerate(table.columns):
        out = [name]
        for row in table.rows:
            cell = row[j]
            out.append(None if cell is None else format_cell(cell))
        rows.append(out)
    return Table(table.name, columns, rows)


def _exec_wide_to_long(table: Table, p: dict) -> Table:
    schema = TableSchema.of(table.schema())
    i_idx = [_col_index(table, c, "wide_to_long") for c in p["i"]]
    matches = {}
    suffixes: list[str] = []
    for stub in p["stubnames"]:
        matched = stub_matches(schema, stub, p["sep"], p["suffix"])
        if not matched:
            raise _err(
                ErrorCategory.COLUMN_OR_INDEX, f"no columns match stub {stub!r}"
            )
        matches[stub] = {sfx: (name, ctype) for name, sfx, ctype in matched}
        for _, sfx, _t in matched:
            if sfx not in suffixes:
                suffixes.append(sfx)
    suffixes.sort()

    columns = [(c, table.column_type(c)) for c in p["i"]]
    columns.append((p["j"], ColumnType.TEXT))
    stub_types = {}
    for stub in p["stubnames"]:
        stub_types[stub] = common_supertype([t for _, t in matches[stub].values()])
        columns.append((stub, stub_types[stub]))

    rows = []
    for sfx in suffixes:  # suffix-major long layout
        for row in table.rows:
            out = [row[j] for j in i_idx] + [sfx]
            for stub in p["stubnames"]:
                hit = matches[stub].get(sfx)
                if hit is None:
                    out.append(None)
                else:
                    src_i = table.column_index(hit[0])
                    out.append(_coerce_to(row[src_i], hit[1], stub_types[stub]))
            rows.append(out)
    return Table(table.name, columns, rows)


def _exec_sort(table: Table, p: dict) -> Table:
    rows = list(table.rows)
    keys = list(zip(p["by"], p["ascending"]))
    for col, asc in reversed(keys):
        i = _col_index(table, col, "sort")
        non_null = [r for r in rows if r[i] is not None]
        nulls = [r for r in rows if r[i] is None]
        try:
            non_null.sort(key=lambda r: r[i], reverse=not asc)
        except TypeError as exc:
            raise _err(ErrorCategory.TYPE, f"unorderable cells in column {col!r}") from exc
        rows = non_null + nulls  # nulls last regardless of direction
    return Table(table.name, table.columns, rows)


def _exec_topk(table: Table, p: dict) -> Table:
    k = p["k"]
    if k < 1:
        raise _err(ErrorCategory.SEMANTIC_GUARD, f"topk needs k >= 1, got {k}")
    return Table(table.name, table.columns, table.rows[:k])


def _exec_select(table: Table, p: dict) -> Table:
    idx = [_col_index(table, c, "select") for c in p["columns"]]
    columns = [table.columns[i] for i in idx]
    rows = [tuple(row[i] for i in idx) for row in table.rows]
    return Table(table.name, columns, rows)


def _exec_rename(table: Table, p: dict) -> Table:
    mapping = p["rename_map"]
    for old in mapping:
        _col_index(table, old, "rename")
    columns = [(mapping.get(c, c), t) for c, t in table.columns]
    names = [c for c, _ in columns]
    if len(set(names)) != len(names):
        raise _err(ErrorCategory.SEMANTIC_GUARD, "rename produces duplicate columns")
    return Table(table.name, columns, table.rows)


def _exec_join(ctx: ExecContext, p: dict) -> Table:
    for key in ("left_table", "right_table"):
        if p[key] not in ctx.tables:
            raise _err(ErrorCategory.COLUMN_OR_INDEX, f"no live table named {p[key]!r}")
    left, right = ctx.tables[p["left_table"]], ctx.tables[p["right_table"]]
    left_on = p.get("on", p.get("left_on"))
    right_on = p.get("on", p.get("right_on"))
    li = _col_index(left, left_on, "join")
    ri = _col_index(right, right_on, "join")
    merged_key = "on" in p
    sl, sr = p["suffixes"]
    overlap = set(left.column_names) & set(right.column_names)
    if merged_key:
        overlap.discard(left_on)

    columns = []
    for name, ctype in left.columns:
        columns.append((name + sl if name in overlap else name, ctype))
    right_cols = []
    for j, (name, ctype) in enumerate(right.columns):
        if merged_key and j == ri:
            continue
        right_cols.append((j, name + sr if name in overlap else name, ctype))
    columns.extend((n, t) for _, n, t in right_cols)
    names = [n for n, _ in columns]
    if len(set(names)) != len(names):
        raise _err(ErrorCategory.SEMANTIC_GUARD, "join produces duplicate columns")

    left_null = tuple(None for _ in left.columns)
    right_keep = [j for j, _, _ in right_cols]
    right_null = tuple(None for _ in right_keep)

    by_key: dict[object, list[int]] = {}
    for idx, row in enumerate(right.rows):
        if row[ri] is not None:
            by_key.setdefault(row[ri], []).append(idx)

    rows = []
    matched_right: set[int] = set()
    how = p["how"]
    if how in ("inner", "left", "outer"):
        for lrow in left.rows:
            key = lrow[li]
            hits = by_key.get(key, []) if key is not None else []
            if hits:
                for idx in hits:
                    matched_right.add(idx)
                    rrow = right.rows[idx]
                    rows.append(tuple(lrow) + tuple(rrow[j] for j in right_keep))
            elif how in ("left", "outer"):
                rows.append(tuple(lrow) + right_null)
        if how == "outer":
            for idx, rrow in enumerate(right.rows):
                if idx not in matched_right:
                    if merged_key:
                        # key value survives through the left-side key slot
                        lnull = list(left_null)
                        lnull[li] = rrow[ri]
                        rows.append(tuple(lnull) + tuple(rrow[j] for j in right_keep))
                    else:
                        rows.append(left_null + tuple(rrow[j] for j in right_keep))
    elif how == "right":
        by_left: dict[object, list[int]] = {}
        for idx, lrow in enumerate(left.rows):
            if lrow[li] is not None:
                by_left.setdefault(lrow[li], []).append(idx)
        for rrow in right.rows:
            key = rrow[ri]
            hits = by_left.get(key, []) if key is not None else []
            if hits:
                for idx in hits:
                    rows.append(tuple(left.rows[idx]) + tuple(rrow[j] for j in right_keep))
            else:
                if merged_key:
                    lnull = list(left_null)
                    lnull[li] = rrow[ri]
                    rows.append(tuple(lnull) + tuple(rrow[j] for j in right_keep))
                else:
                    rows.append(left_null + tuple(rrow[j] for j in right_keep))
    else:
        raise _err(ErrorCategory.ATTRIBUTE, f"unknown join type {how!r}")

    return Table(f"{p['left_table']}_{p['right_table']}_join", columns, rows)


def _exec_union(ctx: ExecContext, p: dict) -> Table:
    for key in ("left_table", "right_table"):
        if p[key] not in ctx.tables:
            raise _err(ErrorCategory.COLUMN_OR_INDEX, f"no live table named {p[key]!r}")
    left, right = ctx.tables[p["left_table"]], ctx.tables[p["right_table"]]
    if left.columns != right.columns:
        raise _err(
            ErrorCategory.SEMANTIC_GUARD,
            "union requires identical column name/type sequences",
        )
    rows = list(left.rows) + list(right.rows)
    if p["how"] == "distinct":
        seen = set()
        unique = []
        for row in rows:
            if row not in seen:
                seen.add(row)
                unique.append(row)
        rows = unique
    return Table(f"{p['left_table']}_{p['right_table']}_union", columns=left.columns, rows=rows)


_SINGLE_TABLE_EXECUTORS: dict[OperatorKind, Callable[[Table, dict], Table]] = {
    OperatorKind.FILTER: _exec_filter,
    OperatorKind.DROPNA: _exec_dropna,
    OperatorKind.DEDUPLICATE: _exec_deduplicate,
    OperatorKind.CAST: _exec_cast,
    OperatorKind.GROUPBY: _exec_groupby,
    OperatorKind.PIVOT: _exec_pivot,
    OperatorKind.UNPIVOT: _exec_unpivot,
    OperatorKind.EXPLODE: _exec_explode,
    OperatorKind.TRANSPOSE: _exec_transpose,
    OperatorKind.WIDE_TO_LONG: _exec_wide_to_long,
    OperatorKind.SORT: _exec_sort,
    OperatorKind.TOPK: _exec_topk,
    OperatorKind.SELECT: _exec_select,
    OperatorKind.RENAME: _exec_rename,
}


def execute_op(ctx: ExecContext, call: OperatorCall, op_index: int = -1) -> ExecContext:
    """Run one operator over the live tables, returning the next context.

    The input context is never mutated; failures leave it intact.
    """
    start = time.perf_counter()
    try:
        if call.kind in (OperatorKind.JOIN, OperatorKind.UNION):
            result = (
                _exec_join(ctx, call.params)
                if call.kind is OperatorKind.JOIN
                else _exec_union(ctx, call.params)
            )
            tables = {
                n: t
                for n, t in ctx.tables.items()
                if n not in (call.params["left_table"], call.params["right_table"])
            }
            if result.name in tables:
                raise _err(
                    ErrorCategory.SEMANTIC_GUARD,
                    f"result table {result.name!r} already live",
                )
            tables[result.name] = result
        else:
            target = _resolve_target(ctx, call)
            result = _SINGLE_TABLE_EXECUTORS[call.kind](ctx.tables[target], call.params)
            tables = dict(ctx.tables)
            tables[target] = result
    except ExecutionError as exc:
        raise exc.at(op_index) from None
    duration = time.perf_counter() - start
    trace = ctx.trace + [
        TraceEntry(op_index, call.kind, tuple(result.schema()), duration)
    ]
    return ExecContext(tables, result.name, trace)


def execute_program(
    x: TableSet,
    p: PipelineProgram,
    limits: ExecutionLimits = ExecutionLimits(),
) -> tuple[Table, list[TraceEntry]]:
    """Fold the chain left to right; returns the final table and trace.

    Raises :class:`ExecutionError` on the first failing operator.
    """
    ctx = ExecContext.from_tables(x)
    started = time.perf_counter()
    for i, call in enumerate(p.ops):
        ctx = execute_op(ctx, call, op_index=i)
        cells = sum(t.num_rows * t.num_columns for t in ctx.tables.values())
        if cells > limits.cell_budget:
            raise ExecutionError(
                ErrorCategory.OTHER,
                f"cell budget exceeded after op {i}: {cells} cells",
                op_index=i,
            )
        if time.perf_counter() - started > limits.wall_clock_seconds:
            raise ExecutionError(
                ErrorCategory.OTHER, f"wall clock limit exceeded after op {i}", op_index=i
            )
    return ctx.current_table(), ctx.trace
