"""Schema propagation: per-operator schema transforms, validity checks,
and parameter binding for chain synthesis.

The running state maps each live table to its ordered (column, type)
schema.  Every operator has a deterministic schema transform; reshaping
operators whose output columns depend on cell values (pivot, transpose)
contribute an opaque typed "column family" instead of concrete names,
and references into a family are deferred to execution.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .conditions import BoolOp, Comparison, Condition
from .dsl import AGG_FUNCS, JOIN_HOW, OperatorCall, OperatorKind
from .tables import ColumnType, Table, TableSet

NUMERIC_TYPES = (ColumnType.INTEGER, ColumnType.REAL)
ORDERABLE_TYPES = (ColumnType.INTEGER, ColumnType.REAL, ColumnType.TEXT)

# Statically safe cast targets by source column type; anything else can
# fail cell-wise at runtime and is rejected by validation.
SAFE_CASTS = {
    ColumnType.INTEGER: {"int", "float", "str"},
    ColumnType.REAL: {"int", "float", "str"},
    ColumnType.BOOLEAN: {"bool", "int", "str"},
    ColumnType.TEXT: {"str"},
}

_DTYPE_TO_TYPE = {
    "int": ColumnType.INTEGER,
    "float": ColumnType.REAL,
    "str": ColumnType.TEXT,
    "bool": ColumnType.BOOLEAN,
}


@dataclass(frozen=True)
class ColumnFamily:
    """Stand-in for a data-determined set of same-typed columns."""

    ctype: ColumnType
    origin: str


@dataclass(frozen=True)
class TableSchema:
    columns: tuple[tuple[str, ColumnType], ...]
    family: Optional[ColumnFamily] = None

    @classmethod
    def of(cls, pairs: Sequence[tuple[str, ColumnType]], family=None) -> "TableSchema":
        return cls(tuple(pairs), family)

    def names(self) -> list[str]:
        return [c for c, _ in self.columns]

    def get(self, name: str) -> Optional[ColumnType]:
        for c, t in self.columns:
            if c == name:
                return t
        return None

    def resolve(self, name: str) -> tuple[str, Optional[ColumnType]]:
        """('concrete', t) | ('deferred', family type) | ('missing', None)."""
        t = self.get(name)
        if t is not None:
            return ("concrete", t)
        if self.family is not None:
            return ("deferred", self.family.ctype)
        return ("missing", None)


@dataclass
class SchemaState:
    """One schema per live table, insertion-ordered."""

    tables: dict[str, TableSchema] = field(default_factory=dict)

    @classmethod
    def from_tables(cls, data: TableSet) -> "SchemaState":
        return cls({t.name: TableSchema.of(t.schema()) for t in data})

    @classmethod
    def from_table(cls, table: Table) -> "SchemaState":
        return cls({table.name: TableSchema.of(table.schema())})

    def copy(self) -> "SchemaState":
        return SchemaState(dict(self.tables))

    def names(self) -> list[str]:
        return list(self.tables.keys())

    def __contains__(self, name: str) -> bool:
        return name in self.tables

    def __getitem__(self, name: str) -> TableSchema:
        return self.tables[name]

    def __len__(self) -> int:
        return len(self.tables)


def get_schema(data: TableSet) -> SchemaState:
    """Schema state covering every table in the set."""
    return SchemaState.from_tables(data)


@dataclass(frozen=True)
class BindingOutcome:
    is_valid: bool
    call: Optional[OperatorCall] = None
    reason: str = ""

    @classmethod
    def ok(cls, call: OperatorCall) -> "BindingOutcome":
        return cls(True, call)

    @classmethod
    def no(cls, reason: str) -> "BindingOutcome":
        return cls(False, None, reason)


# -- shared type algebra ---------------------------------------------------


def agg_output_type(func: str, input_type: ColumnType) -> ColumnType:
    """sum/min/max preserve the input type, mean widens, count counts."""
    if func == "count":
        return ColumnType.INTEGER
    if func == "mean":
        return ColumnType.REAL
    return input_type


def agg_allowed(func: str, input_type: ColumnType) -> bool:
    if func in ("sum", "mean"):
        return input_type in NUMERIC_TYPES
    if func in ("min", "max"):
        return input_type in ORDERABLE_TYPES
    return func == "count"


def common_supertype(types: Sequence[ColumnType]) -> ColumnType:
    distinct = set(types)
    if len(distinct) == 1:
        return next(iter(distinct))
    if distinct <= set(NUMERIC_TYPES):
        return ColumnType.REAL
    return ColumnType.TEXT


def stub_matches(schema: TableSchema, stub: str, sep: str, suffix: str) -> list[tuple[str, str, ColumnType]]:
    """Concrete columns shaped ``<stub><sep><suffix>``; (name, suffix, type)."""
    try:
        pattern = re.compile(re.escape(stub) + re.escape(sep) + "(" + suffix + ")$")
    except re.error:
        return []
    out = []
    for name, ctype in schema.columns:
        m = pattern.fullmatch(name)
        if m:
            out.append((name, m.group(1), ctype))
    return out


# -- validation -------------------------------------------------------------


def _target_table(call: OperatorCall, state: SchemaState) -> tuple[Optional[str], Optional[str]]:
    """Resolve which live table a single-table operator acts on."""
    if call.table is not None:
        if call.table not in state:
            return None, f"table {call.table!r} is not live"
        return call.table, None
    if len(state) == 1:
        return state.names()[0], None
    return None, f"ambiguous target: {len(state)} live tables and no source_table"


def _check_columns(schema: TableSchema, cols, what: str) -> Optional[str]:
    for c in cols:
        status, _ = schema.resolve(c)
        if status == "missing":
            return f"{what} column {c!r} does not exist"
    return None


def _condition_violation(cond: Condition, schema: TableSchema) -> Optional[str]:
    if isinstance(cond, BoolOp):
        return _condition_violation(cond.left, schema) or _condition_violation(
            cond.right, schema
        )
    assert isinstance(cond, Comparison)
    status, ctype = schema.resolve(cond.column)
    if status == "missing":
        return f"filter column {cond.column!r} does not exist"
    if status == "deferred":
        return None
    lit = cond.literal
    if isinstance(lit, bool):
        if ctype is not ColumnType.BOOLEAN:
            return f"boolean literal against {ctype.value} column {cond.column!r}"
        if cond.op not in ("==", "!="):
            return f"ordering comparator {cond.op} on boolean column {cond.column!r}"
    elif isinstance(lit, (int, float)):
        if ctype not in NUMERIC_TYPES:
            return f"numeric literal against {ctype.value} column {cond.column!r}"
    else:
        if ctype is not ColumnType.TEXT:
            return f"text literal against {ctype.value} column {cond.column!r}"
    return None


def _join_output_columns(
    left: TableSchema, right: TableSchema, p: dict
) -> tuple[list[tuple[str, ColumnType]], Optional[str]]:
    left_on = p.get("on", p.get("left_on"))
    right_on = p.get("on", p.get("right_on"))
    merged_key = "on" in p
    sl, sr = p["suffixes"]
    left_names = set(left.names())
    right_names = set(right.names())
    overlap = left_names & right_names
    if merged_key:
        overlap.discard(left_on)

    out: list[tuple[str, ColumnType]] = []
    for name, ctype in left.columns:
        out.append((name + sl, ctype) if name in overlap else (name, ctype))
    for name, ctype in right.columns:
        if merged_key and name == right_on:
            continue
        out.append((name + sr, ctype) if name in overlap else (name, ctype))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        return out, f"join would produce duplicate columns {dupes}"
    return out, None


def validate(call: OperatorCall, state: SchemaState) -> Optional[str]:
    """None when the call is applicable to the state, else the first
    failed check."""
    kind, p = call.kind, call.params

    if kind is OperatorKind.JOIN:
        for key in ("left_table", "right_table"):
            if p[key] not in state:
                return f"table {p[key]!r} is not live"
        left, right = state[p["left_table"]], state[p["right_table"]]
        left_on = p.get("on", p.get("left_on"))
        right_on = p.get("on", p.get("right_on"))
        lt, rt = left.get(left_on), right.get(right_on)
        if lt is None:
            return f"join key {left_on!r} missing from {p['left_table']!r}"
        if rt is None:
            return f"join key {right_on!r} missing from {p['right_table']!r}"
        if lt is not rt:
            return f"join keys differ in type: {lt.value} vs {rt.value}"
        if left.family is None and right.family is None:
            _, err = _join_output_columns(left, right, p)
            if err:
                return err
        result = f"{p['left_table']}_{p['right_table']}_join"
        if result in state and result not in (p["left_table"], p["right_table"]):
            return f"result table {result!r} already live"
        return None

    if kind is OperatorKind.UNION:
        for key in ("left_table", "right_table"):
            if p[key] not in state:
                return f"table {p[key]!r} is not live"
        left, right = state[p["left_table"]], state[p["right_table"]]
        if left.family is not None or right.family is not None:
            return "union over data-determined columns is not checkable"
        if left.columns != right.columns:
            return "union requires identical column name/type sequences"
        result = f"{p['left_table']}_{p['right_table']}_union"
        if result in state and result not in (p["left_table"], p["right_table"]):
            return f"result table {result!r} already live"
        return None

    name, err = _target_table(call, state)
    if err:
        return err
    schema = state[name]

    if kind is OperatorKind.FILTER:
        return _condition_violation(p["condition"], schema)

    if kind in (OperatorKind.DROPNA, OperatorKind.DEDUPLICATE):
        if p["subset"] is not None:
            return _check_columns(schema, p["subset"], kind.value)
        return None

    if kind is OperatorKind.CAST:
        status, ctype = schema.resolve(p["column"])
        if status == "missing":
            return f"cast column {p['column']!r} does not exist"
        if status == "concrete" and p["dtype"] not in SAFE_CASTS[ctype]:
            return f"cast {ctype.value} -> {p['dtype']} is not statically safe"
        return None

    if kind is OperatorKind.GROUPBY:
        by, agg = p["by"], p["agg"]
        if len(set(by)) != len(by):
            return "duplicate grouping columns"
        err = _check_columns(schema, by, "groupby")
        if err:
            return err
        for col, fn in agg.items():
            if col in by:
                return f"aggregated column {col!r} is also a grouping column"
            status, ctype = schema.resolve(col)
            if status == "missing":
                return f"aggregated column {col!r} does not exist"
            if status == "concrete" and not agg_allowed(fn, ctype):
                return f"aggregate {fn} not applicable to {ctype.value} column {col!r}"
        return None

    if kind is OperatorKind.PIVOT:
        roles = [p["index"], p["columns"], p["values"]]
        if len(set(roles)) != 3:
            return "pivot index/columns/values must be distinct"
        err = _check_columns(schema, roles, "pivot")
        if err:
            return err
        status, vtype = schema.resolve(p["values"])
        if status == "concrete" and not agg_allowed(p["aggfunc"], vtype):
            return f"aggregate {p['aggfunc']} not applicable to {vtype.value} values"
        return None

    if kind is OperatorKind.UNPIVOT:
        id_vars, value_vars = p["id_vars"], p["value_vars"]
        err = _check_columns(schema, id_vars + value_vars, "unpivot")
        if err:
            return err
        if set(id_vars) & set(value_vars):
            return "id_vars and value_vars overlap"
        if p["var_name"] == p["value_name"]:
            return "var_name and value_name collide"
        for fresh in (p["var_name"], p["value_name"]):
            if fresh in id_vars:
                return f"output column {fresh!r} collides with id_vars"
        return None

    if kind is OperatorKind.EXPLODE:
        status, ctype = schema.resolve(p["column"])
        if status == "missing":
            return f"explode column {p['column']!r} does not exist"
        if status == "concrete" and ctype is not ColumnType.TEXT:
            return f"explode requires a text column, {p['column']!r} is {ctype.value}"
        return None

    if kind is OperatorKind.TRANSPOSE:
        return None

    if kind is OperatorKind.WIDE_TO_LONG:
        stubs, i_cols, j = p["stubnames"], p["i"], p["j"]
        err = _check_columns(schema, i_cols, "wide_to_long id")
        if err:
            return err
        if j in i_cols or j in stubs:
            return f"j column {j!r} collides with output columns"
        if set(stubs) & set(i_cols):
            return "stub names overlap id columns"
        for stub in stubs:
            matches = stub_matches(schema, stub, p["sep"], p["suffix"])
            if not matches:
                return f"no columns match stub {stub!r}"
            if any(name in i_cols for name, _, _ in matches):
                return f"stub {stub!r} captures an id column"
        return None

    if kind is OperatorKind.SORT:
        return _check_columns(schema, p["by"], "sort")

    if kind is OperatorKind.TOPK:
        return None

    if kind is OperatorKind.SELECT:
        return _check_columns(schema, p["columns"], "select")

    if kind is OperatorKind.RENAME:
        mapping = p["rename_map"]
        err = _check_columns(schema, mapping.keys(), "rename")
        if err:
            return err
        remaining = [c for c in schema.names() if c not in mapping]
        new_names = list(mapping.values())
        for new in new_names:
            if new in remaining:
                return f"rename target {new!r} collides with an existing column"
        if len(set(new_names)) != len(new_names):
            return "rename targets collide"
        return None

    return f"unhandled operator {kind.value}"


# -- propagation ------------------------------------------------------------


def result_table_name(call: OperatorCall, state: SchemaState) -> str:
    """Name the table a call writes; sources of join/union are consumed."""
    if call.kind is OperatorKind.JOIN:
        return f"{call.params['left_table']}_{call.params['right_table']}_join"
    if call.kind is OperatorKind.UNION:
        return f"{call.params['left_table']}_{call.params['right_table']}_union"
    name, err = _target_table(call, state)
    if err:
        raise ValueError(err)
    return name


def propagate(call: OperatorCall, state: SchemaState) -> SchemaState:
    """Next schema state; requires ``validate(call, state) is None``."""
    violation = validate(call, state)
    if violation is not None:
        raise ValueError(f"cannot propagate invalid call: {violation}")
    kind, p = call.kind, call.params

    if kind in (OperatorKind.JOIN, OperatorKind.UNION):
        left, right = state[p["left_table"]], state[p["right_table"]]
        if kind is OperatorKind.JOIN:
            cols, _ = _join_output_columns(left, right, p)
            family = left.family or right.family
            result = TableSchema.of(cols, family)
        else:
            result = left
        new = {
            n: s
            for n, s in state.tables.items()
            if n not in (p["left_table"], p["right_table"])
        }
        new[result_table_name(call, state)] = result
        return SchemaState(new)

    name, _ = _target_table(call, state)
    schema = state[name]
    new_schema = _propagate_single(call, schema)
    tables = dict(state.tables)
    tables[name] = new_schema
    return SchemaState(tables)


def _materialize(schema: TableSchema, column: str) -> ColumnType:
    status, ctype = schema.resolve(column)
    assert status != "missing"
    return ctype


def _propagate_single(call: OperatorCall, schema: TableSchema) -> TableSchema:
    kind, p = call.kind, call.params

    if kind in (
        OperatorKind.FILTER,
        OperatorKind.DROPNA,
        OperatorKind.DEDUPLICATE,
        OperatorKind.SORT,
        OperatorKind.TOPK,
    ):
        return schema

    if kind is OperatorKind.CAST:
        target = _DTYPE_TO_TYPE[p["dtype"]]
        cols = []
        seen = False
        for name, ctype in schema.columns:
            if name == p["column"]:
                cols.append((name, target))
                seen = True
            else:
                cols.append((name, ctype))
        if not seen:  # deferred column materializes with the cast type
            cols.append((p["column"], target))
        return TableSchema.of(cols, schema.family)

    if kind is OperatorKind.GROUPBY:
        cols = [(b, _materialize(schema, b)) for b in p["by"]]
        for col, fn in p["agg"].items():
            cols.append((col, agg_output_type(fn, _materialize(schema, col))))
        return TableSchema.of(cols)

    if kind is OperatorKind.PIVOT:
        index_type = _materialize(schema, p["index"])
        value_type = _materialize(schema, p["values"])
        family = ColumnFamily(agg_output_type(p["aggfunc"], value_type), "pivot")
        return TableSchema.of([(p["index"], index_type)], family)

    if kind is OperatorKind.UNPIVOT:
        cols = [(c, _materialize(schema, c)) for c in p["id_vars"]]
        cols.append((p["var_name"], ColumnType.TEXT))
        value_type = common_supertype([_materialize(schema, v) for v in p["value_vars"]])
        cols.append((p["value_name"], value_type))
        return TableSchema.of(cols)

    if kind is OperatorKind.EXPLODE:
        cols = [
            (name, ColumnType.TEXT if name == p["column"] else ctype)
            for name, ctype in schema.columns
        ]
        if schema.get(p["column"]) is None:
            cols.append((p["column"], ColumnType.TEXT))
        return TableSchema.of(cols, schema.family)

    if kind is OperatorKind.TRANSPOSE:
        family = ColumnFamily(ColumnType.TEXT, "transpose")
        return TableSchema.of([("index", ColumnType.TEXT)], family)

    if kind is OperatorKind.WIDE_TO_LONG:
        cols = [(c, _materialize(schema, c)) for c in p["i"]]
        cols.append((p["j"], ColumnType.TEXT))
        for stub in p["stubnames"]:
            matched = stub_matches(schema, stub, p["sep"], p["suffix"])
            cols.append((stub, common_supertype([t for _, _, t in matched])))
        return TableSchema.of(cols)

    if kind is OperatorKind.SELECT:
        return TableSchema.of([(c, _materialize(schema, c)) for c in p["columns"]])

    if kind is OperatorKind.RENAME:
        mapping = p["rename_map"]
        cols = []
        pending = dict(mapping)
        for name, ctype in schema.columns:
            if name in pending:
                cols.append((pending.pop(name), ctype))
            else:
                cols.append((name, ctype))
        # Renames of deferred columns materialize them with the family type.
        for old, new in pending.items():
            cols.append((new, schema.family.ctype))
        return TableSchema.of(cols, schema.family)

    raise ValueError(f"unhandled operator {kind.value}")


def schema_covers(predicted: TableSchema, realized: Sequence[tuple[str, ColumnType]]) -> bool:
    """Realized schema agreement, treating a family as a wildcard.

    Without a family the prediction must match exactly.  With one, the
    concrete predicted columns must appear in order as a subsequence of
    the realized schema, and every other realized column must carry the
    family's type.
    """
    realized = list(realized)
    concrete = list(predicted.columns)
    if predicted.family is None:
        return concrete == realized
    i = 0
    for name, ctype in realized:
        if i < len(concrete) and (name, ctype) == concrete[i]:
            i += 1
        elif ctype is not predicted.family.ctype:
            return False
    return i == len(concrete)


# -- binding ----------------------------------------------------------------

_MAX_PIVOT_LABELS = 12


def _concrete_columns(schema: TableSchema) -> list[tuple[str, ColumnType]]:
    return list(schema.columns)


def _observed_values(table: Table, column: str) -> list:
    return [v for v in table.column_values(column) if v is not None]


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base
    n = 1
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    return name


def _sample_subset(rng: random.Random, items: list, lo: int = 1, hi: Optional[int] = None) -> list:
    hi = len(items) if hi is None else min(hi, len(items))
    size = rng.randint(lo, hi)
    picked = rng.sample(items, size)
    return [item for item in items if item in picked]  # keep schema order


def validate_and_bind(
    kind: OperatorKind,
    state: SchemaState,
    rng: random.Random,
    data: TableSet,
) -> BindingOutcome:
    """Sample a fully parameterized, valid call of ``kind``, or report
    that none exists for the current state."""
    binder = _BINDERS[kind]
    call = binder(state, rng, data)
    if call is None:
        return BindingOutcome.no(f"no valid binding for {kind.value}")
    violation = validate(call, state)
    if violation is not None:
        return BindingOutcome.no(violation)
    return BindingOutcome.ok(call)


def _pick_table(state: SchemaState, rng: random.Random) -> tuple[str, TableSchema, Optional[str]]:
    names = state.names()
    name = names[0] if len(names) == 1 else rng.choice(names)
    explicit = None if len(names) == 1 else name
    return name, state[name], explicit


_FILTER_OPS_NUMERIC = ("==", "!=", ">", ">=", "<", "<=")
_FILTER_OPS_DISCRETE = ("==", "!=")


def _bind_filter(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    table = data[name]
    candidates = [
        (c, t) for c, t in _concrete_columns(schema) if _observed_values(table, c)
    ]
    if not candidates:
        return None
    col, ctype = rng.choice(candidates)
    ops = _FILTER_OPS_NUMERIC if ctype in NUMERIC_TYPES else _FILTER_OPS_DISCRETE
    op = rng.choice(ops)
    literal = rng.choice(_observed_values(table, col))
    cond = Comparison(col, op, literal)
    return OperatorCall(OperatorKind.FILTER, {"condition": cond}, table=explicit)


def _bind_dropna(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in schema.columns]
    subset = None if rng.random() < 0.5 else _sample_subset(rng, cols, 1, 2)
    how = rng.choice(["any", "all"])
    return OperatorCall(OperatorKind.DROPNA, {"subset": subset, "how": how}, table=explicit)


def _bind_deduplicate(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in schema.columns]
    subset = None if rng.random() < 0.5 else _sample_subset(rng, cols, 1, 2)
    keep = rng.choice(["first", "last"])
    return OperatorCall(
        OperatorKind.DEDUPLICATE, {"subset": subset, "keep": keep}, table=explicit
    )


def _bind_cast(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    noop = {
        ColumnType.INTEGER: "int",
        ColumnType.REAL: "float",
        ColumnType.TEXT: "str",
        ColumnType.BOOLEAN: "bool",
    }
    candidates = [
        (c, dtype)
        for c, t in _concrete_columns(schema)
        for dtype in sorted(SAFE_CASTS[t])
        if dtype != noop[t]
    ]
    if not candidates:
        return None
    column, dtype = rng.choice(candidates)
    return OperatorCall(OperatorKind.CAST, {"column": column, "dtype": dtype}, table=explicit)


def _bind_join(state, rng, data):
    names = [n for n in state.names() if state[n].family is None]
    if len(names) < 2:
        return None
    candidates = []
    for left in names:
        for right in names:
            if left == right:
                continue
            ls, rs = state[left], state[right]
            for lc, lt in ls.columns:
                for rc, rt in rs.columns:
                    if lt is rt:
                        candidates.append((left, right, lc, rc))
    rng.shuffle(candidates)
    for left, right, lc, rc in candidates:
        params = {"left_table": left, "right_table": right, "how": rng.choice(list(JOIN_HOW))}
        if lc == rc:
            params["on"] = lc
        else:
            params["left_on"], params["right_on"] = lc, rc
        call = OperatorCall(OperatorKind.JOIN, params)
        if validate(call, state) is None:
            return call
    return None


def _bind_union(state, rng, data):
    names = state.names()
    pairs = [
        (a, b)
        for a in names
        for b in names
        if a != b
        and state[a].family is None
        and state[b].family is None
        and state[a].columns == state[b].columns
    ]
    if not pairs:
        return None
    left, right = rng.choice(pairs)
    how = rng.choice(["all", "distinct"])
    return OperatorCall(
        OperatorKind.UNION,
        {"left_table": left, "right_table": right, "how": how},
    )


def _bind_groupby(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = _concrete_columns(schema)
    if len(cols) < 2:
        return None
    by_count = min(rng.choice([1, 1, 2]), len(cols) - 1)
    by = _sample_subset(rng, [c for c, _ in cols], by_count, by_count)
    rest = [(c, t) for c, t in cols if c not in by]
    agg_candidates = [
        (c, fn) for c, t in rest for fn in AGG_FUNCS if agg_allowed(fn, t)
    ]
    if not agg_candidates:
        return None
    agg_count = min(rng.choice([1, 1, 2]), len(rest))
    agg: dict[str, str] = {}
    rng.shuffle(agg_candidates)
    for c, fn in agg_candidates:
        if c not in agg:
            agg[c] = fn
        if len(agg) == agg_count:
            break
    return OperatorCall(OperatorKind.GROUPBY, {"by": by, "agg": agg}, table=explicit)


def _bind_pivot(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    table = data[name]
    cols = _concrete_columns(schema)
    if len(cols) < 3 or table.num_rows == 0:
        return None
    from .tables import format_cell

    for _ in range(8):
        picks = rng.sample(cols, 3)
        (index, _), (columns, _), (values, vtype) = picks
        labels = [format_cell(v) for v in _observed_values(table, columns)]
        distinct = sorted(set(labels))
        if not (1 <= len(distinct) <= _MAX_PIVOT_LABELS):
            continue
        if index in distinct or len(set(distinct)) != len(distinct):
            continue
        funcs = [fn for fn in AGG_FUNCS if agg_allowed(fn, vtype)]
        if not funcs:
            continue
        call = OperatorCall(
            OperatorKind.PIVOT,
            {"index": index, "columns": columns, "values": values, "aggfunc": rng.choice(funcs)},
            table=explicit,
        )
        if validate(call, state) is None:
            return call
    return None


def _bind_unpivot(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in _concrete_columns(schema)]
    if len(cols) < 2:
        return None
    id_vars = _sample_subset(rng, cols, 1, max(1, len(cols) - 1))
    rest = [c for c in cols if c not in id_vars]
    if not rest:
        return None
    value_vars = _sample_subset(rng, rest, 1, 3)
    taken = set(id_vars)
    var_name = _fresh_name("variable", taken)
    value_name = _fresh_name("value", taken | {var_name})
    return OperatorCall(
        OperatorKind.UNPIVOT,
        {
            "id_vars": id_vars,
            "value_vars": value_vars,
            "var_name": var_name,
            "value_name": value_name,
        },
        table=explicit,
    )


def _bind_explode(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    text_cols = [c for c, t in _concrete_columns(schema) if t is ColumnType.TEXT]
    if not text_cols:
        return None
    column = rng.choice(text_cols)
    return OperatorCall(
        OperatorKind.EXPLODE, {"column": column, "split_comma": True}, table=explicit
    )


def _bind_transpose(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    if not schema.columns and schema.family is None:
        return None
    return OperatorCall(OperatorKind.TRANSPOSE, {}, table=explicit)


def _bind_wide_to_long(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in _concrete_columns(schema)]
    if schema.family is not None:
        return None  # stub patterns could capture data-determined columns
    candidates = []
    for sep in ("_", " ", ""):
        stubs: dict[str, list[str]] = {}
        for c in cols:
            if sep:
                head, s, tail = c.rpartition(sep)
                if s and head and re.fullmatch(r"\w+", tail):
                    stubs.setdefault(head, []).append(tail)
            else:
                m = re.fullmatch(r"(.+?)(\d+)", c)
                if m:
                    stubs.setdefault(m.group(1), []).append(m.group(2))
        for stub, tails in stubs.items():
            if len(tails) >= 2 and stub not in cols:
                candidates.append((sep, stub, tails))
    rng.shuffle(candidates)
    for sep, stub, tails in candidates:
        suffix = r"\d+" if all(re.fullmatch(r"\d+", t) for t in tails) else r"\w+"
        matched = {m for m, _, _ in stub_matches(schema, stub, sep, suffix)}
        i_cols = [c for c in cols if c not in matched]
        if not i_cols:
            continue
        j = _fresh_name("var", set(i_cols) | {stub})
        call = OperatorCall(
            OperatorKind.WIDE_TO_LONG,
            {"stubnames": [stub], "i": i_cols, "j": j, "sep": sep, "suffix": suffix},
            table=explicit,
        )
        if validate(call, state) is None:
            return call
    return None


def _bind_sort(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in _concrete_columns(schema)]
    if not cols:
        return None
    by = _sample_subset(rng, cols, 1, 2)
    ascending = [rng.random() < 0.5 for _ in by]
    return OperatorCall(OperatorKind.SORT, {"by": by, "ascending": ascending}, table=explicit)


def _bind_topk(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    rows = data[name].num_rows
    k = rng.randint(1, max(1, rows))
    return OperatorCall(OperatorKind.TOPK, {"k": k}, table=explicit)


def _bind_select(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in _concrete_columns(schema)]
    if not cols:
        return None
    columns = _sample_subset(rng, cols, 1, len(cols))
    return OperatorCall(OperatorKind.SELECT, {"columns": columns}, table=explicit)


def _bind_rename(state, rng, data):
    name, schema, explicit = _pick_table(state, rng)
    cols = [c for c, _ in _concrete_columns(schema)]
    if not cols or schema.family is not None:
        return None  # fresh names could collide with data-determined columns
    chosen = _sample_subset(rng, cols, 1, 2)
    taken = set(cols)
    mapping = {}
    for old in chosen:
        new = _fresh_name(f"{old}_renamed", taken)
        taken.add(new)
        mapping[old] = new
    return OperatorCall(OperatorKind.RENAME, {"rename_map": mapping}, table=explicit)


_BINDERS = {
    OperatorKind.FILTER: _bind_filter,
    OperatorKind.DROPNA: _bind_dropna,
    OperatorKind.DEDUPLICATE: _bind_deduplicate,
    OperatorKind.CAST: _bind_cast,
    OperatorKind.JOIN: _bind_join,
    OperatorKind.UNION: _bind_union,
    OperatorKind.GROUPBY: _bind_groupby,
    OperatorKind.PIVOT: _bind_pivot,
    OperatorKind.UNPIVOT: _bind_unpivot,
    OperatorKind.EXPLODE: _bind_explode,
    OperatorKind.TRANSPOSE: _bind_transpose,
    OperatorKind.WIDE_TO_LONG: _bind_wide_to_long,
    OperatorKind.SORT: _bind_sort,
    OperatorKind.TOPK: _bind_topk,
    OperatorKind.SELECT: _bind_select,
    OperatorKind.RENAME: _bind_rename,
}
