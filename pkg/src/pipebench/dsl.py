"""Symbolic program model: the 16 table operators and their JSON wire form.

A program is a flat chain of operator calls.  Each call carries a
structured parameter record validated against its operator kind; the
wire form is a JSON array of ``{"op": ..., "params": {...}}`` objects.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .conditions import Condition, ConditionError, parse_condition, render_condition


class OperatorKind(Enum):
    FILTER = "filter"
    DROPNA = "dropna"
    DEDUPLICATE = "deduplicate"
    CAST = "cast"
    JOIN = "join"
    UNION = "union"
    GROUPBY = "groupby"
    PIVOT = "pivot"
    UNPIVOT = "unpivot"
    EXPLODE = "explode"
    TRANSPOSE = "transpose"
    WIDE_TO_LONG = "wide_to_long"
    SORT = "sort"
    TOPK = "topk"
    SELECT = "select"
    RENAME = "rename"

    def __repr__(self) -> str:
        return self.value

    @classmethod
    def from_string(cls, s: str) -> "OperatorKind":
        for member in cls:
            if member.value == s:
                return member
        raise UnknownOperator(s)


ALL_KINDS: tuple[OperatorKind, ...] = tuple(OperatorKind)

AGG_FUNCS = ("sum", "mean", "min", "max", "count")
JOIN_HOW = ("inner", "left", "right", "outer")
UNION_HOW = ("all", "distinct")
CAST_DTYPES = ("int", "float", "str", "bool")
DROPNA_HOW = ("any", "all")
KEEP_CHOICES = ("first", "last")


class ProgramError(ValueError):
    """Base class for wire-format rejections."""


class UnknownOperator(ProgramError):
    def __init__(self, name: Any, index: Optional[int] = None):
        self.index = index
        at = f" at op {index}" if index is not None else ""
        super().__init__(f"unknown operator {name!r}{at}")


class MalformedParams(ProgramError):
    def __init__(self, kind: str, reason: str, index: Optional[int] = None):
        self.index = index
        at = f" at op {index}" if index is not None else ""
        super().__init__(f"malformed params for {kind!r}{at}: {reason}")


@dataclass(frozen=True)
class OperatorCall:
    """One operator with validated parameters.

    ``table`` routes single-table operators when several tables are
    live; join/union name their sources inside ``params`` instead.
    """

    kind: OperatorKind
    params: dict = field(default_factory=dict)
    table: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(
            self, "params", _validate_params(self.kind, dict(self.params))
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorCall):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.params == other.params
            and self.table == other.table
        )

    def __hash__(self):
        return hash((self.kind, self.table, json.dumps(serialize_call(self), sort_keys=True)))


@dataclass(frozen=True)
class PipelineProgram:
    """Left-to-right operator chain (length >= 1)."""

    ops: tuple[OperatorCall, ...]
    source_tables: tuple[str, ...] = ()

    def __post_init__(self):
        ops = tuple(self.ops)
        if len(ops) < 1:
            raise ProgramError("a pipeline must contain at least one operator")
        object.__setattr__(self, "ops", ops)
        sources = tuple(self.source_tables) or tuple(_referenced_tables(ops))
        object.__setattr__(self, "source_tables", sources)

    def __len__(self) -> int:
        return len(self.ops)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PipelineProgram):
            return NotImplemented
        return self.ops == other.ops

    def __hash__(self):
        return hash(self.ops)

    def kinds(self) -> list[OperatorKind]:
        return [op.kind for op in self.ops]

    def kind_set(self) -> set[OperatorKind]:
        return set(self.kinds())


def _referenced_tables(ops) -> list[str]:
    sources = []
    for op in ops:
        for key in ("left_table", "right_table"):
            name = op.params.get(key)
            if name is not None and name not in sources:
                sources.append(name)
        if op.table is not None and op.table not in sources:
            sources.append(op.table)
    return sources


# -- parameter validation --------------------------------------------------


def _want(params: dict, kind: str, key: str, types, required=True, default=None):
    if key not in params or params[key] is None:
        if required:
            raise MalformedParams(kind, f"missing required field {key!r}")
        return default
    value = params[key]
    if types is not None and not isinstance(value, types):
        raise MalformedParams(kind, f"field {key!r} has wrong type: {value!r}")
    return value


def _string_list(params: dict, kind: str, key: str, required=True, allow_scalar=True):
    if key not in params or params[key] is None:
        if required:
            raise MalformedParams(kind, f"missing required field {key!r}")
        return None
    value = params[key]
    if allow_scalar and isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise MalformedParams(kind, f"field {key!r} must be a list of column names")
    if required and not value:
        raise MalformedParams(kind, f"field {key!r} must not be empty")
    return list(value)


def _choice(params: dict, kind: str, key: str, choices, default=None):
    value = params.get(key, default)
    if value is None and default is None and key not in params:
        raise MalformedParams(kind, f"missing required field {key!r}")
    if value not in choices:
        raise MalformedParams(kind, f"field {key!r} must be one of {choices}, got {value!r}")
    return value


def _reject_foreign(params: dict, kind: str, known: set[str]):
    foreign = set(params) - known
    if foreign:
        raise MalformedParams(kind, f"foreign fields {sorted(foreign)}")


def _validate_params(kind: OperatorKind, params: dict) -> dict:
    """Normalize and validate a raw parameter record for ``kind``."""
    k = kind.value
    if kind is OperatorKind.FILTER:
        _reject_foreign(params, k, {"condition", "column"})
        cond = params.get("condition")
        if isinstance(cond, (str,)):
            # Split form pairs a column with a bare "<cmp> <literal>" tail.
            text = f"`{params['column']}` {cond}" if "column" in params else cond
            try:
                cond = parse_condition(text)
            except ConditionError as exc:
                raise MalformedParams(k, f"bad condition: {exc}") from exc
        elif "column" in params:
            raise MalformedParams(k, "split form requires a string condition")
        if not _is_condition(cond):
            raise MalformedParams(k, "missing or invalid field 'condition'")
        return {"condition": cond}

    if kind is OperatorKind.DROPNA:
        _reject_foreign(params, k, {"subset", "how"})
        subset = _string_list(params, k, "subset", required=False)
        how = _choice(params, k, "how", DROPNA_HOW, default="any")
        return {"subset": subset, "how": how}

    if kind is OperatorKind.DEDUPLICATE:
        _reject_foreign(params, k, {"subset", "keep"})
        subset = _string_list(params, k, "subset", required=False)
        keep = _choice(params, k, "keep", KEEP_CHOICES, default="first")
        return {"subset": subset, "keep": keep}

    if kind is OperatorKind.CAST:
        _reject_foreign(params, k, {"column", "dtype"})
        column = _want(params, k, "column", str)
        dtype = _choice(params, k, "dtype", CAST_DTYPES)
        return {"column": column, "dtype": dtype}

    if kind is OperatorKind.JOIN:
        _reject_foreign(
            params, k,
            {"left_table", "right_table", "on", "left_on", "right_on", "how", "suffixes"},
        )
        left_table = _want(params, k, "left_table", str)
        right_table = _want(params, k, "right_table", str)
        how = _choice(params, k, "how", JOIN_HOW, default="inner")
        on = params.get("on")
        if isinstance(on, list) and len(on) == 1:
            on = on[0]
        left_on, right_on = params.get("left_on"), params.get("right_on")
        if on is not None:
            if left_on is not None or right_on is not None:
                raise MalformedParams(k, "give either 'on' or 'left_on'/'right_on'")
            if not isinstance(on, str):
                raise MalformedParams(k, "'on' must be a single column name")
            left_on = right_on = on
        else:
            if not isinstance(left_on, str) or not isinstance(right_on, str):
                raise MalformedParams(k, "join needs 'on' or both 'left_on' and 'right_on'")
        suffixes = params.get("suffixes", ["_x", "_y"])
        if (
            not isinstance(suffixes, (list, tuple))
            or len(suffixes) != 2
            or not all(isinstance(s, str) for s in suffixes)
        ):
            raise MalformedParams(k, "'suffixes' must be a pair of strings")
        out = {
            "left_table": left_table,
            "right_table": right_table,
            "how": how,
            "suffixes": list(suffixes),
        }
        if on is not None:
            out["on"] = on
        else:
            out["left_on"], out["right_on"] = left_on, right_on
        return out

    if kind is OperatorKind.UNION:
        _reject_foreign(params, k, {"left_table", "right_table", "source_tables", "how"})
        if "source_tables" in params:
            src = params["source_tables"]
            if not isinstance(src, list) or len(src) != 2:
                raise MalformedParams(k, "'source_tables' must name exactly two tables")
            left_table, right_table = src
        else:
            left_table = _want(params, k, "left_table", str)
            right_table = _want(params, k, "right_table", str)
        how = _choice(params, k, "how", UNION_HOW, default="all")
        return {"left_table": left_table, "right_table": right_table, "how": how}

    if kind is OperatorKind.GROUPBY:
        _reject_foreign(params, k, {"by", "agg", "aggregations"})
        by = _string_list(params, k, "by")
        agg = params.get("agg")
        if agg is None and "aggregations" in params:
            items = params["aggregations"]
            if not isinstance(items, list):
                raise MalformedParams(k, "'aggregations' must be a list")
            agg = {}
            for item in items:
                if not isinstance(item, dict) or "column" not in item:
                    raise MalformedParams(k, f"bad aggregation item {item!r}")
                agg[item["column"]] = item.get("agg_func", item.get("agg"))
        if not isinstance(agg, dict) or not agg:
            raise MalformedParams(k, "missing or empty field 'agg'")
        for col, fn in agg.items():
            if not isinstance(col, str) or fn not in AGG_FUNCS:
                raise MalformedParams(k, f"bad aggregation {col!r}: {fn!r}")
        return {"by": by, "agg": dict(agg)}

    if kind is OperatorKind.PIVOT:
        _reject_foreign(params, k, {"index", "columns", "values", "aggfunc"})
        index = _scalar_column(params, k, "index")
        columns = _scalar_column(params, k, "columns")
        values = _scalar_column(params, k, "values")
        aggfunc = _choice(params, k, "aggfunc", AGG_FUNCS, default="mean")
        return {"index": index, "columns": columns, "values": values, "aggfunc": aggfunc}

    if kind is OperatorKind.UNPIVOT:
        _reject_foreign(params, k, {"id_vars", "value_vars", "var_name", "value_name"})
        id_vars = _string_list(params, k, "id_vars", required=False) or []
        value_vars = _string_list(params, k, "value_vars")
        var_name = _want(params, k, "var_name", str, required=False, default="variable")
        value_name = _want(params, k, "value_name", str, required=False, default="value")
        return {
            "id_vars": id_vars,
            "value_vars": value_vars,
            "var_name": var_name,
            "value_name": value_name,
        }

    if kind is OperatorKind.EXPLODE:
        _reject_foreign(params, k, {"column", "split_comma"})
        column = _want(params, k, "column", str)
        split_comma = _want(params, k, "split_comma", bool, required=False, default=False)
        return {"column": column, "split_comma": split_comma}

    if kind is OperatorKind.TRANSPOSE:
        _reject_foreign(params, k, set())
        return {}

    if kind is OperatorKind.WIDE_TO_LONG:
        _reject_foreign(params, k, {"stubnames", "subnames", "i", "j", "sep", "suffix"})
        stubs = params.get("stubnames", params.get("subnames"))
        stubs = _string_list({"stubnames": stubs}, k, "stubnames")
        i_cols = _string_list(params, k, "i")
        j = _want(params, k, "j", str)
        sep = _want(params, k, "sep", str, required=False, default="")
        suffix = _want(params, k, "suffix", str, required=False, default=r"\d+")
        if suffix == "":
            suffix = r"\d+"
        return {"stubnames": stubs, "i": i_cols, "j": j, "sep": sep, "suffix": suffix}

    if kind is OperatorKind.SORT:
        _reject_foreign(params, k, {"by", "ascending"})
        by = _string_list(params, k, "by")
        ascending = params.get("ascending", True)
        if isinstance(ascending, bool):
            ascending = [ascending] * len(by)
        if (
            not isinstance(ascending, list)
            or not all(isinstance(a, bool) for a in ascending)
            or len(ascending) != len(by)
        ):
            raise MalformedParams(k, "'ascending' must parallel 'by'")
        return {"by": by, "ascending": list(ascending)}

    if kind is OperatorKind.TOPK:
        _reject_foreign(params, k, {"k", "columns"})
        if "columns" in params:
            warnings.warn("topk 'columns' parameter is ignored", stacklevel=3)
        kk = _want(params, k, "k", int)
        if isinstance(kk, bool) or kk < 1:
            raise MalformedParams(k, f"'k' must be a positive integer, got {kk!r}")
        return {"k": kk}

    if kind is OperatorKind.SELECT:
        _reject_foreign(params, k, {"columns"})
        columns = _string_list(params, k, "columns")
        if len(set(columns)) != len(columns):
            raise MalformedParams(k, "'columns' contains duplicates")
        return {"columns": columns}

    if kind is OperatorKind.RENAME:
        _reject_foreign(params, k, {"rename_map"})
        mapping = _want(params, k, "rename_map", dict)
        if not mapping:
            raise MalformedParams(k, "'rename_map' must not be empty")
        for old, new in mapping.items():
            if not isinstance(old, str) or not isinstance(new, str) or not new:
                raise MalformedParams(k, f"bad rename entry {old!r}: {new!r}")
        new_names = list(mapping.values())
        if len(set(new_names)) != len(new_names):
            raise MalformedParams(k, "rename targets collide")
        return {"rename_map": dict(mapping)}

    raise UnknownOperator(kind)


def _scalar_column(params: dict, kind: str, key: str) -> str:
    value = params.get(key)
    if isinstance(value, list) and len(value) == 1 and isinstance(value[0], str):
        return value[0]
    if not isinstance(value, str):
        raise MalformedParams(kind, f"field {key!r} must be a single column name")
    return value


def _is_condition(obj: Any) -> bool:
    from .conditions import BoolOp, Comparison

    return isinstance(obj, (Comparison, BoolOp))


# -- wire format -----------------------------------------------------------

# Serialization key order per kind; mapping-valued params (agg, rename_map)
# keep their own insertion order because it is semantically meaningful.
_KEY_ORDER = {
    OperatorKind.FILTER: ["condition"],
    OperatorKind.DROPNA: ["subset", "how"],
    OperatorKind.DEDUPLICATE: ["subset", "keep"],
    OperatorKind.CAST: ["column", "dtype"],
    OperatorKind.JOIN: ["left_table", "right_table", "on", "left_on", "right_on", "how", "suffixes"],
    OperatorKind.UNION: ["left_table", "right_table", "how"],
    OperatorKind.GROUPBY: ["by", "agg"],
    OperatorKind.PIVOT: ["index", "columns", "values", "aggfunc"],
    OperatorKind.UNPIVOT: ["id_vars", "value_vars", "var_name", "value_name"],
    OperatorKind.EXPLODE: ["column", "split_comma"],
    OperatorKind.TRANSPOSE: [],
    OperatorKind.WIDE_TO_LONG: ["stubnames", "i", "j", "sep", "suffix"],
    OperatorKind.SORT: ["by", "ascending"],
    OperatorKind.TOPK: ["k"],
    OperatorKind.SELECT: ["columns"],
    OperatorKind.RENAME: ["rename_map"],
}

_ROUTING_KEYS = ("source_table", "table", "table_names")
_IGNORED_ENVELOPE_KEYS = ("result_table", "axis", "ignore_index")


def parse_call(obj: Any, index: Optional[int] = None, lenient: bool = False) -> OperatorCall:
    """Turn one ``{"op": ..., "params": {...}}`` object into an OperatorCall."""
    if not isinstance(obj, dict):
        raise MalformedParams("?", f"operator entry must be an object, got {obj!r}", index)
    op_name = obj.get("op", obj.get("name") if lenient else None)
    if not isinstance(op_name, str):
        raise MalformedParams("?", "missing 'op' field", index)
    try:
        kind = OperatorKind.from_string(op_name)
    except UnknownOperator:
        raise UnknownOperator(op_name, index) from None
    raw = obj.get("params", obj.get("parameters") if lenient else None)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise MalformedParams(kind.value, "'params' must be an object", index)
    raw = dict(raw)
    table = None
    for key in _ROUTING_KEYS:
        if key in raw:
            value = raw.pop(key)
            if isinstance(value, list) and len(value) == 1:
                value = value[0]
            if table is None and isinstance(value, str):
                table = value
    if lenient:
        for key in _IGNORED_ENVELOPE_KEYS:
            raw.pop(key, None)
    try:
        return OperatorCall(kind, raw, table=table)
    except MalformedParams as exc:
        raise MalformedParams(kind.value, str(exc), index) from exc


def parse_program(text: str) -> PipelineProgram:
    """Parse the JSON wire form into a validated program."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProgramError(f"invalid JSON: {exc}") from exc
    return program_from_obj(data)


def program_from_obj(data: Any, lenient: bool = False) -> PipelineProgram:
    if not isinstance(data, list):
        raise ProgramError("program must be a JSON array of operator objects")
    if not data:
        raise ProgramError("empty chain: a pipeline must contain at least one operator")
    ops = [parse_call(obj, index=i, lenient=lenient) for i, obj in enumerate(data)]
    return PipelineProgram(tuple(ops))


def serialize_call(call: OperatorCall) -> dict:
    params: dict[str, Any] = {}
    if call.table is not None:
        params["source_table"] = call.table
    for key in _KEY_ORDER[call.kind]:
        if key not in call.params:
            continue
        value = call.params[key]
        if key == "condition":
            value = render_condition(value)
        params[key] = value
    return {"op": call.kind.value, "params": params}


def program_to_obj(p: PipelineProgram) -> list[dict]:
    return [serialize_call(op) for op in p.ops]


def serialize_program(p: PipelineProgram, indent: Optional[int] = None) -> str:
    """Canonical JSON text; ``parse_program`` inverts it."""
    return json.dumps(program_to_obj(p), ensure_ascii=False, indent=indent)
