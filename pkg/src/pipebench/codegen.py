"""Template compiler from pipeline programs to executable code text.

Two dialects are provided: a dataframe method-chain style and SQL
rendered as a chain of CTEs.  Emission is a pure function of the
program (plus optional input schemas); nothing here executes code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .conditions import BoolOp, Comparison, Condition
from .dsl import OperatorCall, OperatorKind, PipelineProgram
from .propagation import SchemaState, validate, propagate, result_table_name


class BackendDialect(Enum):
    DATAFRAME_CHAIN = "dataframe-chain"
    SQL = "sql"

    @classmethod
    def from_string(cls, s: str) -> "BackendDialect":
        for member in cls:
            if member.value == s:
                return member
        raise ValueError(f"unknown dialect {s!r}")

    @property
    def file_extension(self) -> str:
        return ".py" if self is BackendDialect.DATAFRAME_CHAIN else ".sql"


@dataclass(frozen=True)
class EmitOptions:
    annotate: bool = False
    # Input schemas let the SQL backend enumerate columns for operators
    # (cast, rename) that cannot be expressed over SELECT *.
    schemas: Optional[SchemaState] = None


@dataclass(frozen=True)
class EmittedCode:
    text: str
    dialect: BackendDialect


# SQL has no static equivalent for these: output columns depend on cell
# values (pivot, transpose) or require array/regex machinery.
SQL_UNSUPPORTED = (
    OperatorKind.EXPLODE,
    OperatorKind.WIDE_TO_LONG,
    OperatorKind.TRANSPOSE,
    OperatorKind.PIVOT,
)


def quote_column(name: str, dialect: BackendDialect) -> str:
    """Dialect-safe column reference for template slots."""
    if dialect is BackendDialect.DATAFRAME_CHAIN:
        return _py_str(name)
    return _sql_ident(name)


def _py_str(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _sql_ident(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _sql_str(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


# -- dataframe-chain backend --------------------------------------------------


_PY_KEYWORDS = frozenset(
    "False None True and as assert async await break class continue def del elif "
    "else except finally for from global if import in is lambda nonlocal not or "
    "pass raise return try while with yield".split()
)


def _query_column(name: str) -> str:
    if name.isidentifier() and name not in _PY_KEYWORDS:
        return name
    return f"`{name}`"


def _query_literal(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(value)


def _query_condition(cond: Condition) -> str:
    if isinstance(cond, Comparison):
        return f"{_query_column(cond.column)} {cond.op} {_query_literal(cond.literal)}"
    left = _query_condition(cond.left)
    right = _query_condition(cond.right)
    if isinstance(cond.right, BoolOp):
        right = f"({right})"
    return f"{left} {cond.op} {right}"


def _py_list(items: list[str]) -> str:
    return "[" + ", ".join(_py_str(i) for i in items) + "]"


def _py_bool_list(items: list[bool]) -> str:
    return "[" + ", ".join("True" if b else "False" for b in items) + "]"


def _py_dict(mapping: dict) -> str:
    return "{" + ", ".join(f"{_py_str(k)}: {_py_str(v)}" for k, v in mapping.items()) + "}"


def _sort_args(p: dict) -> str:
    if len(p["by"]) == 1:
        return f"by={_py_str(p['by'][0])}, ascending={'True' if p['ascending'][0] else 'False'}"
    return f"by={_py_list(p['by'])}, ascending={_py_bool_list(p['ascending'])}"


def _df_segments(call: OperatorCall, op_index: int) -> list[str]:
    """Method-chain segments for one operator."""
    kind, p = call.kind, call.params

    if kind is OperatorKind.FILTER:
        return [f".query('{_query_condition(p['condition'])}')"]

    if kind is OperatorKind.DROPNA:
        args = []
        if p["subset"] is not None:
            args.append(f"subset={_py_list(p['subset'])}")
        args.append(f"how={_py_str(p['how'])}")
        return [f".dropna({', '.join(args)})"]

    if kind is OperatorKind.DEDUPLICATE:
        args = []
        if p["subset"] is not None:
            args.append(f"subset={_py_list(p['subset'])}")
        args.append(f"keep={_py_str(p['keep'])}")
        return [f".drop_duplicates({', '.join(args)})"]

    if kind is OperatorKind.CAST:
        return [f".astype({{{_py_str(p['column'])}: {_py_str(p['dtype'])}}})"]

    if kind is OperatorKind.GROUPBY:
        by, agg = p["by"], p["agg"]
        if op_index == 0 and len(by) == 1 and len(agg) == 1:
            (col, fn), = agg.items()
            return [f".groupby({_py_str(by[0])})[{_py_str(col)}]", f".{fn}()", ".reset_index()"]
        by_arg = _py_str(by[0]) if len(by) == 1 else _py_list(by)
        agg_arg = _py_dict(agg)
        return [f".groupby({by_arg}, as_index=False)", f".agg({agg_arg})"]

    if kind is OperatorKind.PIVOT:
        return [
            f".pivot_table(index={_py_str(p['index'])}, columns={_py_str(p['columns'])}, "
            f"values={_py_str(p['values'])}, aggfunc={_py_str(p['aggfunc'])})",
            ".reset_index()",
        ]

    if kind is OperatorKind.UNPIVOT:
        return [
            f".melt(id_vars={_py_list(p['id_vars'])}, value_vars={_py_list(p['value_vars'])}, "
            f"var_name={_py_str(p['var_name'])}, value_name={_py_str(p['value_name'])})"
        ]

    if kind is OperatorKind.EXPLODE:
        col = p["column"]
        segments = []
        if p["split_comma"]:
            if col.isidentifier() and col not in _PY_KEYWORDS:
                segments.append(
                    f".assign({col}=lambda df: df[{_py_str(col)}].str.split(','))"
                )
            else:
                segments.append(
                    f".assign(**{{{_py_str(col)}: lambda df: df[{_py_str(col)}].str.split(',')}})"
                )
        segments.append(f".explode({_py_str(col)})")
        return segments

    if kind is OperatorKind.TRANSPOSE:
        return [".transpose()", ".reset_index(names='index')"]

    if kind is OperatorKind.WIDE_TO_LONG:
        return [
            f".pipe(pd.wide_to_long, stubnames={_py_list(p['stubnames'])}, "
            f"i={_py_list(p['i'])}, j={_py_str(p['j'])}, "
            f"sep={_py_str(p['sep'])}, suffix={_py_str(p['suffix'])})",
            ".reset_index()",
        ]

    if kind is OperatorKind.SORT:
        return [f".sort_values({_sort_args(p)})"]

    if kind is OperatorKind.TOPK:
        return [f".head({p['k']})"]

    if kind is OperatorKind.SELECT:
        return [f"[{_py_list(p['columns'])}]"]

    if kind is OperatorKind.RENAME:
        return [f".rename(columns={_py_dict(p['rename_map'])})"]

    raise ValueError(f"no dataframe template for {kind.value}")


def _join_root(p: dict) -> str:
    args = []
    if "on" in p:
        args.append(f"on={_py_str(p['on'])}")
    else:
        args.append(f"left_on={_py_str(p['left_on'])}")
        args.append(f"right_on={_py_str(p['right_on'])}")
    args.append(f"how={_py_str(p['how'])}")
    sl, sr = p["suffixes"]
    args.append(f"suffixes=({_py_str(sl)}, {_py_str(sr)})")
    return f"{p['left_table']}.merge({p['right_table']}, {', '.join(args)})"


def _union_root(p: dict) -> str:
    root = f"pd.concat([{p['left_table']}, {p['right_table']}], ignore_index=True)"
    if p["how"] == "distinct":
        root += ".drop_duplicates()"
    return root


def _emit_dataframe(p: PipelineProgram, options: EmitOptions) -> str:
    multi_table = any(
        op.kind in (OperatorKind.JOIN, OperatorKind.UNION) for op in p.ops
    )
    # single-table chains are rooted at the conventional df alias
    roots: dict[str, str] = {}
    chains: dict[str, list[str]] = {}
    statements: list[str] = []
    current: Optional[str] = None

    def resolve(call: OperatorCall) -> str:
        nonlocal current
        if call.table is not None:
            name = call.table
        elif current is not None:
            name = current
        else:
            name = _default_table(p) if multi_table else "df"
        roots.setdefault(name, name if multi_table else "df")
        chains.setdefault(name, [])
        current = name
        return name

    def flush(name: str):
        # materialize pending work so the variable name is referenceable
        if chains.get(name) or roots.get(name, name) != name:
            chain = _format_chain(roots[name], chains[name])
            statements.append(f"{name} = {chain}" if multi_table else chain)
            roots[name] = name
            chains[name] = []

    def annotate(lines: list[str], op_index: int, kind: OperatorKind) -> list[str]:
        if options.annotate and lines:
            lines = lines[:]
            lines[0] += f"  # op {op_index}: {kind.value}"
        return lines

    for i, call in enumerate(p.ops):
        if call.kind in (OperatorKind.JOIN, OperatorKind.UNION):
            lt, rt = call.params["left_table"], call.params["right_table"]
            for name in (lt, rt):
                roots.setdefault(name, name)
                chains.setdefault(name, [])
                flush(name)
            root = (
                _join_root(call.params)
                if call.kind is OperatorKind.JOIN
                else _union_root(call.params)
            )
            if options.annotate:
                root += f"  # op {i}: {call.kind.value}"
            suffix = "join" if call.kind is OperatorKind.JOIN else "union"
            result = f"{lt}_{rt}_{suffix}"
            for name in (lt, rt):
                roots.pop(name, None)
                chains.pop(name, None)
            roots[result] = root
            chains[result] = []
            current = result
        else:
            name = resolve(call)
            chains[name].extend(annotate(_df_segments(call, i), i, call.kind))

    if current is None:
        current = "df"
        roots.setdefault(current, "df")
        chains.setdefault(current, [])
    final = _format_chain(roots[current], chains[current], wrap=multi_table)
    statements.append(final)
    return "\n".join(statements)


def _format_chain(root: str, segments: list[str], wrap: bool = False) -> str:
    if wrap:
        lines = ["df = (", f"    {root}"]
        lines += [f"    {seg}" for seg in segments]
        lines.append(")")
        return "\n".join(lines)
    if not segments:
        return root
    lines = [f"{root}{segments[0]}"]
    lines += [f"    {seg}" for seg in segments[1:]]
    return "\n".join(lines)


# -- SQL backend ---------------------------------------------------------------


def _sql_literal(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, str):
        return _sql_str(value)
    return repr(value)


def _sql_condition(cond: Condition) -> str:
    if isinstance(cond, Comparison):
        op = {"==": "=", "!=": "<>"}.get(cond.op, cond.op)
        return f"{_sql_ident(cond.column)} {op} {_sql_literal(cond.literal)}"
    left = _sql_condition(cond.left)
    right = _sql_condition(cond.right)
    if isinstance(cond.right, BoolOp):
        right = f"({right})"
    return f"{left} {cond.op.upper()} {right}"


_SQL_AGG = {"sum": "SUM", "mean": "AVG", "min": "MIN", "max": "MAX", "count": "COUNT"}
_SQL_JOIN = {
    "inner": "INNER JOIN",
    "left": "LEFT JOIN",
    "right": "RIGHT JOIN",
    "outer": "FULL OUTER JOIN",
}
_SQL_CAST_TYPE = {"int": "INTEGER", "float": "REAL", "str": "TEXT", "bool": "BOOLEAN"}


def _sql_select(call: OperatorCall, prev: str, columns: Optional[list[str]]) -> Optional[str]:
    """SELECT body for one operator, or None when unsupported."""
    kind, p = call.kind, call.params

    if kind in SQL_UNSUPPORTED:
        return None

    if kind is OperatorKind.FILTER:
        return f"SELECT * FROM {prev} WHERE {_sql_condition(p['condition'])}"

    if kind is OperatorKind.DROPNA:
        subset = p["subset"] or columns
        if subset is None:
            return f"SELECT * FROM {prev} -- dropna: column list unknown, filter not emitted"
        glue = " AND " if p["how"] == "any" else " OR "
        checks = glue.join(f"{_sql_ident(c)} IS NOT NULL" for c in subset)
        return f"SELECT * FROM {prev} WHERE {checks}"

    if kind is OperatorKind.DEDUPLICATE:
        if p["subset"] is None:
            return f"SELECT DISTINCT * FROM {prev}"
        partition = ", ".join(_sql_ident(c) for c in p["subset"])
        projection = ", ".join(_sql_ident(c) for c in columns) if columns else "*"
        inner = (
            f"SELECT *, ROW_NUMBER() OVER (PARTITION BY {partition}) AS _rn FROM {prev}"
        )
        return f"SELECT {projection} FROM ({inner}) WHERE _rn = 1"

    if kind is OperatorKind.CAST:
        if columns is None:
            return (
                f"SELECT * FROM {prev} "
                f"-- cast: column list unknown, CAST({_sql_ident(p['column'])} AS "
                f"{_SQL_CAST_TYPE[p['dtype']]}) not emitted"
            )
        parts = [
            f"CAST({_sql_ident(c)} AS {_SQL_CAST_TYPE[p['dtype']]}) AS {_sql_ident(c)}"
            if c == p["column"]
            else _sql_ident(c)
            for c in columns
        ]
        return f"SELECT {', '.join(parts)} FROM {prev}"

    if kind is OperatorKind.GROUPBY:
        by = [_sql_ident(c) for c in p["by"]]
        aggs = [
            f"{_SQL_AGG[fn]}({_sql_ident(col)}) AS {_sql_ident(col)}"
            for col, fn in p["agg"].items()
        ]
        return (
            f"SELECT {', '.join(by + aggs)} FROM {prev} GROUP BY {', '.join(by)}"
        )

    if kind is OperatorKind.UNPIVOT:
        ids = ", ".join(_sql_ident(c) for c in p["id_vars"])
        prefix = f"{ids}, " if ids else ""
        blocks = [
            f"SELECT {prefix}{_sql_str(v)} AS {_sql_ident(p['var_name'])}, "
            f"{_sql_ident(v)} AS {_sql_ident(p['value_name'])} FROM {prev}"
            for v in p["value_vars"]
        ]
        return " UNION ALL ".join(blocks)

    if kind is OperatorKind.SORT:
        keys = ", ".join(
            f"{_sql_ident(c)} {'ASC' if asc else 'DESC'} NULLS LAST"
            for c, asc in zip(p["by"], p["ascending"])
        )
        return f"SELECT * FROM {prev} ORDER BY {keys}"

    if kind is OperatorKind.TOPK:
        return f"SELECT * FROM {prev} LIMIT {p['k']}"

    if kind is OperatorKind.SELECT:
        cols = ", ".join(_sql_ident(c) for c in p["columns"])
        return f"SELECT {cols} FROM {prev}"

    if kind is OperatorKind.RENAME:
        mapping = p["rename_map"]
        if columns is None:
            pairs = ", ".join(
                f"{_sql_ident(old)} AS {_sql_ident(new)}" for old, new in mapping.items()
            )
            return f"SELECT * FROM {prev} -- rename: column list unknown; wanted {pairs}"
        parts = [
            f"{_sql_ident(c)} AS {_sql_ident(mapping[c])}" if c in mapping else _sql_ident(c)
            for c in columns
        ]
        return f"SELECT {', '.join(parts)} FROM {prev}"

    raise ValueError(f"no SQL template for {kind.value}")


def _emit_sql(p: PipelineProgram, options: EmitOptions) -> str:
    state = options.schemas.copy() if options.schemas is not None else None
    relations: dict[str, str] = {}  # live table name -> SQL relation text
    ctes: list[str] = []
    comments: list[str] = []
    step = 0
    current: Optional[str] = None

    def columns_of(table: str) -> Optional[list[str]]:
        if state is None or table not in state:
            return None
        schema = state[table]
        if schema.family is not None:
            return None
        return schema.names()

    def advance_schema(call: OperatorCall, table: str):
        nonlocal state
        if state is None:
            return
        if validate(call, state) is None:
            state = propagate(call, state)
        else:
            state = None  # schema tracking lost; fall back to generic forms

    def source_relation(name: str) -> str:
        return relations.get(name, _sql_ident(name))

    for i, call in enumerate(p.ops):
        kind, params = call.kind, call.params
        note = f"-- op {i}: {kind.value}" if options.annotate else None

        if kind in (OperatorKind.JOIN, OperatorKind.UNION):
            left = source_relation(params["left_table"])
            right = source_relation(params["right_table"])
            if kind is OperatorKind.JOIN:
                if "on" in params:
                    clause = f"USING ({_sql_ident(params['on'])})"
                else:
                    clause = (
                        f"ON {left}.{_sql_ident(params['left_on'])} = "
                        f"{right}.{_sql_ident(params['right_on'])}"
                    )
                body = f"SELECT * FROM {left} {_SQL_JOIN[params['how']]} {right} {clause}"
                result = f"{params['left_table']}_{params['right_table']}_join"
            else:
                glue = "UNION ALL" if params["how"] == "all" else "UNION"
                body = f"SELECT * FROM {left} {glue} SELECT * FROM {right}"
                result = f"{params['left_table']}_{params['right_table']}_union"
            step += 1
            cte = f"step_{step}"
            ctes.append(_cte(cte, body, note))
            relations.pop(params["left_table"], None)
            relations.pop(params["right_table"], None)
            relations[result] = cte
            current = result
            advance_schema(call, result)
            continue

        table = call.table
        if table is None:
            if current is not None:
                table = current
            elif state is not None and len(state) == 1:
                table = state.names()[0]
            else:
                table = _default_table(p)
        prev = source_relation(table)
        body = _sql_select(call, prev, columns_of(table))
        if body is None:
            comments.append(f"-- {kind.value}: unsupported in SQL backend")
            ctes.append(f"-- {kind.value}: unsupported in SQL backend")
            if state is not None:
                advance_schema(call, table)
            current = table
            continue
        step += 1
        cte = f"step_{step}"
        ctes.append(_cte(cte, body, note))
        relations[table] = cte
        current = table
        advance_schema(call, table)

    real_ctes = [c for c in ctes if not c.startswith("--")]
    if not real_ctes:
        return "\n".join(c for c in ctes)

    lines = ["WITH"]
    rendered = []
    for c in ctes:
        rendered.append(c if c.startswith("--") else c + ",")
    # strip the trailing comma from the final real CTE
    for idx in range(len(rendered) - 1, -1, -1):
        if not rendered[idx].startswith("--"):
            rendered[idx] = rendered[idx][:-1]
            break
    lines += rendered
    final = relations.get(current, f"step_{step}")
    lines.append(f"SELECT * FROM {final};")
    return "\n".join(lines)


def _cte(name: str, body: str, note: Optional[str]) -> str:
    prefix = f"{note}\n" if note else ""
    return f"{prefix}{name} AS (\n  {body}\n)"


def _default_table(p: PipelineProgram) -> str:
    return p.source_tables[0] if p.source_tables else "table_1"


# -- entry points ---------------------------------------------------------------


def emit(
    p: PipelineProgram,
    dialect: BackendDialect = BackendDialect.DATAFRAME_CHAIN,
    options: EmitOptions = EmitOptions(),
) -> EmittedCode:
    """Compile a program to code text in the requested dialect."""
    if dialect is BackendDialect.DATAFRAME_CHAIN:
        return EmittedCode(_emit_dataframe(p, options), dialect)
    return EmittedCode(_emit_sql(p, options), dialect)


def normalize_code(text: str) -> str:
    """Whitespace-normal form used when comparing emissions."""
    return "".join(text.split())
