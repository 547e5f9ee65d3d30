import pytest

from pipebench.codegen import (
    BackendDialect,
    EmitOptions,
    SQL_UNSUPPORTED,
    emit,
    normalize_code,
    quote_column,
)
from pipebench.dsl import ALL_KINDS, OperatorKind, program_from_obj
from pipebench.propagation import get_schema
from pipebench.tables import ColumnType, Table, TableSet

from conftest import GROUPBY_SORT_PROGRAM, program

DF = BackendDialect.DATAFRAME_CHAIN
SQL = BackendDialect.SQL

EXPECTED_GROUPBY_SORT = """
df.groupby('region')['sales']
    .sum()
    .reset_index()
    .sort_values(by='sales', ascending=False)
"""

EXPECTED_M001 = """
df.query('Year != 2013')
    .drop_duplicates(keep='last')
    .groupby('Name', as_index=False)
    .agg({'Number of Contestants': 'min'})
    .sort_values(by='Number of Contestants', ascending=True)
"""

EXPECTED_H001 = """
df = (
    table_1.merge(table_2, on='ship id', how='right', suffixes=('_left', '_right'))
    .dropna(how='all')
    .assign(location=lambda df: df['location'].str.split(','))
    .explode('location')
    .groupby('type', as_index=False)
    .agg({'speed knots': 'count', 'ship id': 'mean'})
    .sort_values(by=['speed knots', 'ship id'], ascending=[False, False])
    .drop_duplicates(subset=['speed knots', 'ship id'], keep='first')
    .head(2)
    .rename(columns={
        'ship id': 'vessel identifier',
        'speed knots': 'velocity in nautical miles',
        'type': 'category'
    })
)
"""


class TestDataframeGoldens:
    def test_groupby_sort_listing(self):
        code = emit(program(GROUPBY_SORT_PROGRAM), DF)
        assert normalize_code(code.text) == normalize_code(EXPECTED_GROUPBY_SORT)

    def test_m001(self, m001_program):
        code = emit(m001_program, DF)
        assert normalize_code(code.text) == normalize_code(EXPECTED_M001)

    def test_h001(self, h001_program):
        code = emit(h001_program, DF)
        assert normalize_code(code.text) == normalize_code(EXPECTED_H001)


class TestQuoting:
    def test_spaced_column(self):
        assert quote_column("Amount Paid", DF) == "'Amount Paid'"
        assert quote_column("Amount Paid", SQL) == '"Amount Paid"'

    def test_apostrophe(self):
        assert quote_column("O'Brien", DF) == "'O\\'Brien'"

    def test_plain(self):
        assert quote_column("region", DF) == "'region'"
        assert quote_column("region", SQL) == '"region"'

    def test_sql_double_quote_doubling(self):
        assert quote_column('we"ird', SQL) == '"we""ird"'


class TestProperties:
    def test_emit_is_deterministic(self, h001_program):
        a = emit(h001_program, DF).text
        b = emit(h001_program, DF).text
        assert a == b
        assert emit(h001_program, SQL).text == emit(h001_program, SQL).text

    def test_every_kind_covered_in_both_dialects(self):
        samples = {
            OperatorKind.FILTER: {"condition": "a > 1"},
            OperatorKind.DROPNA: {"how": "any"},
            OperatorKind.DEDUPLICATE: {},
            OperatorKind.CAST: {"column": "a", "dtype": "float"},
            OperatorKind.JOIN: {"left_table": "t1", "right_table": "t2", "on": "a"},
            OperatorKind.UNION: {"left_table": "t1", "right_table": "t2"},
            OperatorKind.GROUPBY: {"by": ["a"], "agg": {"b": "sum"}},
            OperatorKind.PIVOT: {"index": "a", "columns": "b", "values": "c"},
            OperatorKind.UNPIVOT: {"id_vars": ["a"], "value_vars": ["b"]},
            OperatorKind.EXPLODE: {"column": "a", "split_comma": True},
            OperatorKind.TRANSPOSE: {},
            OperatorKind.WIDE_TO_LONG: {"stubnames": ["x"], "i": ["a"], "j": "j"},
            OperatorKind.SORT: {"by": ["a"]},
            OperatorKind.TOPK: {"k": 3},
            OperatorKind.SELECT: {"columns": ["a"]},
            OperatorKind.RENAME: {"rename_map": {"a": "b"}},
        }
        assert set(samples) == set(ALL_KINDS)
        for kind, params in samples.items():
            prog = program_from_obj([{"op": kind.value, "params": params}])
            df_code = emit(prog, DF).text
            sql_code = emit(prog, SQL).text
            assert df_code.strip()
            if kind in SQL_UNSUPPORTED:
                assert sql_code == f"-- {kind.value}: unsupported in SQL backend"
            else:
                assert "SELECT" in sql_code

    def test_transpose_sql_placeholder(self):
        prog = program([{"op": "transpose", "params": {}}])
        assert emit(prog, SQL).text == "-- transpose: unsupported in SQL backend"

    def test_annotations(self, m001_program):
        code = emit(m001_program, DF, EmitOptions(annotate=True))
        assert "# op 0: filter" in code.text
        assert "# op 3: sort" in code.text


class TestSqlBackend:
    def test_filter_groupby_sort_chain(self):
        prog = program(
            [
                {"op": "filter", "params": {"condition": "`Amount Paid` > 1000"}},
                {"op": "groupby", "params": {"by": ["Buyer Name"], "agg": {"Amount Paid": "sum"}}},
                {"op": "sort", "params": {"by": ["Amount Paid"], "ascending": [False]}},
            ]
        )
        text = emit(prog, SQL).text
        assert 'WHERE "Amount Paid" > 1000' in text
        assert 'SUM("Amount Paid") AS "Amount Paid"' in text
        assert 'GROUP BY "Buyer Name"' in text
        assert 'ORDER BY "Amount Paid" DESC NULLS LAST' in text
        assert text.endswith("SELECT * FROM step_3;")

    def test_join_uses_using_clause(self, h001_program):
        text = emit(h001_program, SQL).text
        assert '"table_1" RIGHT JOIN "table_2" USING ("ship id")' in text
        assert "-- explode: unsupported in SQL backend" in text

    def test_schema_aware_cast_and_rename(self):
        t = Table(
            "t",
            [("a", ColumnType.TEXT), ("b", ColumnType.INTEGER)],
            [("x", 1)],
        )
        schemas = get_schema(TableSet.of(t))
        prog = program(
            [
                {"op": "cast", "params": {"column": "b", "dtype": "float"}},
                {"op": "rename", "params": {"rename_map": {"a": "label"}}},
            ]
        )
        text = emit(prog, SQL, EmitOptions(schemas=schemas)).text
        assert 'SELECT "a", CAST("b" AS REAL) AS "b" FROM "t"' in text
        assert 'SELECT "a" AS "label", "b" FROM step_1' in text

    def test_unpivot_union_all_blocks(self):
        prog = program(
            [{"op": "unpivot", "params": {"id_vars": ["id"], "value_vars": ["x", "y"]}}]
        )
        text = emit(prog, SQL).text
        assert text.count("UNION ALL") == 1
        assert "'x' AS \"variable\"" in text

    def test_string_literals_escaped(self):
        prog = program([{"op": "filter", "params": {"condition": "name == 'O\\'Brien'"}}])
        text = emit(prog, SQL).text
        assert "'O''Brien'" in text
        df_text = emit(prog, DF).text
        assert 'name == "O\'Brien"' in df_text
