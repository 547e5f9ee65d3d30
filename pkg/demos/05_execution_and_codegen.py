# Executing a pipeline natively and compiling the same program to both
# backend dialects.

from pipebench import execute_program, parse_program
from pipebench.codegen import BackendDialect, EmitOptions, emit
from pipebench.propagation import get_schema
from pipebench.tables import ColumnType, Table, TableSet

table = Table(
    "table_1",
    [
        ("Buyer Name", ColumnType.TEXT),
        ("Amount Paid", ColumnType.REAL),
        ("Year", ColumnType.INTEGER),
    ],
    [
        ("Ada", 1200.0, 2013),
        ("Grace", 800.0, 2014),
        ("Ada", 2500.0, 2014),
        ("Alan", 1500.0, 2015),
        ("Grace", 3100.0, 2015),
    ],
)
data = TableSet.of(table)

program = parse_program(
    """
    [
      {"op": "filter", "params": {"condition": "`Amount Paid` > 1000"}},
      {"op": "groupby", "params": {"by": ["Buyer Name"], "agg": {"Amount Paid": "sum"}}},
      {"op": "rename", "params": {"rename_map": {"Amount Paid": "Total Payment"}}},
      {"op": "sort", "params": {"by": ["Total Payment"], "ascending": [false]}}
    ]
    """
)

output, trace = execute_program(data, program)
print("result:")
print(output.to_csv())
print("per-op durations (s):", [round(entry.duration, 6) for entry in trace])

print("dataframe dialect:\n")
print(emit(program, BackendDialect.DATAFRAME_CHAIN).text)

print("\nSQL dialect (schema-aware):\n")
print(emit(program, BackendDialect.SQL, EmitOptions(schemas=get_schema(data))).text)

# Kinds without a static SQL equivalent degrade to a declared comment.
transpose_only = parse_program('[{"op": "transpose", "params": {}}]')
print("\n" + emit(transpose_only, BackendDialect.SQL).text)
