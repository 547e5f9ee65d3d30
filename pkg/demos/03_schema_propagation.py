# Schema propagation: validating operators against a running schema and
# predicting each operator's output schema without touching row data.

import random

from pipebench import OperatorCall, OperatorKind, get_schema, propagate, validate
from pipebench import validate_and_bind
from pipebench.tables import ColumnType, Table, TableSet

orders = Table(
    "orders",
    [
        ("order_id", ColumnType.INTEGER),
        ("region", ColumnType.TEXT),
        ("sales", ColumnType.REAL),
    ],
    [(1, "north", 10.0), (2, "south", 20.0), (3, "north", 5.5)],
)
regions = Table(
    "regions",
    [("region", ColumnType.TEXT), ("manager", ColumnType.TEXT)],
    [("north", "Kim"), ("south", "Ona")],
)
data = TableSet.of(orders, regions)
state = get_schema(data)

good = OperatorCall(
    OperatorKind.JOIN,
    {"left_table": "orders", "right_table": "regions", "on": "region"},
)
print("join valid?", validate(good, state) is None)

bad = OperatorCall(
    OperatorKind.GROUPBY, {"by": ["ghost"], "agg": {"sales": "sum"}}, table="orders"
)
print("groupby on missing column ->", validate(bad, state))

state = propagate(good, state)
print("\nafter join, live tables:", state.names())
print("merged schema:", state["orders_regions_join"].columns)

# Aggregation output types follow the function: mean widens to real,
# count is always an integer.
agg = OperatorCall(
    OperatorKind.GROUPBY, {"by": ["manager"], "agg": {"sales": "mean"}}
)
state = propagate(agg, state)
print("after groupby:", state["orders_regions_join"].columns)

# Binding samples concrete parameters for a kind, using live data for
# literals; an unbindable kind is reported, not raised.
rng = random.Random(7)
outcome = validate_and_bind(OperatorKind.FILTER, get_schema(data), rng, data)
print("\nbound filter:", outcome.call.params["condition"])
outcome = validate_and_bind(OperatorKind.UNION, get_schema(data), rng, data)
print("union over mismatched schemas ->", outcome.reason)
