# Scoring predictions: canonical table equivalence and the three
# pipeline metrics, plus the corpus diversity measures.

from pipebench import execute_program, parse_program
from pipebench.metrics import (
    EvalTask,
    canonical_equal,
    distinct_n,
    evaluate_all,
    operator_accuracy,
    self_bleu,
)
from pipebench.tables import ColumnType, Table, TableSet

inputs = TableSet.of(
    Table(
        "table_1",
        [("c", ColumnType.TEXT), ("v", ColumnType.REAL)],
        [("x", 1.0), ("y", 2.0), ("x", 3.0), ("y", 5.0)],
    )
)
gold_program = parse_program(
    '[{"op": "groupby", "params": {"by": ["c"], "agg": {"v": "sum"}}},'
    ' {"op": "sort", "params": {"by": ["v"], "ascending": [false]}}]'
)
gold_output, _ = execute_program(inputs, gold_program)
task = EvalTask("demo", inputs, gold_program, gold_output)

# Equivalence ignores row order, column order, and float dust.
shuffled = Table(
    "anything",
    [("v", ColumnType.REAL), ("c", ColumnType.TEXT)],
    [(7.0 + 1e-9, "y"), (4.0, "x")],
)
print("canonical equal:", canonical_equal(gold_output, shuffled))

predictions = {
    "demo": parse_program(
        '[{"op": "groupby", "params": {"by": ["c"], "agg": {"v": "sum"}}}]'
    )
}
report = evaluate_all(predictions, [task])
print("\nper-task:", report.results[0])
print(report.to_csv())

# Operator accuracy is set-based and order-free.
print("OA:", operator_accuracy(predictions["demo"], gold_program))

corpus = [
    "group the sales by region and keep the top rows",
    "sort the cities by population in descending order",
    "group the orders by buyer and total the amounts",
]
print("\ndistinct-1:", round(distinct_n(corpus, 1), 3))
print("distinct-2:", round(distinct_n(corpus, 2), 3))
print("self-BLEU-4:", round(self_bleu(corpus), 3))
