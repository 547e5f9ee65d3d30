# Chain synthesis: a first-order transition model proposes operators,
# the schema validator binds or discards them, and every accepted step
# executes immediately, so finished chains always run end to end.

import random
from collections import Counter

from pipebench.synthesis import (
    LengthDistribution,
    TransitionMatrix,
    classify_difficulty,
    synthesize_chain,
)
from pipebench.dsl import OperatorKind, serialize_program
from pipebench.tables import ColumnType, Table, TableSet

matrix = TransitionMatrix.default()
print("P(sort | groupby) =", round(matrix.prob(OperatorKind.GROUPBY, OperatorKind.SORT), 4))
print("join+union mass  =", round(matrix.kind_mass([OperatorKind.JOIN, OperatorKind.UNION]), 4))

lengths = LengthDistribution.fit_mean(4.24)
print("length prior: p =", round(lengths.p, 5), "mean =", round(lengths.mean(), 3))

table = Table(
    "table_1",
    [
        ("id", ColumnType.INTEGER),
        ("city", ColumnType.TEXT),
        ("amount", ColumnType.REAL),
    ],
    [(i, c, float(i * 3 + 1)) for i, c in enumerate(["Oslo", "Lima", "Oslo", "Kyoto", "Lima", "Oslo"])],
)
data = TableSet.of(table)

rng = random.Random(99)
result = synthesize_chain(data, matrix, lengths, rng)
print("\nsynthesized ({} ops, {}):".format(len(result.program), classify_difficulty(result.program).value))
print(serialize_program(result.program, indent=2))
print("\noutput table:", result.output.schema())
for row in result.output.rows[:5]:
    print("  ", row)

# Same seed, same chain: synthesis is reproducible bit for bit.
again = synthesize_chain(data, matrix, lengths, random.Random(99))
assert serialize_program(again.program) == serialize_program(
    synthesize_chain(data, matrix, lengths, random.Random(99)).program
)

# Difficulty tiers over a small batch.
tiers = Counter()
batch_rng = random.Random(5)
for _ in range(200):
    tiers[classify_difficulty(synthesize_chain(data, matrix, lengths, batch_rng).program).value] += 1
print("\ndifficulty mix over 200 chains:", dict(tiers))
