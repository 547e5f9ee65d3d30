# The interactive agent loop: a policy proposes one structured action at
# a time, the validator executes it, and failures come back as error
# observations without corrupting the working tables.

from pipebench.agent import AgentAction, ScriptedPolicy, run_episode
from pipebench.dsl import OperatorCall, OperatorKind, parse_program
from pipebench.metrics import canonical_equal
from pipebench import execute_program
from pipebench.tables import ColumnType, Table, TableSet

inputs = TableSet.of(
    Table(
        "table_1",
        [("name", ColumnType.TEXT), ("score", ColumnType.INTEGER)],
        [("ann", 4), ("bob", 9), ("eve", 7), ("ann", 2)],
    )
)
gold_program = parse_program(
    '[{"op": "filter", "params": {"condition": "score > 3"}},'
    ' {"op": "sort", "params": {"by": ["score"], "ascending": [false]}},'
    ' {"op": "topk", "params": {"k": 2}}]'
)
gold, _ = execute_program(inputs, gold_program)

# A scripted policy that stumbles once: the bad select yields an error
# observation, then the correct steps proceed from untouched state.
actions = [AgentAction(OperatorCall(OperatorKind.SELECT, {"columns": ["ghost"]}))]
actions += [AgentAction(op) for op in gold_program.ops]
result = run_episode(inputs, "keep the two best scores", ScriptedPolicy(actions))

print("finished:", result.finished)
print("first observation error:", result.history[0][1].error)
print("accumulated ops:", [op.kind.value for op in result.ops])
print("matches gold:", canonical_equal(result.final_table, gold))
print("\ntranscript:")
print(result.transcript_jsonl())
