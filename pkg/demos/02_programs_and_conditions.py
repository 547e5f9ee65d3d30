# The symbolic program model: 16 operator kinds, validated parameters,
# a JSON wire form, and the filter-condition mini-language.

from pipebench import parse_condition, parse_program, serialize_program
from pipebench.dsl import ALL_KINDS, UnknownOperator

print("operator kinds:", ", ".join(k.value for k in ALL_KINDS))

program = parse_program(
    """
    [
      {"op": "groupby", "params": {"by": ["region"], "agg": {"sales": "sum"}}},
      {"op": "sort", "params": {"by": "sales", "ascending": false}}
    ]
    """
)
print("\nparsed kinds:", [k.value for k in program.kinds()])
print("canonical form:", serialize_program(program))

# Parsing normalizes sugar: a scalar sort key became a list, and the
# ascending flag was broadcast alongside it.
assert program.ops[1].params == {"by": ["sales"], "ascending": [False]}

# Unknown operators are rejected with the offending index.
try:
    parse_program('[{"op": "head", "params": {}}]')
except UnknownOperator as exc:
    print("\nrejected:", exc)

# Conditions form a tiny AST of comparisons joined by and/or.
cond = parse_condition("`Amount Paid` > 1000 and (Status == 'Open' or Year != 2013)")
print("\ncondition columns:", sorted(cond.columns()))

# Serialization round-trips bit for bit.
assert parse_program(serialize_program(program)) == program
print("round trip OK")
