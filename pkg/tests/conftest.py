import json
import random
from pathlib import Path

import pytest

from pipebench.dsl import PipelineProgram, program_from_obj
from pipebench.tables import ColumnType, Table, TableSet, ingest_csv

DATA_DIR = Path(__file__).parent / "data"

_CITY_POOL = [
    "Oslo", "Lima", "Kyoto, Japan", "Quito", "Turku, Finland", "Accra",
    "Hobart", "Bergen, Norway",
]
_CATEGORY_POOL = ["alpha", "beta", "gamma", "delta, minor", "epsilon"]


def make_corpus_table(index: int, rng: random.Random) -> Table:
    """One deterministic synthetic table; shapes cycle through a few
    recurring layouts so joins, unions and reshaping all stay bindable."""
    shape = index % 5
    n = rng.randint(6, 18)
    if shape in (0, 3):  # shapes 0 and 3 share a schema, so unions bind
        cols = [
            ("id", ColumnType.INTEGER),
            ("name", ColumnType.TEXT),
            ("amount", ColumnType.REAL),
            ("active", ColumnType.BOOLEAN),
        ]
        rows = [
            (
                rng.randint(1, 9),
                rng.choice(_CATEGORY_POOL),
                rng.choice([None, round(rng.uniform(-5, 50), 2)]),
                rng.random() < 0.5,
            )
            for _ in range(n)
        ]
    elif shape == 1:
        cols = [
            ("id", ColumnType.INTEGER),
            ("city", ColumnType.TEXT),
            ("score", ColumnType.REAL),
        ]
        rows = [
            (rng.randint(1, 9), rng.choice(_CITY_POOL), round(rng.uniform(0, 10), 3))
            for _ in range(n)
        ]
    elif shape == 2:
        cols = [
            ("id", ColumnType.INTEGER),
            ("score_1", ColumnType.REAL),
            ("score_2", ColumnType.REAL),
            ("region", ColumnType.TEXT),
        ]
        rows = [
            (
                i + 1,
                round(rng.uniform(0, 1), 3),
                round(rng.uniform(0, 1), 3),
                rng.choice(["north", "south", "east"]),
            )
            for i in range(n)
        ]
    else:
        cols = [
            ("id", ColumnType.INTEGER),
            ("year", ColumnType.INTEGER),
            ("city", ColumnType.TEXT),
            ("value", ColumnType.INTEGER),
        ]
        rows = [
            (
                rng.randint(1, 9),
                rng.randint(2010, 2020),
                rng.choice([None, rng.choice(_CITY_POOL)]),
                rng.randint(0, 500),
            )
            for _ in range(n)
        ]
    return Table(f"corpus_{index:02d}", cols, rows)


def make_corpus(count: int, seed: int = 2024) -> list[Table]:
    rng = random.Random(seed)
    return [make_corpus_table(i, rng) for i in range(count)]


def write_corpus_csvs(directory: Path, count: int, seed: int = 2024) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for table in make_corpus(count, seed):
        (directory / f"{table.name}.csv").write_text(table.to_csv(), encoding="utf-8")
    return directory


def load_table(filename: str, name: str) -> Table:
    return ingest_csv(str(DATA_DIR / filename), name)


@pytest.fixture
def e001_table() -> Table:
    return load_table("e001_input.csv", "table_1")


@pytest.fixture
def m001_table() -> Table:
    return load_table("m001_input.csv", "table_1")


@pytest.fixture
def h001_tables() -> TableSet:
    return TableSet.of(
        load_table("h001_table_1.csv", "table_1"),
        load_table("h001_table_2.csv", "table_2"),
    )


E001_PROGRAM = [
    {
        "op": "sort",
        "params": {"by": ["Civil Liberties", "President"], "ascending": [True, True]},
    }
]

M001_PROGRAM = [
    {"op": "filter", "params": {"column": "Year", "condition": "!= 2013"}},
    {"op": "deduplicate", "params": {"subset": None, "keep": "last"}},
    {"op": "groupby", "params": {"by": ["Name"], "agg": {"Number of Contestants": "min"}}},
    {"op": "sort", "params": {"by": ["Number of Contestants"], "ascending": [True]}},
]

H001_PROGRAM = [
    {
        "op": "join",
        "params": {
            "left_table": "table_1",
            "right_table": "table_2",
            "on": "ship id",
            "how": "right",
            "suffixes": ["_left", "_right"],
        },
    },
    {"op": "dropna", "params": {"how": "all"}},
    {"op": "explode", "params": {"column": "location", "split_comma": True}},
    {
        "op": "groupby",
        "params": {"by": ["type"], "agg": {"speed knots": "count", "ship id": "mean"}},
    },
    {"op": "sort", "params": {"by": ["speed knots", "ship id"], "ascending": [False, False]}},
    {"op": "deduplicate", "params": {"subset": ["speed knots", "ship id"], "keep": "first"}},
    {"op": "topk", "params": {"k": 2}},
    {
        "op": "rename",
        "params": {
            "rename_map": {
                "ship id": "vessel identifier",
                "speed knots": "velocity in nautical miles",
                "type": "category",
            }
        },
    },
]

GROUPBY_SORT_PROGRAM = [
    {"op": "groupby", "params": {"by": ["region"], "agg": {"sales": "sum"}}},
    {"op": "sort", "params": {"by": "sales", "ascending": False}},
]


def program(obj: list) -> PipelineProgram:
    return program_from_obj(json.loads(json.dumps(obj)))


@pytest.fixture
def e001_program() -> PipelineProgram:
    return program(E001_PROGRAM)


@pytest.fixture
def m001_program() -> PipelineProgram:
    return program(M001_PROGRAM)


@pytest.fixture
def h001_program() -> PipelineProgram:
    return program(H001_PROGRAM)
