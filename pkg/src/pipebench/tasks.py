"""Benchmark task instances and their on-disk JSON form.

A task bundles input tables, the natural-language instruction, the
symbolic program, its compiled code in both dialects, and the gold
output table.  Files are written deterministically (no timestamps,
fixed key order) so identical synthesis runs are byte-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .codegen import BackendDialect, EmitOptions, emit
from .dsl import PipelineProgram, program_from_obj, program_to_obj
from .instructions import InstructionRecord
from .interpreter import ExecutionLimits, execute_program
from .metrics import EquivalenceOptions, EvalTask, canonical_equal
from .propagation import get_schema
from .synthesis import Difficulty, classify_difficulty
from .tables import CurationOptions, Table, TableError, TableSet, ingest_csv


class TaskFileError(Exception):
    """Missing or malformed task file."""


@dataclass
class TaskInstance:
    task_id: str
    tables: TableSet
    instruction: InstructionRecord
    program: PipelineProgram
    code: dict[str, str]
    gold_output: Table
    difficulty: Difficulty = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.difficulty is None:
            self.difficulty = classify_difficulty(self.program)

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.task_id,
            "difficulty": self.difficulty.value,
            "tables": [t.to_json_obj() for t in self.tables],
            "instruction": self.instruction.to_json_obj(),
            "program": program_to_obj(self.program),
            "code": dict(self.code),
            "gold_output": self.gold_output.to_json_obj(),
        }
        if self.seed is not None:
            obj["seed"] = self.seed
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict, base_dir: Optional[Path] = None) -> "TaskInstance":
        try:
            tables = []
            for entry in obj["tables"]:
                if "csv" in entry:
                    path = Path(entry["csv"])
                    if base_dir is not None and not path.is_absolute():
                        path = base_dir / path
                    tables.append(
                        ingest_csv(str(path), entry["name"], CurationOptions())
                    )
                else:
                    tables.append(Table.from_json_obj(entry))
            program = program_from_obj(obj["program"])
            gold = obj["gold_output"]
            if "csv" in gold:
                path = Path(gold["csv"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                gold_output = ingest_csv(str(path), gold.get("name", "output"), CurationOptions())
            else:
                gold_output = Table.from_json_obj(gold)
            return cls(
                task_id=obj["id"],
                tables=TableSet.of(*tables),
                instruction=InstructionRecord.from_json_obj(obj["instruction"]),
                program=program,
                code=dict(obj.get("code", {})),
                gold_output=gold_output,
                difficulty=Difficulty(obj["difficulty"]) if "difficulty" in obj else None,
                seed=obj.get("seed"),
            )
        except (KeyError, TypeError, ValueError, TableError) as exc:
            raise TaskFileError(f"malformed task object: {exc}") from exc

    def phase1_check(
        self,
        opts: EquivalenceOptions = EquivalenceOptions(),
        limits: ExecutionLimits = ExecutionLimits(),
    ) -> bool:
        """Re-execute the gold program and compare against the stored output."""
        try:
            actual, _ = execute_program(self.tables, self.program, limits)
        except Exception:
            return False
        return canonical_equal(actual, self.gold_output, opts)

    def to_eval_task(self) -> EvalTask:
        return EvalTask(
            self.task_id, self.tables, self.program, self.gold_output, self.difficulty
        )


def compile_code(program: PipelineProgram, tables: TableSet, annotate: bool = False) -> dict[str, str]:
    """Both dialects, schema-aware where the backend can use it."""
    options = EmitOptions(annotate=annotate, schemas=get_schema(tables))
    return {
        dialect.value: emit(program, dialect, options).text for dialect in BackendDialect
    }


def save_task(task: TaskInstance, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{task.task_id}.json"
    text = json.dumps(task.to_json_obj(), ensure_ascii=False, indent=2) + "\n"
    path.write_text(text, encoding="utf-8")
    return path


def load_task(path: str | Path) -> TaskInstance:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise TaskFileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TaskFileError(f"{path}: invalid JSON: {exc}") from exc
    return TaskInstance.from_json_obj(obj, base_dir=path.parent)


def load_task_dir(directory: str | Path) -> list[TaskInstance]:
    directory = Path(directory)
    if not directory.is_dir():
        raise TaskFileError(f"not a directory: {directory}")
    tasks = []
    for path in sorted(directory.glob("*.json")):
        if path.name.startswith(("rejects", "report")):
            continue
        tasks.append(load_task(path))
    return tasks
