"""Toolchain for synthesizing, executing, compiling and evaluating
multi-step table-preparation pipelines."""

from .tables import (
    ColumnType,
    CurationOptions,
    Table,
    TableError,
    TableSet,
    infer_column_type,
    ingest_csv,
    ingest_csv_text,
)
from .conditions import Condition, ConditionError, parse_condition, render_condition
from .dsl import (
    ALL_KINDS,
    MalformedParams,
    OperatorCall,
    OperatorKind,
    PipelineProgram,
    ProgramError,
    UnknownOperator,
    parse_program,
    serialize_program,
)
from .propagation import (
    BindingOutcome,
    SchemaState,
    get_schema,
    propagate,
    validate,
    validate_and_bind,
)
from .interpreter import (
    ErrorCategory,
    ExecContext,
    ExecutionError,
    ExecutionLimits,
    execute_op,
    execute_program,
)

__version__ = "0.1.0"

__all__ = [
    "ColumnType",
    "CurationOptions",
    "Table",
    "TableError",
    "TableSet",
    "infer_column_type",
    "ingest_csv",
    "ingest_csv_text",
    "Condition",
    "ConditionError",
    "parse_condition",
    "render_condition",
    "ALL_KINDS",
    "MalformedParams",
    "OperatorCall",
    "OperatorKind",
    "PipelineProgram",
    "ProgramError",
    "UnknownOperator",
    "parse_program",
    "serialize_program",
    "BindingOutcome",
    "SchemaState",
    "get_schema",
    "propagate",
    "validate",
    "validate_and_bind",
    "ErrorCategory",
    "ExecContext",
    "ExecutionError",
    "ExecutionLimits",
    "execute_op",
    "execute_program",
]
