"""Evaluation: canonical table equivalence, the three pipeline metrics
(execution accuracy, program validity, operator accuracy), corpus
diversity measures, and execution-time summaries.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dsl import PipelineProgram
from .interpreter import ExecutionError, ExecutionLimits, TraceEntry, execute_program
from .synthesis import Difficulty, classify_difficulty
from .tables import ColumnType, Table, TableSet, Value


@dataclass(frozen=True)
class EquivalenceOptions:
    float_tolerance: float = 1e-5

    def __post_init__(self):
        if self.float_tolerance <= 0:
            raise ValueError("tolerance must be positive")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _numericish(t: ColumnType) -> bool:
    return t in (ColumnType.INTEGER, ColumnType.REAL)


def _cell_sort_key(v: Value, grid: float):
    if v is None:
        return (3, 0)
    if isinstance(v, bool):
        return (2, int(v))
    if _is_number(v):
        return (0, round(v / grid))
    return (1, v)


def _cells_equal(a: Value, b: Value, tol: float) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a is b
    if _is_number(a) and _is_number(b):
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return False


def canonical_equal(
    a: Table, b: Table, opts: EquivalenceOptions = EquivalenceOptions()
) -> bool:
    """Table equality up to row order, column order, and float tolerance.

    Columns are aligned by name; rows are compared as sorted multisets,
    with floats pre-snapped to a grid one decade finer than the
    tolerance so near-equal values sort identically on both sides.
    """
    a_names, b_names = sorted(a.column_names), sorted(b.column_names)
    if a_names != b_names:
        return False
    if len(set(a.column_names)) != a.num_columns or len(set(b.column_names)) != b.num_columns:
        return False
    if a.num_rows != b.num_rows:
        return False
    for name in a_names:
        ta, tb = a.column_type(name), b.column_type(name)
        if ta is not tb and not (_numericish(ta) and _numericish(tb)):
            return False

    tol = opts.float_tolerance
    grid = tol / 10.0

    def aligned_rows(t: Table) -> list[tuple]:
        idx = [t.column_index(n) for n in a_names]
        rows = [tuple(row[i] for i in idx) for row in t.rows]
        rows.sort(key=lambda row: tuple(_cell_sort_key(v, grid) for v in row))
        return rows

    for row_a, row_b in zip(aligned_rows(a), aligned_rows(b)):
        for cell_a, cell_b in zip(row_a, row_b):
            if not _cells_equal(cell_a, cell_b, tol):
                return False
    return True


# -- the three pipeline metrics ------------------------------------------------


@dataclass
class EvalTask:
    """Gold-side inputs of one benchmark instance."""

    task_id: str
    inputs: TableSet
    gold_program: PipelineProgram
    gold_output: Table
    difficulty: Difficulty = None  # derived from the gold program when unset

    def __post_init__(self):
        if self.difficulty is None:
            self.difficulty = classify_difficulty(self.gold_program)


@dataclass
class TaskResult:
    task_id: str
    difficulty: Difficulty
    ea: bool
    pv: bool
    oa: float
    error: Optional[str] = None  # runtime/parse failure category


@dataclass
class EvalReport:
    results: list[TaskResult]
    missing: list[str] = field(default_factory=list)  # task ids with no prediction

    def _bucket(self, difficulty: Optional[Difficulty]) -> list[TaskResult]:
        if difficulty is None:
            return self.results
        return [r for r in self.results if r.difficulty is difficulty]

    def aggregate(self, difficulty: Optional[Difficulty] = None) -> dict:
        rows = self._bucket(difficulty)
        if not rows:
            return {"EA": None, "PV": None, "OA": None, "count": 0}
        n = len(rows)
        return {
            "EA": 100.0 * sum(r.ea for r in rows) / n,
            "PV": 100.0 * sum(r.pv for r in rows) / n,
            "OA": 100.0 * sum(r.oa for r in rows) / n,
            "count": n,
        }

    def to_json_obj(self) -> dict:
        return {
            "results": [
                {
                    "task_id": r.task_id,
                    "difficulty": r.difficulty.value,
                    "ea": r.ea,
                    "pv": r.pv,
                    "oa": r.oa,
                    "error": r.error,
                }
                for r in self.results
            ],
            "missing": list(self.missing),
            "aggregates": {
                "overall": self.aggregate(),
                **{d.value: self.aggregate(d) for d in Difficulty},
            },
        }

    def to_csv(self) -> str:
        """Metric x difficulty summary table."""
        headers = ["Metric", "Easy", "Medium", "Hard", "Overall"]
        buckets = [self.aggregate(d) for d in Difficulty] + [self.aggregate()]

        def fmt(value) -> str:
            return "" if value is None else f"{value:.2f}"

        lines = [",".join(headers)]
        for metric in ("EA", "PV", "OA"):
            lines.append(",".join([metric] + [fmt(b[metric]) for b in buckets]))
        return "\n".join(lines) + "\n"


def evaluate_task(
    pred: Optional[PipelineProgram],
    task: EvalTask,
    opts: EquivalenceOptions = EquivalenceOptions(),
    limits: ExecutionLimits = ExecutionLimits(),
) -> TaskResult:
    """Score one prediction; an unparseable prediction scores zero."""
    if pred is None:
        return TaskResult(task.task_id, task.difficulty, False, False, 0.0, "ParseError")
    oa = operator_accuracy(pred, task.gold_program)
    try:
        output, _ = execute_program(task.inputs, pred, limits)
    except ExecutionError as exc:
        return TaskResult(
            task.task_id, task.difficulty, False, False, oa, exc.category.value
        )
    ea = canonical_equal(output, task.gold_output, opts)
    return TaskResult(task.task_id, task.difficulty, ea, True, oa)


def evaluate_all(
    preds: dict[str, Optional[PipelineProgram]],
    tasks: Sequence[EvalTask],
    opts: EquivalenceOptions = EquivalenceOptions(),
) -> EvalReport:
    results = []
    missing = []
    for task in tasks:
        if task.task_id not in preds:
            missing.append(task.task_id)
            continue
        results.append(evaluate_task(preds[task.task_id], task, opts))
    return EvalReport(results, missing)


def execution_accuracy(
    pairs: Sequence[tuple[Optional[PipelineProgram], EvalTask]],
    opts: EquivalenceOptions = EquivalenceOptions(),
) -> float:
    if not pairs:
        raise ValueError("no tasks to score")
    results = [evaluate_task(pred, task, opts) for pred, task in pairs]
    return sum(r.ea for r in results) / len(results)


def program_validity(
    pairs: Sequence[tuple[Optional[PipelineProgram], EvalTask]],
) -> float:
    if not pairs:
        raise ValueError("no tasks to score")
    results = [evaluate_task(pred, task) for pred, task in pairs]
    return sum(r.pv for r in results) / len(results)


def operator_accuracy(pred: Optional[PipelineProgram], gold: PipelineProgram) -> float:
    """Share of the gold operator set the prediction covers (order-free)."""
    if pred is None:
        return 0.0
    gold_set = gold.kind_set()
    return len(pred.kind_set() & gold_set) / len(gold_set)


# -- corpus diversity -----------------------------------------------------------


def _ngrams(tokens: list[str], n: int) -> Iterable[tuple[str, ...]]:
    return (tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def distinct_n(corpus: Sequence[str], n: int) -> float:
    """Unique n-grams over total n-grams, whitespace-tokenized."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seen = set()
    total = 0
    for text in corpus:
        for gram in _ngrams(text.split(), n):
            seen.add(gram)
            total += 1
    if total == 0:
        raise ValueError(f"corpus has no {n}-grams")
    return len(seen) / total


def _bleu(candidate: list[str], references: list[list[str]], max_n: int) -> float:
    precisions = []
    for n in range(1, max_n + 1):
        cand_counts = Counter(_ngrams(candidate, n))
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        max_ref = Counter()
        for ref in references:
            ref_counts = Counter(_ngrams(ref, n))
            for gram, count in ref_counts.items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        clipped = sum(min(count, max_ref[gram]) for gram, count in cand_counts.items())
        if clipped == 0:
            return 0.0
        precisions.append(clipped / total)
    c = len(candidate)
    r = min((abs(len(ref) - c), len(ref)) for ref in references)[1]
    bp = 1.0 if c > r else math.exp(1 - r / c) if c > 0 else 0.0
    return bp * math.exp(sum(math.log(p) for p in precisions) / max_n)


def self_bleu(corpus: Sequence[str], max_n: int = 4) -> float:
    """Mean BLEU of each text against the rest of the corpus.

    Uniform n-gram weights, clipped precision, brevity penalty, no
    smoothing: any zero precision collapses that text's score to 0.
    """
    if len(corpus) < 2:
        raise ValueError("self-BLEU needs at least two texts")
    tokenized = [text.split() for text in corpus]
    scores = []
    for i, candidate in enumerate(tokenized):
        references = tokenized[:i] + tokenized[i + 1 :]
        scores.append(_bleu(candidate, references, max_n))
    return sum(scores) / len(scores)


# -- execution timing -------------------------------------------------------------


@dataclass(frozen=True)
class TimingSummary:
    count: int
    mean: float
    median: float
    p25: float
    p75: float
    p95: float


def timing_stats(
    traces: Iterable[TraceEntry], trim_fraction: float = 0.05
) -> dict[str, TimingSummary]:
    """Per-operator duration summaries with the top tail trimmed."""
    by_kind: dict[str, list[float]] = defaultdict(list)
    for entry in traces:
        by_kind[entry.kind.value].append(entry.duration)
    out = {}
    for kind, durations in sorted(by_kind.items()):
        durations = sorted(durations)
        cut = int(len(durations) * trim_fraction)
        kept = durations[: len(durations) - cut] if cut else durations
        arr = np.asarray(kept)
        out[kind] = TimingSummary(
            count=len(durations),
            mean=float(arr.mean()),
            median=float(np.percentile(arr, 50)),
            p25=float(np.percentile(arr, 25)),
            p75=float(np.percentile(arr, 75)),
            p95=float(np.percentile(arr, 95)),
        )
    return out


# -- annotator agreement -----------------------------------------------------------


def cohen_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement between two parallel label sequences."""
    if len(labels_a) != len(labels_b) or not labels_a:
        raise ValueError("label sequences must be parallel and non-empty")
    n = len(labels_a)
    observed = sum(1 for x, y in zip(labels_a, labels_b) if x == y) / n
    count_a, count_b = Counter(labels_a), Counter(labels_b)
    expected = sum(
        (count_a[label] / n) * (count_b[label] / n)
        for label in set(count_a) | set(count_b)
    )
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1 - expected)
