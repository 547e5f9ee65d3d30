"""Command-line entry point tying the toolchain together.

Subcommands: synthesize, run, compile, instruct, evaluate, stats,
agent, review-serve.  All synthesis paths are offline and seeded unless
a hosted model is requested explicitly.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import Counter
from pathlib import Path

from .agent import ScriptedPolicy, llm_policy, run_episode
from .codegen import BackendDialect, EmitOptions, emit
from .dsl import ProgramError, parse_program
from .instructions import (
    HttpChatClient,
    InstructionError,
    OfflineTemplateClient,
    generate_instruction,
)
from .interpreter import ExecutionError, execute_program
from .metrics import (
    EquivalenceOptions,
    canonical_equal,
    distinct_n,
    evaluate_all,
    self_bleu,
    timing_stats,
)
from .propagation import get_schema
from .synthesis import (
    DEFAULT_MEAN_CHAIN_LENGTH,
    LengthDistribution,
    SynthesisError,
    TransitionMatrix,
    choose_task_tables,
    classify_difficulty,
    synthesize_chain,
)
from .tables import CurationOptions, TableError, TableSet, ingest_csv
from .tasks import TaskFileError, TaskInstance, compile_code, load_task, load_task_dir, save_task


class CommandError(Exception):
    """User-facing failure; message printed, exit code 1."""


def _emit_json(args, payload: dict):
    if getattr(args, "json", False):
        print(json.dumps(payload, ensure_ascii=False, indent=2))


def make_client(model: str | None):
    if model:
        return HttpChatClient(model)
    return OfflineTemplateClient()


def task_rng(seed: int, index: int) -> random.Random:
    # independent stream per task index, stable across runs
    return random.Random(seed * 1_000_003 + index)


def load_corpus(directory: str) -> list:
    path = Path(directory)
    if not path.is_dir():
        raise CommandError(f"table directory not found: {directory}")
    tables = []
    for csv_path in sorted(path.glob("*.csv")):
        try:
            tables.append(ingest_csv(str(csv_path), csv_path.stem, CurationOptions()))
        except TableError as exc:
            print(f"skipping {csv_path.name}: {exc}", file=sys.stderr)
    if not tables:
        raise CommandError(f"no usable CSV tables in {directory}")
    return tables


def cmd_synthesize(args) -> int:
    corpus = load_corpus(args.tables)
    matrix = (
        TransitionMatrix.load(args.transitions)
        if args.transitions
        else TransitionMatrix.default()
    )
    lengths = LengthDistribution.fit_mean(args.mean_length)
    client = make_client(args.model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rejects_path = out_dir / "rejects.jsonl"
    rejects: list[dict] = []

    written = []
    difficulty_counts = Counter()
    for i in range(args.count):
        rng = task_rng(args.seed, i)
        task_id = f"T{i:05d}"
        chosen = choose_task_tables(corpus, matrix, rng)
        renamed = TableSet.of(
            *[t.with_name(f"table_{j + 1}") for j, t in enumerate(chosen)]
        )
        try:
            result = synthesize_chain(renamed, matrix, lengths, rng)
        except SynthesisError as exc:
            rejects.append({"id": task_id, "stage": "synthesis", "reason": str(exc)})
            continue
        record, accepted = generate_instruction(
            result.program, renamed, result.output, client
        )
        if not accepted:
            rejects.append(
                {"id": task_id, "stage": "judge", "reason": "failed alignment twice"}
            )
            continue
        task = TaskInstance(
            task_id=task_id,
            tables=renamed,
            instruction=record,
            program=result.program,
            code=compile_code(result.program, renamed),
            gold_output=result.output,
            seed=args.seed,
        )
        if not task.phase1_check():
            rejects.append(
                {"id": task_id, "stage": "phase1", "reason": "output mismatch on re-execution"}
            )
            continue
        save_task(task, out_dir)
        written.append(task_id)
        difficulty_counts[task.difficulty.value] += 1

    if rejects:
        with open(rejects_path, "w", encoding="utf-8") as fh:
            for entry in rejects:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    summary = {
        "written": len(written),
        "rejected": len(rejects),
        "difficulty": dict(sorted(difficulty_counts.items())),
        "out": str(out_dir),
    }
    print(
        f"synthesized {summary['written']} tasks into {out_dir} "
        f"({summary['rejected']} rejected){'' if not rejects else f', see {rejects_path}'}"
    )
    print(f"difficulty mix: {summary['difficulty']}")
    _emit_json(args, summary)
    return 0


def cmd_run(args) -> int:
    task = load_task(args.task)
    try:
        output, _ = execute_program(task.tables, task.program)
    except ExecutionError as exc:
        raise CommandError(f"execution failed: {exc}") from exc
    if args.json:
        print(output.to_json(indent=2))
    else:
        print(output.to_csv(), end="")
    return 0


def cmd_compile(args) -> int:
    task = load_task(args.task)
    dialect = BackendDialect.from_string(args.backend)
    options = EmitOptions(annotate=args.annotate, schemas=get_schema(task.tables))
    code = emit(task.program, dialect, options)
    print(code.text)
    return 0


def cmd_instruct(args) -> int:
    task = load_task(args.task)
    client = make_client(args.model)
    try:
        record, accepted = generate_instruction(
            task.program, task.tables, task.gold_output, client
        )
    except InstructionError as exc:
        raise CommandError(f"instruction generation failed for {task.task_id}: {exc}") from exc
    if args.write:
        task.instruction = record
        save_task(task, Path(args.task).parent)
    payload = {"id": task.task_id, "accepted": accepted, **record.to_json_obj()}
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    gold_tasks = load_task_dir(args.gold)
    if not gold_tasks:
        raise CommandError(f"no gold tasks in {args.gold}")
    pred_dir = Path(args.pred)
    preds = {}
    unparseable = []
    for task in gold_tasks:
        path = pred_dir / f"{task.task_id}.json"
        if not path.is_file():
            continue
        try:
            preds[task.task_id] = parse_program(path.read_text(encoding="utf-8"))
        except (ProgramError, OSError) as exc:
            preds[task.task_id] = None
            unparseable.append({"id": task.task_id, "reason": str(exc)})
    report = evaluate_all(preds, [t.to_eval_task() for t in gold_tasks],
                          EquivalenceOptions(args.tolerance))
    if report.missing:
        print(f"warning: {len(report.missing)} task(s) had no prediction: "
              f"{', '.join(report.missing[:10])}", file=sys.stderr)
    if not report.results:
        print("warning: report covers 0 matched tasks", file=sys.stderr)
    csv_text = report.to_csv()
    print(csv_text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_json_obj(), ensure_ascii=False, indent=2) + "\n"
        )
        (out / "report.csv").write_text(csv_text)
        print(f"wrote {out / 'report.json'} and {out / 'report.csv'}", file=sys.stderr)
    _emit_json(args, report.to_json_obj())
    return 0


def cmd_stats(args) -> int:
    tasks = load_task_dir(args.tasks)
    if not tasks:
        raise CommandError(f"no tasks in {args.tasks}")
    lengths = [len(t.program) for t in tasks]
    histogram = dict(sorted(Counter(lengths).items()))
    ops = Counter()
    for t in tasks:
        for kind in t.program.kinds():
            ops[kind.value] += 1
    instructions = [t.instruction.final for t in tasks if t.instruction.final]
    traces = []
    for t in tasks:
        try:
            _, trace = execute_program(t.tables, t.program)
            traces.extend(trace)
        except ExecutionError:
            pass
    payload = {
        "tasks": len(tasks),
        "chain_length": {
            "histogram": {str(k): v for k, v in histogram.items()},
            "mean": sum(lengths) / len(lengths),
        },
        "difficulty": dict(
            sorted(Counter(t.difficulty.value for t in tasks).items())
        ),
        "operator_frequency": dict(ops.most_common()),
        "multi_table_fraction": sum(1 for t in tasks if len(t.tables) > 1) / len(tasks),
        "diversity": {},
        "timing": {
            kind: {
                "count": s.count,
                "mean": s.mean,
                "median": s.median,
                "p25": s.p25,
                "p75": s.p75,
                "p95": s.p95,
            }
            for kind, s in timing_stats(traces).items()
        },
    }
    if instructions:
        payload["diversity"]["distinct_1"] = distinct_n(instructions, 1)
        payload["diversity"]["distinct_2"] = distinct_n(instructions, 2)
        if len(instructions) >= 2:
            payload["diversity"]["self_bleu_4"] = self_bleu(instructions)
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return 0


def cmd_agent(args) -> int:
    task = load_task(args.task)
    if args.model:
        policy = llm_policy(make_client(args.model))
    else:
        policy = ScriptedPolicy.replay(task.program)
    result = run_episode(task.tables, task.instruction.final, policy, budget=args.budget)
    ea = canonical_equal(result.final_table, task.gold_output)
    if args.transcript:
        Path(args.transcript).write_text(result.transcript_jsonl(), encoding="utf-8")
    payload = {
        "id": task.task_id,
        "steps": len(result.history),
        "ops": len(result.ops),
        "finished": result.finished,
        "exhausted": result.exhausted,
        "ea": ea,
    }
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return 0


def cmd_review_serve(args) -> int:
    from .review_server import serve

    serve(
        tasks_dir=args.tasks,
        verdicts_path=args.verdicts,
        port=args.port,
        ui_dir=args.ui,
        host=args.host,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipebench",
        description="Synthesize, execute, compile and evaluate table-preparation pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="generate benchmark task files from a table corpus")
    p.add_argument("--tables", required=True, help="directory of source CSV files")
    p.add_argument("--transitions", help="transition counts JSON (default: built-in)")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for task JSON files")
    p.add_argument("--model", help="hosted model for instruction generation (offline when unset)")
    p.add_argument("--mean-length", type=float, default=DEFAULT_MEAN_CHAIN_LENGTH)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("run", help="execute a task's gold program and print the output table")
    p.add_argument("--task", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile", help="emit backend code for a task's program")
    p.add_argument("--task", required=True)
    p.add_argument("--backend", default="dataframe-chain",
                   choices=[d.value for d in BackendDialect])
    p.add_argument("--annotate", action="store_true")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("instruct", help="regenerate the instruction for a task")
    p.add_argument("--task", required=True)
    p.add_argument("--model")
    p.add_argument("--write", action="store_true", help="update the task file in place")
    p.set_defaults(func=cmd_instruct)

    p = sub.add_parser("evaluate", help="score predicted programs against gold tasks")
    p.add_argument("--pred", required=True, help="directory of <task id>.json DSL predictions")
    p.add_argument("--gold", required=True, help="directory of gold task files")
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--out", help="directory for report.json / report.csv")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="corpus statistics for a task directory")
    p.add_argument("--tasks", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("agent", help="run the interactive agent loop on a task")
    p.add_argument("--task", required=True)
    p.add_argument("--model", help="hosted model (scripted gold replay when unset)")
    p.add_argument("--budget", type=int, default=12)
    p.add_argument("--transcript", help="write the episode transcript JSONL here")
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("review-serve", help="serve the expert-review API and UI")
    p.add_argument("--tasks", required=True)
    p.add_argument("--verdicts", required=True, help="verdict log file (JSONL)")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="directory of built UI assets to host")
    p.set_defaults(func=cmd_review_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, TaskFileError, TableError, ProgramError, InstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
