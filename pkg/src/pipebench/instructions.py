"""Two-step natural-language instruction generation plus the alignment
judge, against a pluggable text-model client.

The offline client answers every prompt deterministically from rule
templates, so the full synthesis pipeline runs without network access;
an HTTP client covers hosted chat-completion APIs.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
import urllib.request
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Protocol

from .conditions import render_condition
from .dsl import OperatorCall, OperatorKind, PipelineProgram, program_to_obj
from .tables import Table, TableSet, format_cell

DEFAULT_TEMPERATURE = 0.7
JUDGE_TEMPERATURE = 0.0
MAX_JUDGE_ROUNDS = 2
PREVIEW_ROWS = 10


class InstructionError(Exception):
    """Client failure or unusable model reply."""


class TextModelClient(Protocol):
    identity: str

    def complete(self, prompt: str, temperature: float) -> str: ...


# -- prompt assets -----------------------------------------------------------


def load_prompt(name: str) -> str:
    return resources.files("pipebench").joinpath(f"prompts/{name}.txt").read_text()


def chain_text(program: PipelineProgram) -> str:
    return json.dumps(program_to_obj(program), ensure_ascii=False, indent=2)


def table_preview(table: Table, limit: int = PREVIEW_ROWS) -> str:
    lines = [f"Table: {table.name}", ",".join(table.column_names)]
    for row in table.rows[:limit]:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines)


def tables_preview(tables: TableSet, limit: int = PREVIEW_ROWS) -> str:
    return "\n\n".join(table_preview(t, limit) for t in tables)


def render_generate_prompt(program: PipelineProgram, inputs: TableSet, output: Table) -> str:
    return load_prompt("generate").format(
        transform_chain_str=chain_text(program),
        input_table_str=tables_preview(inputs),
        target_table_str=table_preview(output),
    )


def render_refine_prompt(draft: str, program: PipelineProgram) -> str:
    return load_prompt("refine").format(
        transform_chain=chain_text(program),
        task_instruction=draft,
    )


def render_verify_prompt(program: PipelineProgram, draft: str, intent: str) -> str:
    return load_prompt("verify").format(
        transform_chain_str=chain_text(program),
        instruction=draft,
        intent_text=intent,
    )


# -- offline client ----------------------------------------------------------


def _quoted_list(items) -> str:
    quoted = [f"'{i}'" for i in items]
    if len(quoted) == 1:
        return quoted[0]
    return ", ".join(quoted[:-1]) + " and " + quoted[-1]


def describe_call(call: OperatorCall, table: str) -> str:
    """One deterministic English sentence for an operator."""
    kind, p = call.kind, call.params
    t = call.table or table

    if kind is OperatorKind.FILTER:
        return f"Filter the rows of '{t}' where {render_condition(p['condition'])}."
    if kind is OperatorKind.DROPNA:
        where = f" in {_quoted_list(p['subset'])}" if p["subset"] else ""
        mode = "any value is missing" if p["how"] == "any" else "all values are missing"
        return f"Remove the rows of '{t}' where {mode}{where}."
    if kind is OperatorKind.DEDUPLICATE:
        over = f" based on {_quoted_list(p['subset'])}" if p["subset"] else ""
        return (
            f"Remove duplicate rows from '{t}'{over}, keeping the {p['keep']} occurrence."
        )
    if kind is OperatorKind.CAST:
        names = {"int": "integer", "float": "decimal", "str": "text", "bool": "boolean"}
        return f"Convert the '{p['column']}' column of '{t}' to {names[p['dtype']]}."
    if kind is OperatorKind.JOIN:
        key = (
            f"'{p['on']}'"
            if "on" in p
            else f"'{p['left_on']}' and '{p['right_on']}'"
        )
        sl, sr = p["suffixes"]
        return (
            f"Perform a {p['how']} join between '{p['left_table']}' and "
            f"'{p['right_table']}' on {key} with suffixes '{sl}' and '{sr}'."
        )
    if kind is OperatorKind.UNION:
        tail = ", dropping duplicate rows" if p["how"] == "distinct" else ""
        return f"Stack the rows of '{p['left_table']}' and '{p['right_table']}'{tail}."
    if kind is OperatorKind.GROUPBY:
        aggs = _quoted_list([f"{fn} of {col}" for col, fn in p["agg"].items()])
        return f"Group '{t}' by {_quoted_list(p['by'])} and compute the {aggs}."
    if kind is OperatorKind.PIVOT:
        return (
            f"Pivot '{t}' with '{p['index']}' as the index, '{p['columns']}' as the "
            f"columns and the {p['aggfunc']} of '{p['values']}' as the values."
        )
    if kind is OperatorKind.UNPIVOT:
        kept = f"keeping {_quoted_list(p['id_vars'])} fixed and " if p["id_vars"] else ""
        return (
            f"Reshape '{t}' from wide to long, {kept}stacking "
            f"{_quoted_list(p['value_vars'])} into '{p['var_name']}' and "
            f"'{p['value_name']}' columns."
        )
    if kind is OperatorKind.EXPLODE:
        how = "splitting its comma-separated values into" if p["split_comma"] else "expanding it into"
        return f"Explode the '{p['column']}' column of '{t}', {how} separate rows."
    if kind is OperatorKind.TRANSPOSE:
        return f"Transpose '{t}', turning its rows into columns."
    if kind is OperatorKind.WIDE_TO_LONG:
        return (
            f"Collapse the {_quoted_list(p['stubnames'])} column groups of '{t}' into "
            f"long format keyed by {_quoted_list(p['i'])}, extracting the suffix into "
            f"'{p['j']}'."
        )
    if kind is OperatorKind.SORT:
        directions = sorted(set(p["ascending"]))
        if directions == [True]:
            order = "ascending"
        elif directions == [False]:
            order = "descending"
        else:
            order = "mixed"
        return f"Sort the data in '{t}' by {_quoted_list(p['by'])} in {order} order."
    if kind is OperatorKind.TOPK:
        return f"Keep the first {p['k']} rows of '{t}'."
    if kind is OperatorKind.SELECT:
        return f"Select the columns {_quoted_list(p['columns'])} from '{t}'."
    if kind is OperatorKind.RENAME:
        pairs = _quoted_list([f"{old}' to '{new}" for old, new in p["rename_map"].items()])
        return f"Rename the column {pairs} in '{t}'."
    raise InstructionError(f"no template for {kind.value}")


def describe_program(program: PipelineProgram, table: str) -> str:
    sentences = []
    current = table
    for i, call in enumerate(program.ops):
        sentence = describe_call(call, current)
        if call.kind in (OperatorKind.JOIN, OperatorKind.UNION):
            suffix = "join" if call.kind is OperatorKind.JOIN else "union"
            current = f"{call.params['left_table']}_{call.params['right_table']}_{suffix}"
        elif call.table is not None:
            current = call.table
        sentences.append(sentence if i == 0 else f"Then, {sentence[0].lower()}{sentence[1:]}")
    return " ".join(sentences)


class OfflineTemplateClient:
    """Deterministic rule-based stand-in for a hosted text model."""

    identity = "offline-template"

    def complete(self, prompt: str, temperature: float) -> str:
        if prompt.startswith("You are a data preparation expert."):
            return self._describe(prompt)
        if prompt.startswith("Based on the following data preparation task description"):
            return self._refine(prompt)
        if prompt.startswith("Task Background:"):
            return self._verify(prompt)
        raise InstructionError("offline client cannot answer this prompt")

    def _describe(self, prompt: str) -> str:
        chain = _between(prompt, "are as follows:  \n", "\n\nInput Tables (First 10 Rows):")
        from .dsl import program_from_obj

        program = program_from_obj(json.loads(chain))
        m = re.search(r"^Table: (.+)$", prompt, flags=re.MULTILINE)
        table = m.group(1) if m else "table_1"
        return "Instruction: " + describe_program(program, table)

    def _refine(self, prompt: str) -> str:
        # the prompt carries exemplar blocks; only the final task counts
        tail = prompt[prompt.rindex("Task Description: ") :]
        draft = _between(tail, "Task Description: ", "\n\nPlease output only the intent")
        return re.sub(r"\s+", " ", draft).strip()

    def _verify(self, prompt: str) -> str:
        intent = _between(prompt, "3. **Generated Intent**: ", "\n\nTask Requirement:")
        return json.dumps({"is_valid": "true", "intent": intent}, ensure_ascii=False)


def _between(text: str, start: str, end: str) -> str:
    i = text.index(start) + len(start)
    j = text.index(end, i)
    return text[i:j]


# -- hosted client -------------------------------------------------------------

API_KEY_ENV = "PIPEBENCH_API_KEY"


class HttpChatClient:
    """Minimal chat-completions client; key comes from the environment."""

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.openai.com/v1",
        min_interval: float = 0.0,
        timeout: float = 60.0,
    ):
        key = os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY")
        if not key:
            raise InstructionError(
                f"no API key: set {API_KEY_ENV} (or OPENAI_API_KEY)"
            )
        self.identity = model
        self._key = key
        self._url = base_url.rstrip("/") + "/chat/completions"
        self._min_interval = min_interval
        self._timeout = timeout
        self._lock = threading.Lock()
        self._last_call = 0.0

    def complete(self, prompt: str, temperature: float) -> str:
        with self._lock:
            wait = self._min_interval - (time.monotonic() - self._last_call)
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()
        payload = json.dumps(
            {
                "model": self.identity,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature,
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self._url,
            data=payload,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._key}",
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=self._timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
            return body["choices"][0]["message"]["content"]
        except Exception as exc:
            raise InstructionError(f"model call failed: {exc}") from exc


# -- generation steps -----------------------------------------------------------


@dataclass
class JudgeVerdict:
    is_valid: bool
    intent: str


@dataclass
class InstructionRecord:
    draft: str
    final: str
    judge: JudgeVerdict

    def to_json_obj(self) -> dict:
        return {
            "draft": self.draft,
            "final": self.final,
            "judge": {"is_valid": self.judge.is_valid, "intent": self.judge.intent},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InstructionRecord":
        judge = obj.get("judge", {})
        return cls(
            obj["draft"],
            obj["final"],
            JudgeVerdict(bool(judge.get("is_valid")), judge.get("intent", "")),
        )


def describe(
    program: PipelineProgram,
    inputs: TableSet,
    output: Table,
    client: TextModelClient,
    temperature: float = DEFAULT_TEMPERATURE,
) -> str:
    """Step 1: structured pipeline description grounded in the tables."""
    prompt = render_generate_prompt(program, inputs, output)
    reply = client.complete(prompt, temperature)
    marker = "Instruction:"
    if marker not in reply:
        raise InstructionError(f"reply from {client.identity} lacks 'Instruction:' marker")
    return reply.split(marker, 1)[1].strip()


def refine(
    draft: str,
    program: PipelineProgram,
    client: TextModelClient,
    temperature: float = DEFAULT_TEMPERATURE,
) -> str:
    """Step 2: style-controlled rewrite of the draft into a user intent."""
    if not draft:
        raise InstructionError("cannot refine an empty draft")
    prompt = render_refine_prompt(draft, program)
    return client.complete(prompt, temperature).strip()


def judge(
    program: PipelineProgram,
    draft: str,
    intent: str,
    client: TextModelClient,
) -> JudgeVerdict:
    """Alignment check; a malformed reply is retried once, then fails."""
    prompt = render_verify_prompt(program, draft, intent)
    last_error = None
    for _ in range(2):
        reply = client.complete(prompt, JUDGE_TEMPERATURE)
        try:
            obj = json.loads(_extract_json(reply))
            is_valid = str(obj["is_valid"]).lower() == "true"
            return JudgeVerdict(is_valid, str(obj.get("intent", "")))
        except (json.JSONDecodeError, KeyError, TypeError, InstructionError) as exc:
            last_error = exc
    raise InstructionError(f"judge reply unparseable after retry: {last_error}")


def _extract_json(reply: str) -> str:
    reply = reply.strip()
    if reply.startswith("{"):
        return reply
    m = re.search(r"\{.*\}", reply, flags=re.DOTALL)
    if not m:
        raise InstructionError(f"no JSON object in reply: {reply[:80]!r}")
    return m.group(0)


def generate_instruction(
    program: PipelineProgram,
    inputs: TableSet,
    output: Table,
    client: TextModelClient,
    temperature: float = DEFAULT_TEMPERATURE,
    max_judge_rounds: int = MAX_JUDGE_ROUNDS,
) -> tuple[InstructionRecord, bool]:
    """describe -> refine -> judge; returns the record and whether it
    passed within the allowed judge rounds."""
    draft = describe(program, inputs, output, client, temperature)
    intent = refine(draft, program, client, temperature)
    verdict = JudgeVerdict(False, intent)
    for _ in range(max_judge_rounds):
        verdict = judge(program, draft, intent, client)
        if verdict.is_valid:
            return InstructionRecord(draft, intent, verdict), True
        if verdict.intent and verdict.intent != "[Rewritten Intent]":
            intent = verdict.intent  # judge supplied a rewrite; try it
    return InstructionRecord(draft, intent, verdict), False
