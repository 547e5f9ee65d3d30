"""Iterative propose-execute-observe loop over the operator toolset.

A policy (scripted or model-backed) emits one structured action per
step; the validator executes it on the live tables and feeds back a
compact observation: the new schemas, a few sample rows, or the error
text when the step failed.  Failed steps never mutate state, so the
accumulated program always replays cleanly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .dsl import OperatorCall, ProgramError, PipelineProgram, parse_call, serialize_call
from .instructions import (
    InstructionError,
    OfflineTemplateClient,
    TextModelClient,
    load_prompt,
    tables_preview,
)
from .interpreter import ExecContext, ExecutionError, execute_op
from .tables import Table, TableSet, format_cell

DEFAULT_STEP_BUDGET = 12
SAMPLE_ROWS = 5
SCHEMA_SNAPSHOTS_IN_PROMPT = 3


class PolicyError(Exception):
    """The policy produced no usable action."""


@dataclass(frozen=True)
class Observation:
    """Compact state summary fed back to the policy; never the full table."""

    schemas: dict[str, list[tuple[str, str]]]
    samples: dict[str, list[list]]
    error: Optional[str] = None

    @classmethod
    def of(cls, ctx: ExecContext, error: Optional[str] = None) -> "Observation":
        schemas = {
            name: [(c, t.value) for c, t in table.schema()]
            for name, table in ctx.tables.items()
        }
        samples = {
            name: [list(row) for row in table.rows[:SAMPLE_ROWS]]
            for name, table in ctx.tables.items()
        }
        return cls(schemas, samples, error)

    def to_json_obj(self) -> dict:
        return {"schemas": self.schemas, "samples": self.samples, "error": self.error}

    def render(self) -> str:
        lines = []
        for name, schema in self.schemas.items():
            cols = ", ".join(f"{c} ({t})" for c, t in schema)
            lines.append(f"Table {name}: {cols}")
            for row in self.samples.get(name, []):
                lines.append("  " + ", ".join(format_cell(v) for v in row))
        if self.error:
            lines.append(f"Previous action failed: {self.error}")
        return "\n".join(lines)


@dataclass(frozen=True)
class AgentAction:
    call: Optional[OperatorCall] = None  # None means finish

    @property
    def is_finish(self) -> bool:
        return self.call is None

    @classmethod
    def finish(cls) -> "AgentAction":
        return cls(None)

    def to_json_obj(self) -> dict:
        if self.is_finish:
            return {"action": "finish"}
        return serialize_call(self.call)


class Policy(Protocol):
    def next(
        self,
        instruction: str,
        history: Sequence[tuple[AgentAction, Observation]],
        initial: Observation,
    ) -> AgentAction: ...


@dataclass
class EpisodeResult:
    ops: list[OperatorCall]
    final_table: Table
    history: list[tuple[AgentAction, Observation]]
    finished: bool
    exhausted: bool
    error: Optional[str] = None

    @property
    def program(self) -> Optional[PipelineProgram]:
        if not self.ops:
            return None
        return PipelineProgram(tuple(self.ops))

    def transcript_jsonl(self) -> str:
        lines = []
        for action, obs in self.history:
            lines.append(
                json.dumps(
                    {"action": action.to_json_obj(), "observation": obs.to_json_obj()},
                    ensure_ascii=False,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")


def run_episode(
    inputs: TableSet,
    instruction: str,
    policy: Policy,
    budget: int = DEFAULT_STEP_BUDGET,
) -> EpisodeResult:
    """Drive the policy until it finishes or the step budget runs out."""
    ctx = ExecContext.from_tables(inputs)
    initial = Observation.of(ctx)
    history: list[tuple[AgentAction, Observation]] = []
    ops: list[OperatorCall] = []
    finished = False
    last_error = None

    for _ in range(budget):
        action = policy.next(instruction, history, initial)
        if action.is_finish:
            finished = True
            break
        try:
            ctx = execute_op(ctx, action.call, op_index=len(ops))
            ops.append(action.call)
            observation = Observation.of(ctx)
            last_error = None
        except ExecutionError as exc:
            observation = Observation.of(ctx, error=str(exc))
            last_error = str(exc)
        history.append((action, observation))

    return EpisodeResult(
        ops=ops,
        final_table=ctx.current_table(),
        history=history,
        finished=finished,
        exhausted=not finished,
        error=last_error,
    )


# -- policies -----------------------------------------------------------------


class ScriptedPolicy:
    """Replays a fixed action list, then finishes."""

    def __init__(self, actions: Sequence[AgentAction | OperatorCall]):
        self._actions = [
            a if isinstance(a, AgentAction) else AgentAction(a) for a in actions
        ]

    def next(self, instruction, history, initial) -> AgentAction:
        i = len(history)
        if i < len(self._actions):
            return self._actions[i]
        return AgentAction.finish()

    @classmethod
    def replay(cls, program: PipelineProgram) -> "ScriptedPolicy":
        return cls([AgentAction(op) for op in program.ops])


_NEXT_ACTION_SUFFIX = """

Interaction protocol for this session:
- Emit exactly ONE next action as a JSON object {"name": ..., "parameters": {...}}.
- When the user intent is fully satisfied, emit {"name": "finish"} instead.

Latest table state:
{OBSERVATION}
"""


class LlmPolicy:
    """Model-backed policy: tool schema + instruction + latest observation
    in, one structured JSON action out; one malformed reply is repaired
    by re-prompting."""

    def __init__(self, client: TextModelClient, temperature: float = 0.0):
        if isinstance(client, OfflineTemplateClient):
            raise PolicyError(
                "the offline template client cannot drive the agent; "
                "configure a hosted text model"
            )
        self.client = client
        self.temperature = temperature

    def render_prompt(
        self,
        instruction: str,
        inputs_preview: str,
        history: Sequence[tuple[AgentAction, Observation]],
    ) -> str:
        base = load_prompt("pipeline_tools")
        base = base.replace("{USER_INTENT}", instruction)
        base = base.replace("{SOURCETABLE}", inputs_preview)
        observations = [obs for _, obs in history[-SCHEMA_SNAPSHOTS_IN_PROMPT:]]
        rendered = "\n---\n".join(o.render() for o in observations) or inputs_preview
        return base + _NEXT_ACTION_SUFFIX.replace("{OBSERVATION}", rendered)

    def next(self, instruction, history, initial) -> AgentAction:
        prompt = self.render_prompt(instruction, initial.render(), history)
        reply = self.client.complete(prompt, self.temperature)
        try:
            return self._parse(reply)
        except (PolicyError, ProgramError) as first_error:
            repair = (
                prompt
                + f"\n\nYour previous reply could not be parsed ({first_error}). "
                "Reply with a single valid JSON action object only."
            )
            reply = self.client.complete(repair, self.temperature)
            try:
                return self._parse(reply)
            except (PolicyError, ProgramError) as exc:
                raise PolicyError(f"unparseable action after repair: {exc}") from exc

    @staticmethod
    def _parse(reply: str) -> AgentAction:
        obj = _first_json_value(reply)
        if isinstance(obj, list):
            if not obj:
                raise PolicyError("empty action list")
            obj = obj[0]
        if not isinstance(obj, dict):
            raise PolicyError(f"expected a JSON object, got {type(obj).__name__}")
        name = obj.get("name", obj.get("op"))
        if name == "finish":
            return AgentAction.finish()
        return AgentAction(parse_call(obj, lenient=True))


def _first_json_value(reply: str):
    fenced = re.search(r"```(?:json)?\s*(.*?)```", reply, flags=re.DOTALL)
    if fenced:
        reply = fenced.group(1)
    for start, end in (("{", "}"), ("[", "]")):
        i = reply.find(start)
        while i != -1:
            depth = 0
            for j in range(i, len(reply)):
                if reply[j] == start:
                    depth += 1
                elif reply[j] == end:
                    depth -= 1
                    if depth == 0:
                        try:
                            return json.loads(reply[i : j + 1])
                        except json.JSONDecodeError:
                            break
            i = reply.find(start, i + 1)
    raise PolicyError(f"no JSON value in reply: {reply[:80]!r}")


def llm_policy(client: TextModelClient, temperature: float = 0.0) -> LlmPolicy:
    return LlmPolicy(client, temperature)
