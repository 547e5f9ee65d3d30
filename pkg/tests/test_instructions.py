import json

import pytest

from pipebench.instructions import (
    InstructionError,
    JudgeVerdict,
    OfflineTemplateClient,
    describe,
    describe_program,
    generate_instruction,
    judge,
    load_prompt,
    refine,
    render_generate_prompt,
    render_refine_prompt,
    render_verify_prompt,
    table_preview,
)
from pipebench.interpreter import execute_program
from pipebench.tables import ColumnType, Table, TableSet

from conftest import program, M001_PROGRAM


@pytest.fixture
def m001_setting(m001_table, m001_program):
    output, _ = execute_program(TableSet.of(m001_table), m001_program)
    return TableSet.of(m001_table), output, m001_program


class TestPromptRendering:
    def test_generate_prompt_slots_filled(self, m001_setting):
        inputs, output, prog = m001_setting
        prompt = render_generate_prompt(prog, inputs, output)
        assert "{transform_chain_str}" not in prompt
        assert '"op": "filter"' in prompt
        assert "Instruction: [Your data preparation instruction]" in prompt

    def test_preview_caps_at_ten_rows(self):
        t = Table("t", [("n", ColumnType.INTEGER)], [(i,) for i in range(30)])
        preview = table_preview(t)
        assert len(preview.splitlines()) == 12  # title + header + 10 rows

    def test_refine_prompt_carries_exemplars(self, m001_setting):
        _, _, prog = m001_setting
        prompt = render_refine_prompt("draft text", prog)
        assert "Here are some examples:" in prompt
        assert prompt.count("User Intent:") == 3
        assert "Task Description: draft text" in prompt

    def test_verify_prompt_is_strict_json_shape(self, m001_setting):
        _, _, prog = m001_setting
        prompt = render_verify_prompt(prog, "the draft", "the intent")
        assert '"is_valid": "true"' in prompt
        assert '"intent": "the intent"' in prompt
        assert "{{" not in prompt  # brace escapes resolved

    def test_rendered_prompts_are_stable(self, m001_setting):
        inputs, output, prog = m001_setting
        a = render_generate_prompt(prog, inputs, output)
        b = render_generate_prompt(prog, inputs, output)
        assert a == b


class TestOfflineClient:
    def test_describe_names_all_ops_in_order(self, m001_setting):
        inputs, output, prog = m001_setting
        client = OfflineTemplateClient()
        draft = describe(prog, inputs, output, client)
        for phrase in ("Filter the rows", "remove duplicate rows", "group", "sort the data"):
            assert phrase in draft
        assert draft.index("Filter") < draft.index("duplicate") < draft.index("group")

    def test_refine_passthrough_normalizes_whitespace(self, m001_setting):
        _, _, prog = m001_setting
        client = OfflineTemplateClient()
        final = refine("messy   draft\n\ttext", prog, client)
        assert final == "messy draft text"

    def test_judge_accepts(self, m001_setting):
        _, _, prog = m001_setting
        verdict = judge(prog, "draft", "the intent", OfflineTemplateClient())
        assert verdict.is_valid and verdict.intent == "the intent"

    def test_end_to_end_deterministic(self, m001_setting):
        inputs, output, prog = m001_setting
        client = OfflineTemplateClient()
        first = generate_instruction(prog, inputs, output, client)
        second = generate_instruction(prog, inputs, output, client)
        assert first == second
        record, accepted = first
        assert accepted and record.judge.is_valid
        assert record.final

    def test_describe_program_uses_then_connectors(self, h001_program):
        text = describe_program(h001_program, "table_1")
        assert text.count("Then,") == len(h001_program) - 1
        assert "right join" in text
        assert "'_left' and '_right'" in text


class _ScriptedClient:
    identity = "scripted"

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def complete(self, prompt, temperature):
        self.calls.append((prompt, temperature))
        return self.replies.pop(0)


class TestJudgeProtocol:
    def test_invalid_reply_carries_rewrite(self, m001_setting):
        _, _, prog = m001_setting
        client = _ScriptedClient(
            [json.dumps({"is_valid": "false", "intent": "do it better"})]
        )
        verdict = judge(prog, "draft", "intent", client)
        assert not verdict.is_valid
        assert verdict.intent == "do it better"

    def test_malformed_reply_retried_then_error(self, m001_setting):
        _, _, prog = m001_setting
        client = _ScriptedClient(["not json", "still not json"])
        with pytest.raises(InstructionError, match="unparseable"):
            judge(prog, "draft", "intent", client)
        assert len(client.calls) == 2

    def test_judge_runs_cold(self, m001_setting):
        _, _, prog = m001_setting
        client = _ScriptedClient([json.dumps({"is_valid": "true", "intent": "x"})])
        judge(prog, "draft", "intent", client)
        assert client.calls[0][1] == 0.0

    def test_rewritten_intent_rejudged_then_dropped(self, m001_setting):
        inputs, output, prog = m001_setting
        draft_reply = "Instruction: do the steps"
        refine_reply = "tight intent"
        rewrite = json.dumps({"is_valid": "false", "intent": "rewritten intent"})
        still_bad = json.dumps({"is_valid": "false", "intent": "worse"})
        client = _ScriptedClient([draft_reply, refine_reply, rewrite, still_bad])
        record, accepted = generate_instruction(prog, inputs, output, client)
        assert not accepted
        assert len(client.calls) == 4  # describe, refine, judge x2

    def test_temperature_defaults(self, m001_setting):
        inputs, output, prog = m001_setting
        client = _ScriptedClient(
            [
                "Instruction: drafted",
                "refined",
                json.dumps({"is_valid": "true", "intent": "refined"}),
            ]
        )
        generate_instruction(prog, inputs, output, client)
        assert client.calls[0][1] == 0.7  # describe
        assert client.calls[1][1] == 0.7  # refine

    def test_missing_marker_is_error(self, m001_setting):
        inputs, output, prog = m001_setting
        client = _ScriptedClient(["no marker here"])
        with pytest.raises(InstructionError, match="marker"):
            describe(prog, inputs, output, client)


GOLDEN_VERIFY = """Task Background: The user has generated an initial natural language description from a transformation chain, and then used an LLM to generate a user intent statement based on that initial description.
1. **Transformation Chain**: CHAIN
2. **Initial Natural Language Description**: DRAFT
3. **Generated Intent**: INTENT

Task Requirement: Assume you are a data preparation expert. Based on the current intent, can you infer the correct conversion chain, including the details of the parameters?

Output Requirements:
- If the intent allows you to infer a complete and reasonable transformation chain, output:
{
"is_valid": "true",
"intent": "INTENT"
}
- Otherwise, output:
{
"is_valid": "false",
"intent": "[Rewritten Intent]"
}

Please return the result in strict JSON format with no additional explanations.
"""


def test_verify_prompt_golden_bytes():
    rendered = load_prompt("verify").format(
        transform_chain_str="CHAIN", instruction="DRAFT", intent_text="INTENT"
    )
    assert rendered == GOLDEN_VERIFY


class TestPromptByteStability:
    # renderers must be pure slot substitution: result equals the asset
    # with slots replaced by hand (and brace escapes resolved)

    def test_generate_prompt_bytes(self, m001_setting):
        from pipebench.instructions import chain_text, table_preview, tables_preview

        inputs, output, prog = m001_setting
        rendered = render_generate_prompt(prog, inputs, output)
        expected = (
            load_prompt("generate")
            .replace("{transform_chain_str}", chain_text(prog))
            .replace("{input_table_str}", tables_preview(inputs))
            .replace("{target_table_str}", table_preview(output))
        )
        assert rendered == expected

    def test_refine_prompt_bytes(self, m001_setting):
        from pipebench.instructions import chain_text

        _, _, prog = m001_setting
        rendered = render_refine_prompt("THE DRAFT", prog)
        expected = (
            load_prompt("refine")
            .replace("{transform_chain}", chain_text(prog))
            .replace("{task_instruction}", "THE DRAFT")
        )
        assert rendered == expected

    def test_verify_prompt_brace_unescaping(self, m001_setting):
        from pipebench.instructions import chain_text

        _, _, prog = m001_setting
        rendered = render_verify_prompt(prog, "D", "I")
        expected = (
            load_prompt("verify")
            .replace("{{", "\x00")
            .replace("}}", "\x01")
            .replace("{transform_chain_str}", chain_text(prog))
            .replace("{instruction}", "D")
            .replace("{intent_text}", "I")
            .replace("\x00", "{")
            .replace("\x01", "}")
        )
        assert rendered == expected
