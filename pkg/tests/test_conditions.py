import random
import string

import pytest

from pipebench.conditions import (
    BoolOp,
    Comparison,
    ConditionError,
    parse_condition,
    render_condition,
)


class TestParsing:
    def test_simple_comparison(self):
        assert parse_condition("Year != 2013") == Comparison("Year", "!=", 2013)

    def test_backtick_column(self):
        assert parse_condition("`Amount Paid` > 1000") == Comparison(
            "Amount Paid", ">", 1000
        )

    def test_nested(self):
        cond = parse_condition("a > 1 and (b == 'x' or c <= 0)")
        assert cond == BoolOp(
            "and",
            Comparison("a", ">", 1),
            BoolOp("or", Comparison("b", "==", "x"), Comparison("c", "<=", 0)),
        )

    def test_left_associative_flat_chain(self):
        cond = parse_condition("a == 1 or b == 2 and c == 3")
        assert isinstance(cond, BoolOp) and cond.op == "and"
        assert isinstance(cond.left, BoolOp) and cond.left.op == "or"

    def test_float_and_negative_literals(self):
        assert parse_condition("x >= -1.5") == Comparison("x", ">=", -1.5)

    def test_boolean_literal(self):
        assert parse_condition("flag == true") == Comparison("flag", "==", True)

    def test_double_quoted_string(self):
        assert parse_condition('s == "Not Free"') == Comparison("s", "==", "Not Free")

    def test_escaped_quote(self):
        assert parse_condition(r"s == 'O\'Brien'") == Comparison("s", "==", "O'Brien")

    @pytest.mark.parametrize(
        "text",
        ["", "   ", "a ==", "== 5", "a = 5", "a >< 5", "(a == 1", "a == 1)", "a 5"],
    )
    def test_rejects_with_error(self, text):
        with pytest.raises(ConditionError):
            parse_condition(text)

    def test_error_carries_position(self):
        with pytest.raises(ConditionError) as err:
            parse_condition("a == 1 $$")
        assert err.value.position == 7


class TestRendering:
    @pytest.mark.parametrize(
        "text",
        [
            "Year != 2013",
            "`Amount Paid` > 1000",
            "a > 1 and (b == 'x' or c <= 0)",
            "a == 1 or b == 2 and c == 3",
            "flag == false",
            "x >= -1.5",
        ],
    )
    def test_parse_render_round_trip(self, text):
        ast = parse_condition(text)
        assert parse_condition(render_condition(ast)) == ast

    def test_random_ast_round_trip(self):
        rng = random.Random(23)

        def random_cond(depth=0):
            if depth > 2 or rng.random() < 0.5:
                column = rng.choice(["a", "b c", "Year", "_x9"])
                op = rng.choice(["==", "!=", ">", ">=", "<", "<="])
                literal = rng.choice([1, -3, 2.5, "txt", True, "O'Brien", False])
                return Comparison(column, op, literal)
            return BoolOp(
                rng.choice(["and", "or"]), random_cond(depth + 1), random_cond(depth + 1)
            )

        for _ in range(300):
            ast = random_cond()
            assert parse_condition(render_condition(ast)) == ast


def test_fuzz_never_crashes():
    rng = random.Random(99)
    alphabet = string.printable
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 30)))
        try:
            parse_condition(text)
        except ConditionError:
            pass  # rejection is the only acceptable failure mode
