"""Kernel semantics: golden outputs, determinism, composition laws."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statevc import kernel
from statevc.kernel import (
    CellSyntaxError,
    exec_history,
    exec_one,
    parse,
    pretty_print,
    repr_value,
    values_equal,
)

from traces import VAR_NAMES, random_source


def test_simple_assignment():
    env, output, error = exec_one({}, "x = 1 + 2")
    assert env == {"x": 3}
    assert output == ""
    assert not error


def test_empty_program():
    assert parse("") == kernel.Program(())
    env, output, error = exec_one({}, "")
    assert (env, output, error) == ({}, "", False)


def test_parse_error_position():
    # golden: column of the second '='
    with pytest.raises(CellSyntaxError) as exc:
        parse("x = = 2")
    assert exc.value.line == 1
    assert exc.value.column == 5


def test_parse_error_becomes_cell_output():
    env, output, error = exec_one({"x": 3}, "x = = 2")
    assert error
    assert output.startswith("SyntaxError:")
    assert env == {"x": 3}


def test_print_then_bare_expr():
    env, output, error = exec_one({"x": 3}, "print(x)\nx + 1")
    assert env == {"x": 3}
    assert output == "3\n4"
    assert not error


def test_name_error_flagged():
    env, output, error = exec_one({}, "y = x")
    assert env == {}
    assert "NameError: x" in output
    assert error


def test_partial_mutation_survives_error():
    env, output, error = exec_one({}, "a = 1\nprint(a)\nb = nope\nc = 2")
    assert env == {"a": 1}
    assert error
    assert output == "1\nNameError: nope"


def test_exec_history_examples():
    assert exec_history([]) == ({}, [])
    env, outputs = exec_history(["a = 2", "b = a * a", "print(b)"])
    assert env == {"a": 2, "b": 4}
    assert outputs == ["", "", "4"]
    env, outputs = exec_history(["x = 1", "x = x + 1"])
    assert env == {"x": 2}
    assert outputs == ["", ""]


def test_del_semantics():
    env, _, error = exec_one({"x": 1}, "del x")
    assert env == {} and not error
    env, output, error = exec_one({}, "del x")
    assert error and "NameError: x" in output


def test_division():
    _, output, error = exec_one({}, "1 / 0")
    assert error and "ZeroDivisionError" in output
    _, output, error = exec_one({}, "1.5 / 0.0")
    assert error and "ZeroDivisionError" in output
    env, _, _ = exec_one({}, "x = 7 / 2")
    assert env == {"x": 3.5}


def test_int_overflow_checked():
    _, output, error = exec_one({}, f"x = {2**63 - 1} + 1")
    assert error and "OverflowError" in output


def test_modulo_and_comparisons():
    env, outputs = exec_history(["r = 7 % 3", "ok = r == 1", "print(ok)"])
    assert env == {"r": 1, "ok": True}
    assert outputs[2] == "True"


def test_bool_ops_short_circuit():
    # the right operand would raise; short circuit avoids it
    env, _, error = exec_one({}, "x = False and nope")
    assert env == {"x": False} and not error
    env, _, error = exec_one({}, "x = True or nope")
    assert env == {"x": True} and not error


def test_strings_and_lists():
    env, outputs = exec_history(
        ["s = 'ab' + 'cd'", "l = [1, 2] + [3]", "print(s[1])", "l[-1]"]
    )
    assert env["s"] == "abcd"
    assert env["l"] == [1, 2, 3]
    assert outputs[2] == "b"
    assert outputs[3] == "3"


def test_index_errors():
    _, output, error = exec_one({}, "[1, 2][5]")
    assert error and "IndexError" in output


def test_builtins():
    env, outputs = exec_history(
        [
            "l = range(1, 6)",
            "print(len(l))",
            "print(sum(l))",
            "print(min(l))\nprint(max(3, 9))",
            "print(abs(-4))",
            "print(str(2.5))",
            "print(concat('a', 'b', 'c'))",
        ]
    )
    assert env["l"] == [1, 2, 3, 4, 5]
    assert [o for o in outputs[1:]] == ["5", "15", "1\n9", "4", "2.5", "abc"]


def test_range_guard():
    _, output, error = exec_one({}, "range(99999999)")
    assert error and "OverflowError" in output


def test_float_repr_shortest_round_trip():
    _, output, _ = exec_one({}, "0.1 + 0.2")
    assert output == "0.30000000000000004"


def test_semicolon_separator():
    env, _, _ = exec_one({}, "a = 1; b = a + 1; print(b)")
    assert env == {"a": 1, "b": 2}


def test_values_equal_type_strict():
    assert values_equal(1, 1)
    assert not values_equal(1, 1.0)
    assert not values_equal(True, 1)
    assert values_equal([1, [2.5, "x"]], [1, [2.5, "x"]])
    assert not values_equal([1], [1, 2])


def test_repr_injective_samples():
    samples = [1, 1.0, True, "1", [1], None, "a'b", [1, [2, "x"]]]
    reprs = [repr_value(v) for v in samples]
    assert len(set(reprs)) == len(reprs)


@st.composite
def cell_sources(draw):
    rng = random.Random(draw(st.integers(0, 2**32)))
    known = draw(st.lists(st.sampled_from(VAR_NAMES), max_size=4))
    return random_source(rng, known)


@given(st.lists(cell_sources(), max_size=8))
@settings(max_examples=60, deadline=None)
def test_determinism(history):
    assert exec_history(history) == exec_history(history)


@given(st.lists(cell_sources(), max_size=8), cell_sources())
@settings(max_examples=60, deadline=None)
def test_composition(history, last):
    env, outputs = exec_history(history + [last])
    prev_env, prev_outputs = exec_history(history)
    one_env, one_output, _ = exec_one(prev_env, last)
    assert env == one_env
    assert outputs == prev_outputs + [one_output]


@given(st.lists(cell_sources(), max_size=8), st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_prefix_stability(history, n):
    n = min(n, len(history))
    _, outputs = exec_history(history)
    _, prefix_outputs = exec_history(history[:n])
    assert outputs[:n] == prefix_outputs


@given(st.lists(cell_sources(), min_size=1, max_size=6))
@settings(max_examples=80, deadline=None)
def test_parse_pretty_print_round_trip(history):
    for source in history:
        try:
            program = parse(source)
        except CellSyntaxError:
            continue
        assert parse(pretty_print(program)) == program
