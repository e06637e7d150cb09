import pytest
from hypothesis import given, settings

from ssgvi.generation import GenParams, fig1, generate_random
from ssgvi.io import ModelFormatError, ModelValidationError, parse_model, serialize_model
from strategies import small_games


def test_fig1_round_trip():
    m = fig1()
    assert parse_model(serialize_model(m)) == m


def test_serialize_deterministic():
    a = serialize_model(generate_random(GenParams(n=5, seed=42)))
    b = serialize_model(generate_random(GenParams(n=5, seed=42)))
    assert a == b


def test_bad_sum_names_action():
    text = "ssg 1\nstates 2\ninitial 0\ngoal 1\nminimizer\naction 0 bad\n  -> 1 0.9\n"
    with pytest.raises(ModelValidationError, match="bad"):
        parse_model(text)


@pytest.mark.parametrize(
    "text, line",
    [
        ("nope\n", 1),
        ("ssg 1\nstates x\n", 2),
        ("ssg 1\nstates 2\ninitial 0\n  -> 1 1\n", 4),
        ("ssg 1\nstates 2\ninitial 0\nfoo 1\n", 4),
        ("ssg 1\nstates 2\ninitial 0\naction 0 a\n  -> 1 p\n", 5),
    ],
)
def test_format_errors_carry_line(text, line):
    with pytest.raises(ModelFormatError) as exc:
        parse_model(text)
    assert exc.value.line == line


def test_comments_and_blank_lines():
    text = "# header\nssg 1\n\nstates 2  # two\ninitial 0\ngoal 1\nminimizer 0\naction 0 a\n  -> 1 1\n"
    m = parse_model(text)
    assert m.n == 2 and m.goals == {1}


@settings(max_examples=100, deadline=None)
@given(small_games())
def test_round_trip_property(model):
    assert parse_model(serialize_model(model)) == model
