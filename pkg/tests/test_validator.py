import pytest

from src.step_program import UnknownColumn, parse_program, validate_against_schema

from tests.conftest import program_text


def check(text, table):
    return validate_against_schema(parse_program(text), table)


@pytest.mark.parametrize(
    "name, table",
    [
        ("gamestorm_mean", "gamestorm"),
        ("sponsor_missing", "sponsors"),
        ("medal_share", "medals"),
        ("most_silver", "medals"),
    ],
)
def test_fixture_programs_are_valid(name, table, request):
    assert check(program_text(name), request.getfixturevalue(table)) == []


def test_unknown_column_reported_with_step(medals):
    text = "# PLAN: p\n# FILTER: f\nfilter Colour eq \"red\"\n# ANSWER:\nanswer Nation\n"
    diagnostics = check(text, medals)
    assert diagnostics == [UnknownColumn(1, "Colour")]
    assert "unknown column 'Colour'" in diagnostics[0].message


def test_every_missing_reference_is_reported(medals):
    text = (
        "# PLAN: p\n"
        "# COMPUTE: c\ncompute x Gald + Silvr\n"
        "# ANSWER:\nanswer Natoin\n"
    )
    assert check(text, medals) == [
        UnknownColumn(1, "Gald"), UnknownColumn(1, "Silvr"), UnknownColumn(2, "Natoin"),
    ]


def test_select_narrows_the_schema(medals):
    text = "# PLAN: p\n# SELECT: s\nselect Nation\n# ANSWER:\nanswer Gold\n"
    assert check(text, medals) == [UnknownColumn(2, "Gold")]


def test_compute_adds_a_column(medals):
    text = "# PLAN: p\n# COMPUTE: c\ncompute x Gold + 1\n# SORT: s\nsort x desc\n# ANSWER:\nanswer x\n"
    assert check(text, medals) == []


def test_group_replaces_the_schema(medals):
    text = (
        "# PLAN: p\n# GROUP: g\ngroup Nation sum Gold\n"
        "# SORT: s\nsort sum_Gold\n# ANSWER:\nanswer Silver\n"
    )
    assert check(text, medals) == [UnknownColumn(3, "Silver")]


def test_literal_and_scalar_answers_reference_nothing(medals):
    assert check(program_text("ten_gold_literal"), medals) == []
