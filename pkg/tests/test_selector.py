import pytest

from src.config import SelectorConfig
from src.evaluation import AnswerValue, IdMismatchError, MissingGoldError, fuzzy_match
from src.generation import ScriptedClient
from src.selector import (
    AGREEMENT,
    CODE,
    E2E,
    CandidatePair,
    FixedPreferenceScorer,
    HeuristicScorer,
    PromptedScorer,
    SelectorScorer,
    build_selector_dataset,
    create_scorer,
    render_selection_markdown,
    select_answer,
    select_batch,
    selection_error_report,
)

from tests.conftest import Q_SILVER, Q_TEN_GOLD


def A(*texts):
    return AnswerValue.from_texts(texts)


# id: (code answer, e2e answer, gold)
PAIRS = {
    "p01": (A("922"), A("922.0"), A("922")),
    "p02": (A("Germany"), A("Norway"), A("Germany")),
    "p03": (A("5"), A("7"), A("7")),
    "p04": (A("1"), A("2"), A("3")),
    "p05": (A(), A("Canada"), A("Canada")),
    "p06": (A("10"), A("11"), A("12")),
    "p07": (A("a", "b"), A("b", "a"), A("a", "b")),
    "p08": (A("1982–1985"), A("1977–1978", "1988–1989"), A("1982–1985")),
    "p09": (A("x"), A("y"), A("z")),
    "p10": (A("March 5, 2004"), A("2004-03-05"), A("2004-03-05")),
}


def make_pairs(cases=PAIRS):
    return [
        CandidatePair(i, f"question {i}", "medals.table", code, e2e)
        for i, (code, e2e, _) in cases.items()
    ]


def make_golds(cases=PAIRS):
    return {i: gold for i, (_, _, gold) in cases.items()}


class GoldOracleScorer(SelectorScorer):
    """Prefers whichever candidate matches the gold."""

    name = "oracle"

    def __init__(self, golds):
        self.golds = golds

    def score(self, question, code_answer, e2e_answer, table=None, e2e_trace=None):
        gold = self.golds[question.split()[-1]]
        return float(fuzzy_match(code_answer, gold)), float(fuzzy_match(e2e_answer, gold))


# ============================================================================
# Selector dataset
# ============================================================================

def test_build_selector_dataset():
    dataset = build_selector_dataset(make_pairs(), make_golds())
    assert dataset.dropped == 3
    labels = {e.id: e.label for e in dataset.examples}
    assert labels == {
        "p01": "both", "p02": "code", "p03": "e2e", "p05": "e2e",
        "p07": "both", "p08": "code", "p10": "both",
    }
    assert dataset.examples[3].code_answer == []


def test_selector_dataset_needs_golds():
    with pytest.raises(MissingGoldError):
        build_selector_dataset(make_pairs(), {})


# ============================================================================
# Selection
# ============================================================================

def test_agreement_skips_the_scorer():
    scorer = FixedPreferenceScorer("e2e")
    results = [select_answer(scorer, pair) for pair in make_pairs()]
    assert scorer.calls == 7
    sources = {r.id: r.source for r in results}
    assert [i for i, s in sources.items() if s == AGREEMENT] == ["p01", "p07", "p10"]
    assert all(not r.scorer_invoked for r in results if r.source == AGREEMENT)
    assert results[0].chosen == A("922")


@pytest.mark.parametrize("preference, source", [("code", CODE), ("e2e", E2E), ("tie", CODE)])
def test_fixed_preferences(preference, source):
    result = select_answer(FixedPreferenceScorer(preference), make_pairs()[1])
    assert result.source == source
    assert result.scorer_invoked


def test_unknown_preference():
    with pytest.raises(ValueError):
        FixedPreferenceScorer("both")


def test_heuristic_prefers_grounded_answers(medals):
    scorer = HeuristicScorer()
    silver = CandidatePair("s", Q_SILVER, "medals.table", A("Germany"), A("Atlantis"))
    assert select_answer(scorer, silver, medals).source == CODE
    empty = CandidatePair("e", Q_SILVER, "medals.table", A(), A("Canada"))
    assert select_answer(scorer, empty, medals).source == E2E
    counting = CandidatePair("c", Q_TEN_GOLD, "medals.table", A("2"), A("Norway"))
    code_score, e2e_score = scorer.score(counting.question, counting.code_answer, counting.e2e_answer, medals)
    assert code_score == pytest.approx(1.5)
    assert e2e_score == pytest.approx(1.0)


def test_heuristic_without_table():
    code_score, e2e_score = HeuristicScorer().score("Which nation?", A("Germany"), A())
    assert (code_score, e2e_score) == (0.0, -1.0)


@pytest.mark.parametrize("reply, source", [
    ("A", CODE),
    ("B", E2E),
    ("b.", E2E),
    ("Answer: B", E2E),
    ("(B) counts the medals", E2E),
    ("maybe", CODE),
    ("Both A and B look plausible; B", CODE),
    ("A or B", CODE),
])
def test_prompted_scorer(medals, reply, source):
    client = ScriptedClient.from_replies([reply])
    pair = CandidatePair("s", Q_SILVER, "medals.table", A("Germany"), A("Norway"), "counted medals")
    result = select_answer(PromptedScorer(client), pair, medals)
    assert result.source == source
    prompt = client.prompts[0]
    assert "Candidate A: ['Germany']" in prompt
    assert "Candidate B: ['Norway']" in prompt
    assert "Table:\nRank|Nation" in prompt
    assert "counted medals" not in prompt


def test_prompted_scorer_includes_traces():
    client = ScriptedClient.from_replies(["B"])
    scorer = PromptedScorer(client, include_traces=True)
    scorer.score("q", A("1"), A("2"), None, "counted twice")
    assert "Reasoning behind candidate B:\ncounted twice" in client.prompts[0]


def test_scorer_failure_keeps_the_code_answer():
    pair = make_pairs()[1]
    result = select_answer(PromptedScorer(ScriptedClient.from_replies([])), pair)
    assert (result.source, result.scorer_invoked, result.chosen) == (CODE, True, A("Germany"))


def test_select_batch_keeps_order(table_store):
    pairs = make_pairs()
    pairs.append(CandidatePair("p11", "q", "missing.table", A("1"), A("2")))
    results = select_batch(HeuristicScorer(), pairs, table_store, max_workers=3)
    assert [r.id for r in results] == [p.id for p in pairs]
    assert results[-1].source in (CODE, E2E)


def test_create_scorer():
    assert isinstance(create_scorer(SelectorConfig()), HeuristicScorer)
    assert create_scorer(SelectorConfig(backend="e2e")).preference == "e2e"
    assert isinstance(create_scorer(SelectorConfig(backend="prompted"), ScriptedClient.from_replies([])), PromptedScorer)
    with pytest.raises(ValueError):
        create_scorer(SelectorConfig(backend="prompted"))


# ============================================================================
# Override report
# ============================================================================

def report_for(scorer, cases=PAIRS):
    pairs = make_pairs(cases)
    selections = [select_answer(scorer, pair) for pair in pairs]
    return selection_error_report(selections, pairs, make_golds(cases))


def test_always_e2e_overrides_correct_code():
    stats = report_for(FixedPreferenceScorer("e2e"))
    assert stats.count == 10
    assert stats.override_code_correct_pct == pytest.approx(20.0)
    assert stats.override_e2e_correct_pct == 0.0
    assert stats.final_fm == pytest.approx(0.5)
    assert stats.sources == {CODE: 0, E2E: 7, AGREEMENT: 3}


def test_always_code_overrides_correct_e2e():
    stats = report_for(FixedPreferenceScorer("code"))
    assert stats.override_code_correct_pct == 0.0
    assert stats.override_e2e_correct_pct == pytest.approx(20.0)
    assert stats.final_fm == pytest.approx(0.5)


def test_gold_oracle_never_overrides():
    stats = report_for(GoldOracleScorer(make_golds()))
    assert (stats.override_code_correct_pct, stats.override_e2e_correct_pct) == (0.0, 0.0)
    assert stats.final_fm == pytest.approx(0.7)


def test_one_override_in_fifty():
    cases = {f"a{i:02d}": (A(str(i)), A(str(i)), A(str(i))) for i in range(49)}
    cases["z"] = PAIRS["p02"]
    stats = report_for(FixedPreferenceScorer("e2e"), cases)
    assert stats.override_code_correct_pct == pytest.approx(2.0)


def test_report_needs_matching_ids():
    pairs = make_pairs()
    selections = [select_answer(FixedPreferenceScorer(), pair) for pair in pairs[:-1]]
    with pytest.raises(IdMismatchError):
        selection_error_report(selections, pairs, make_golds())


def test_selection_report_rendering():
    report = report_for(FixedPreferenceScorer("e2e")).to_dict()
    assert report["kind"] == "selection"
    assert report["reference"] == {"override_code_correct_pct": 2.03, "override_e2e_correct_pct": 1.20}
    markdown = render_selection_markdown(report)
    assert "| code correct, e2e chosen | 20.00% | 2.03% |" in markdown
    assert "| e2e correct, code chosen | 0.00% | 1.20% |" in markdown
    assert "Final FM: 50.00%" in markdown
