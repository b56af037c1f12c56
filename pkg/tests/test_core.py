from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from capeval import (
    CJK_CHAR,
    STANDARD_METRICS,
    WHITESPACE,
    MetricKind,
    ScoreTable,
    Sentence,
    TokenizerPolicy,
    aggregate,
    tokenize,
)
from capeval.errors import ConfigError, EmptySentenceError, MissingMetricError

M = MetricKind


def test_whitespace_split():
    assert tokenize("a red stop sign", "source", WHITESPACE).tokens == ("a", "red", "stop", "sign")


def test_cjk_char_split():
    assert tokenize("两个女人", "target", CJK_CHAR).tokens == ("两", "个", "女", "人")


def test_whitespace_respects_presegmented():
    assert tokenize("两个 女人 站在", "target", WHITESPACE).tokens == ("两个", "女人", "站在")


def test_auto_splits_raw_cjk_but_keeps_latin():
    assert tokenize("两个女人 walking", "target").tokens == ("两", "个", "女", "人", "walking")


def test_lowercase_and_punctuation_defaults():
    assert tokenize("A Red SIGN.", "source").tokens == ("a", "red", "sign")
    keep = TokenizerPolicy(mode="whitespace", lowercase=False, strip_punctuation=False)
    assert tokenize("A SIGN.", "source", keep).tokens == ("A", "SIGN.")


def test_mixed_latin_cjk_piece():
    assert tokenize("abc两def", "target", CJK_CHAR).tokens == ("abc", "两", "def")


def test_empty_after_tokenization():
    with pytest.raises(EmptySentenceError):
        tokenize("...", "source")
    with pytest.raises(EmptySentenceError):
        tokenize("   ", "source")


def test_policy_rejects_unknown_mode():
    with pytest.raises(ConfigError):
        TokenizerPolicy(mode="bpe")


def test_policy_accepted_as_string():
    assert tokenize("Один два", "source", "whitespace").tokens == ("один", "два")


def test_sentence_rejects_whitespace_tokens():
    with pytest.raises(ValueError):
        Sentence(("a b",), "source")
    with pytest.raises(EmptySentenceError):
        Sentence((), "source")


@given(st.text(max_size=40))
def test_tokenize_deterministic(raw):
    try:
        first = tokenize(raw, "target")
    except EmptySentenceError:
        return
    assert tokenize(raw, "target").tokens == first.tokens
    assert all(tok and not any(c.isspace() for c in tok) for tok in first.tokens)


def test_metric_kind_aliases():
    assert MetricKind.parse("BLEU-4") is M.BLEU4
    assert MetricKind.parse("rouge-l") is M.ROUGE_L
    assert MetricKind.parse("CIDEr") is M.CIDER
    assert MetricKind.parse("WMDRel") is M.WMDREL
    assert MetricKind.parse("wcc") is M.WCC
    with pytest.raises(ConfigError):
        MetricKind.parse("SPICE")


def test_aggregate_paper_rows():
    row = {M.BLEU4: 33.5, M.METEOR: 29.4, M.ROUGE_L: 52.7, M.CIDER: 97.5}
    assert aggregate(row)[M.BMRC] == pytest.approx(213.1, abs=1e-9)
    row = {M.WMDREL: 51.1, M.CLINREL: 42.7, M.CMEDREL: 33.5}
    assert aggregate(row)[M.WCC] == pytest.approx(127.3, abs=1e-9)


def test_aggregate_zero_row():
    row = {k: 0.0 for k in STANDARD_METRICS}
    assert aggregate(row)[M.BMRC] == 0.0


def test_aggregate_missing_component_named():
    with pytest.raises(MissingMetricError) as err:
        aggregate({M.BLEU4: 1.0, M.METEOR: 1.0, M.ROUGE_L: 1.0})
    assert err.value.missing is M.CIDER


def test_aggregate_keeps_existing_entries():
    row = {M.WMDREL: 1.0, M.CLINREL: 2.0, M.CMEDREL: 3.0, M.WCC: 99.0}
    out = aggregate(row)
    assert out[M.WCC] == 99.0
    assert row == {M.WMDREL: 1.0, M.CLINREL: 2.0, M.CMEDREL: 3.0, M.WCC: 99.0}


def test_aggregate_skips_absent_family():
    out = aggregate({M.BLEU4: 1.0, M.METEOR: 2.0, M.ROUGE_L: 3.0, M.CIDER: 4.0})
    assert M.WCC not in out and out[M.BMRC] == 10.0


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=4))
def test_aggregate_permutation_invariant(values):
    kinds = list(STANDARD_METRICS)
    expected = aggregate(dict(zip(kinds, values)))[M.BMRC]
    for perm in itertools.permutations(range(4)):
        row = {kinds[i]: values[i] for i in perm}
        assert aggregate(row)[M.BMRC] == expected


def test_score_table_kinds_in_declaration_order():
    table = ScoreTable()
    table.set("m", M.WCC, 1.0)
    table.set("m", M.BLEU4, 2.0)
    table.set("m", M.CIDER, 3.0)
    assert table.kinds() == [M.BLEU4, M.CIDER, M.WCC]


def test_score_table_sorted_models_by_bmrc():
    table = ScoreTable()
    for model, bmrc in (("x", 10.0), ("y", 30.0), ("z", 20.0)):
        table.set(model, M.BMRC, bmrc)
    assert table.sorted_models() == ["y", "z", "x"]
    table.set("w", M.BLEU4, 1.0)  # w has no BMRC: fall back to id order
    assert table.sorted_models() == ["w", "x", "y", "z"]


def test_score_table_check_aggregates():
    table = ScoreTable()
    for kind, value in ((M.WMDREL, 1.0), (M.CLINREL, 2.0), (M.CMEDREL, 3.0), (M.WCC, 6.0)):
        table.set("m", kind, value)
    table.check_aggregates()
    table.set("m", M.WCC, 6.5)
    with pytest.raises(ValueError):
        table.check_aggregates()
