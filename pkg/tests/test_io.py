from __future__ import annotations

import numpy as np
import pytest

from capeval import (
    MetricKind,
    ScoreTable,
    load_captions,
    load_embeddings,
    load_features,
    load_references,
    read_score_table,
    write_report,
)
from capeval.errors import DuplicateTokenError, FormatError
from capeval.ranking import CorrelationMatrix

M = MetricKind


def test_load_embeddings_minimal(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 3\na 1 0 0\nb 0 1 0\n", encoding="utf-8")
    table = load_embeddings(path, "target")
    assert table.dim == 3 and len(table) == 2
    assert np.array_equal(table["a"], [1.0, 0.0, 0.0])
    assert np.array_equal(table["b"], [0.0, 1.0, 0.0])


def test_load_embeddings_arity_mismatch(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("1 2\na 1 0 0\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        load_embeddings(path, "target")
    assert err.value.line == 2


def test_load_embeddings_duplicate_token(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 2\na 1 0\na 0 1\n", encoding="utf-8")
    with pytest.raises(DuplicateTokenError) as err:
        load_embeddings(path, "target")
    assert err.value.token == "a"


def test_load_embeddings_nonfinite(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("1 2\na nan 0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_embeddings(path, "target")


def test_load_embeddings_count_mismatch(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("3 2\na 1 0\nb 0 1\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_embeddings(path, "target")


def test_load_embeddings_bad_header(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2\na 1\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        load_embeddings(path, "target")
    assert err.value.line == 1


def test_load_embeddings_scientific_notation(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("1 2\na 1.5e-3 -2E4\n", encoding="utf-8")
    table = load_embeddings(path, "source")
    assert table["a"][0] == pytest.approx(0.0015)
    assert table["a"][1] == pytest.approx(-20000.0)


def test_load_features_zero_norm_rejected(tmp_path):
    path = tmp_path / "feat.txt"
    path.write_text("1 3\nimg0 0 0 0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_features(path)


def test_load_features_ok(tmp_path):
    path = tmp_path / "feat.txt"
    path.write_text("2 2\nimg0 1 2\nimg1 3 4\n", encoding="utf-8")
    store = load_features(path)
    assert store.dim == 2 and "img1" in store and len(store) == 2


def test_load_captions(tmp_path):
    path = tmp_path / "captions.jsonl"
    path.write_text(
        '{"image_id": "i1", "model_id": "m1", "caption": "a red sign"}\n'
        '{"image_id": "i1", "model_id": "m2", "caption": "两个女人"}\n',
        encoding="utf-8",
    )
    records = load_captions(path)
    assert len(records) == 2
    assert records[0].candidate.tokens == ("a", "red", "sign")
    assert records[1].candidate.tokens == ("两", "个", "女", "人")
    assert records[1].candidate.language == "target"


def test_load_captions_bad_json_line(tmp_path):
    path = tmp_path / "captions.jsonl"
    path.write_text('{"image_id": "i1", "model_id": "m1", "caption": "ok"}\n{oops\n', encoding="utf-8")
    with pytest.raises(FormatError) as err:
        load_captions(path)
    assert err.value.line == 2


def test_load_captions_duplicate_pair(tmp_path):
    path = tmp_path / "captions.jsonl"
    row = '{"image_id": "i1", "model_id": "m1", "caption": "ok"}\n'
    path.write_text(row + row, encoding="utf-8")
    with pytest.raises(FormatError):
        load_captions(path)


def test_load_captions_empty_caption(tmp_path):
    path = tmp_path / "captions.jsonl"
    path.write_text('{"image_id": "i1", "model_id": "m1", "caption": "..."}\n', encoding="utf-8")
    with pytest.raises(FormatError) as err:
        load_captions(path)
    assert err.value.line == 1


def test_load_references_optional_fields(tmp_path):
    path = tmp_path / "refs.jsonl"
    path.write_text(
        '{"image_id": "i1", "source": ["a cat"], "target": ["一只 猫"], "mt": ["猫"]}\n'
        '{"image_id": "i2", "source": ["a dog"]}\n',
        encoding="utf-8",
    )
    refs = load_references(path)
    assert refs["i1"].source_refs[0].language == "source"
    assert refs["i1"].target_refs[0].tokens == ("一", "只", "猫")
    assert refs["i2"].target_refs == () and refs["i2"].mt_refs == ()

    from capeval import WHITESPACE

    presegmented = load_references(path, WHITESPACE)
    assert presegmented["i1"].target_refs[0].tokens == ("一只", "猫")


def test_load_references_duplicate_image(tmp_path):
    path = tmp_path / "refs.jsonl"
    row = '{"image_id": "i1", "source": ["a"]}\n'
    path.write_text(row + row, encoding="utf-8")
    with pytest.raises(FormatError):
        load_references(path)


def _table():
    table = ScoreTable()
    table.set("model b", M.BLEU4, 12.300000000000001)
    table.set("model b", M.CIDER, 1.0 / 3.0)
    table.set('model "a", odd', M.BLEU4, 99.5)
    table.set('model "a", odd', M.CIDER, 0.1 + 0.2)
    return table


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_score_table_round_trip(tmp_path, fmt):
    table = _table()
    path = tmp_path / f"scores.{fmt}"
    write_report(table, path, fmt)
    back = read_score_table(path)
    assert back.rows == table.rows


def test_csv_report_is_rfc_quoted_and_ordered(tmp_path):
    table = ScoreTable()
    for model, bmrc in (("low", 10.0), ("high", 30.0)):
        table.set(model, M.BMRC, bmrc)
        table.set(model, M.BLEU4, 1.0)
    path = tmp_path / "scores.csv"
    write_report(table, path, "csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "model,BLEU4,BMRC"
    assert lines[1].startswith("high") and lines[2].startswith("low")


def test_report_decimals(tmp_path):
    table = ScoreTable()
    table.set("m", M.CIDER, 97.54321)
    path = tmp_path / "scores.csv"
    write_report(table, path, "csv", decimals=1)
    assert path.read_text(encoding="utf-8").splitlines()[1] == "m,97.5"


def test_correlation_matrix_report(tmp_path):
    matrix = CorrelationMatrix(
        row_labels=("WMDREL",),
        col_labels=("BLEU4", "CIDER"),
        values={("WMDREL", "BLEU4"): 0.929, ("WMDREL", "CIDER"): 0.714},
    )
    path = tmp_path / "corr.csv"
    write_report(matrix, path, "csv", decimals=3)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == ["metric,BLEU4,CIDER", "WMDREL,0.929,0.714"]


def test_read_score_table_accepts_aliases(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("model,BLEU-4,CIDEr\nm,33.5,97.5\n", encoding="utf-8")
    table = read_score_table(path)
    assert table.get("m", M.BLEU4) == 33.5
    assert table.get("m", M.CIDER) == 97.5


def test_read_score_table_rejects_garbage(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("model,BLEU4\nm,not-a-number\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        read_score_table(path)
    assert err.value.line == 2
