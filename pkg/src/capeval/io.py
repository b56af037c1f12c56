"""File ingestion (embeddings, features, captions, references) and report I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    CaptionRecord,
    DEFAULT_POLICY,
    Language,
    MetricKind,
    ReferenceSet,
    ScoreTable,
    Sentence,
    TokenizerPolicy,
    tokenize,
)
from .errors import (
    CapevalError,
    ConfigError,
    DuplicateTokenError,
    EmptySentenceError,
    FormatError,
)
from .ranking import CorrelationMatrix


@dataclass
class EmbeddingTable:
    """token -> dense word vector, one table per language side."""

    dim: int
    language: Language
    entries: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __getitem__(self, token: str) -> np.ndarray:
        return self.entries[token]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class VisualFeatureStore:
    """image id -> visual feature vector, all sharing one dimension."""

    dim: int
    features: dict[str, np.ndarray]

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.features

    def __getitem__(self, image_id: str) -> np.ndarray:
        return self.features[image_id]

    def __len__(self) -> int:
        return len(self.features)


def _parse_vector_file(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    """Parse a text vector file: '<count> <dim>' header, then '<key> <v1> ...' rows."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError("expected '<count> <dim>' header", line=1)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError("header fields must be integers", line=1) from None
        if count < 0 or dim <= 0:
            raise FormatError(f"bad header counts {count} {dim}", line=1)
        entries: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != dim + 1:
                raise FormatError(f"expected {dim + 1} fields, got {len(fields)}", line=lineno)
            key = fields[0]
            if key in entries:
                raise DuplicateTokenError(key, line=lineno)
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise FormatError("non-numeric vector component", line=lineno) from None
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"non-finite component for {key!r} at line {lineno} of {path}")
            entries[key] = vec
    if len(entries) != count:
        raise FormatError(f"header declares {count} rows, file has {len(entries)}")
    return dim, entries


def load_embeddings(path: str | Path, language: Language) -> EmbeddingTable:
    """Load a word2vec-style text embedding file."""
    dim, entries = _parse_vector_file(path)
    return EmbeddingTable(dim=dim, language=language, entries=entries)


def load_features(path: str | Path) -> VisualFeatureStore:
    """Load visual feature vectors keyed by image id."""
    dim, entries = _parse_vector_file(path)
    for image_id, vec in entries.items():
        if not np.any(vec):
            raise ValueError(f"zero-norm feature vector for image {image_id!r}")
    return VisualFeatureStore(dim=dim, features=entries)


def _iter_jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", line=lineno) from None


def load_captions(
    path: str | Path, policy: TokenizerPolicy = DEFAULT_POLICY
) -> list[CaptionRecord]:
    """Load candidate captions from JSON lines {image_id, model_id, caption}."""
    records: list[CaptionRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, obj in _iter_jsonl(path):
        if not isinstance(obj, dict) or not {"image_id", "model_id", "caption"} <= obj.keys():
            raise FormatError("caption row needs image_id, model_id, caption", line=lineno)
        image_id = str(obj["image_id"])
        model_id = str(obj["model_id"])
        key = (image_id, model_id)
        if key in seen:
            raise FormatError(f"duplicate (image_id, model_id) pair {key}", line=lineno)
        seen.add(key)
        try:
            candidate = tokenize(str(obj["caption"]), "target", policy)
        except EmptySentenceError as exc:
            raise FormatError(str(exc), line=lineno) from None
        records.append(CaptionRecord(image_id, model_id, candidate))
    return records


def load_references(
    path: str | Path, policy: TokenizerPolicy = DEFAULT_POLICY
) -> dict[str, ReferenceSet]:
    """Load reference sets from JSON lines {image_id, source, target?, mt?}."""

    def _sentences(obj: dict, field: str, language: Language, lineno: int) -> tuple[Sentence, ...]:
        raws = obj.get(field, [])
        if not isinstance(raws, list):
            raise FormatError(f"{field} must be a list of strings", line=lineno)
        try:
            return tuple(tokenize(str(raw), language, policy) for raw in raws)
        except EmptySentenceError as exc:
            raise FormatError(str(exc), line=lineno) from None

    refsets: dict[str, ReferenceSet] = {}
    for lineno, obj in _iter_jsonl(path):
        if not isinstance(obj, dict) or "image_id" not in obj:
            raise FormatError("reference row needs image_id", line=lineno)
        image_id = str(obj["image_id"])
        if image_id in refsets:
            raise FormatError(f"duplicate reference row for image {image_id!r}", line=lineno)
        refsets[image_id] = ReferenceSet(
            image_id=image_id,
            source_refs=_sentences(obj, "source", "source", lineno),
            target_refs=_sentences(obj, "target", "target", lineno),
            mt_refs=_sentences(obj, "mt", "target", lineno),
        )
    return refsets


def _format_value(value: float, decimals: int | None) -> str:
    # repr round-trips exactly; fixed decimals only for human-facing reports
    return repr(float(value)) if decimals is None else f"{value:.{decimals}f}"


def write_report(
    report: ScoreTable | CorrelationMatrix,
    path: str | Path,
    fmt: str = "csv",
    decimals: int | None = None,
) -> None:
    """Write a score table or correlation matrix as CSV or JSON.

    Output is deterministic: score-table rows sort by descending BMRC when
    every model has one (model id breaks ties), metrics keep declaration
    order, and floats are written in shortest round-trip form unless a fixed
    number of decimals is requested.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r}")
    if isinstance(report, ScoreTable):
        _write_score_table(report, Path(path), fmt, decimals)
    elif isinstance(report, CorrelationMatrix):
        _write_correlation(report, Path(path), fmt, decimals)
    else:
        raise ConfigError(f"cannot write report of type {type(report).__name__}")


def _write_score_table(table: ScoreTable, path: Path, fmt: str, decimals: int | None) -> None:
    kinds = table.kinds()
    models = table.sorted_models()
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["model", *(k.name for k in kinds)])
            for model_id in models:
                row = table.rows[model_id]
                writer.writerow(
                    [model_id]
                    + [
                        _format_value(row[k], decimals) if k in row else ""
                        for k in kinds
                    ]
                )
    else:
        payload = {
            "type": "score_table",
            "scale": table.scale,
            "metrics": [k.name for k in kinds],
            "models": [
                {
                    "model": model_id,
                    "scores": {
                        k.name: (
                            table.rows[model_id][k]
                            if decimals is None
                            else round(table.rows[model_id][k], decimals)
                        )
                        for k in kinds
                        if k in table.rows[model_id]
                    },
                }
                for model_id in models
            ],
        }
        _dump_json(payload, path)


def _write_correlation(matrix: CorrelationMatrix, path: Path, fmt: str, decimals: int | None) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["metric", *matrix.col_labels])
            for row_label in matrix.row_labels:
                writer.writerow(
                    [row_label]
                    + [
                        _format_value(matrix.values[(row_label, col)], decimals)
                        for col in matrix.col_labels
                    ]
                )
    else:
        payload = {
            "type": "correlation_matrix",
            "columns": list(matrix.col_labels),
            "rows": [
                {
                    "metric": row_label,
                    "values": {
                        col: (
                            matrix.values[(row_label, col)]
                            if decimals is None
                            else round(matrix.values[(row_label, col)], decimals)
                        )
                        for col in matrix.col_labels
                    },
                }
                for row_label in matrix.row_labels
            ],
        }
        _dump_json(payload, path)


def _dump_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _detect_format(path: str | Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown report format {fmt!r}")
        return fmt
    suffix = Path(path).suffix.lower()
    return "json" if suffix == ".json" else "csv"


def read_score_table(path: str | Path, fmt: str | None = None) -> ScoreTable:
    """Read a score table written by :func:`write_report` or transcribed by hand."""
    fmt = _detect_format(path, fmt)
    table = ScoreTable()
    if fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError("empty score table", line=1) from None
            if not header or header[0].strip().lower() != "model":
                raise FormatError("first column must be 'model'", line=1)
            kinds = [MetricKind.parse(name) for name in header[1:]]
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(kinds) + 1:
                    raise FormatError(
                        f"expected {len(kinds) + 1} cells, got {len(row)}", line=lineno
                    )
                model_id = row[0]
                for kind, cell in zip(kinds, row[1:]):
                    if cell == "":
                        continue
                    try:
                        table.set(model_id, kind, float(cell))
                    except ValueError:
                        raise FormatError(f"bad score {cell!r}", line=lineno) from None
    else:
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", line=exc.lineno) from None
        try:
            table.scale = float(payload.get("scale", table.scale))
            for entry in payload["models"]:
                for name, value in entry["scores"].items():
                    table.set(str(entry["model"]), MetricKind.parse(name), float(value))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed score table payload: {exc}") from None
    if not table.rows:
        raise FormatError("score table has no rows")
    return table
