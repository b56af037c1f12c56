"""Model ranking and tie-aware Spearman rank correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import (
    AGGREGATE_COMPONENTS,
    PROPOSED_METRICS,
    MetricKind,
    ScoreTable,
)
from .errors import ConfigError, KeyMismatchError, MissingMetricError

# model id -> rank, 1 = best, ties get the average of the ranks they span
RankVector = dict[str, float]

_STANDARD_COLUMNS = (
    MetricKind.BLEU4,
    MetricKind.METEOR,
    MetricKind.ROUGE_L,
    MetricKind.CIDER,
    MetricKind.BMRC,
)


def rank_scores(scores: Mapping[str, float]) -> RankVector:
    """Rank a score map descending; exact score ties share the average rank."""
    items = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    ranks: RankVector = {}
    i = 0
    while i < len(items):
        j = i
        while j + 1 < len(items) and items[j + 1][1] == items[i][1]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[items[k][0]] = avg
        i = j + 1
    return ranks


def rank_models(table: ScoreTable, metric: MetricKind) -> RankVector:
    """Rank every model in ``table`` by one metric, best score first.

    Ties are decided on the full-precision stored scores, not on rounded
    report values.
    """
    column = table.column(metric)
    if not column:
        raise MissingMetricError(metric, detail="no model has a score for it")
    return rank_scores(column)


def spearman(a: RankVector, b: RankVector) -> float:
    """Spearman correlation of two rank vectors over the same model set.

    Computed as the Pearson correlation of the ranks, which stays correct
    in the presence of average-rank ties; without ties it coincides with
    the 1 - 6*sum(d^2)/(n*(n^2-1)) closed form.
    """
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))
        only_b = sorted(set(b) - set(a))
        raise KeyMismatchError(f"rank vectors disagree on models: {only_a} vs {only_b}")
    n = len(a)
    if n < 2:
        raise ConfigError("spearman needs at least two models")
    keys = sorted(a)
    x = [a[k] for k in keys]
    y = [b[k] for k in keys]
    if x == y:
        return 1.0
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    den = math.sqrt(math.fsum(v * v for v in dx) * math.fsum(v * v for v in dy))
    if den == 0.0:
        raise ConfigError("degenerate ranking: one metric ties every model")
    rho = math.fsum(u * v for u, v in zip(dx, dy)) / den
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True)
class CorrelationMatrix:
    """Spearman coefficients for labelled row metrics against column metrics."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    values: dict[tuple[str, str], float]

    def get(self, row: str, col: str) -> float:
        return self.values[(row, col)]


def cross_correlate(
    rows: Mapping[str, Mapping[str, float]],
    cols: Mapping[str, Mapping[str, float]],
) -> CorrelationMatrix:
    """Spearman of every row score vector against every column score vector."""
    values: dict[tuple[str, str], float] = {}
    ranked_cols = {label: rank_scores(scores) for label, scores in cols.items()}
    for row_label, row_scores in rows.items():
        row_ranks = rank_scores(row_scores)
        for col_label, col_ranks in ranked_cols.items():
            values[(row_label, col_label)] = spearman(row_ranks, col_ranks)
    return CorrelationMatrix(tuple(rows), tuple(cols), values)


def _metric_vector(table: ScoreTable, kind: MetricKind) -> dict[str, float]:
    scores: dict[str, float] = {}
    for model_id in table.models():
        row = table.rows[model_id]
        if kind in row:
            scores[model_id] = row[kind]
        elif kind in AGGREGATE_COMPONENTS and all(c in row for c in AGGREGATE_COMPONENTS[kind]):
            scores[model_id] = math.fsum(row[c] for c in AGGREGATE_COMPONENTS[kind])
        else:
            raise MissingMetricError(kind, detail=f"model {model_id!r}")
    return scores


def _sum_vector(table: ScoreTable, kinds: Sequence[MetricKind]) -> dict[str, float]:
    vectors = [_metric_vector(table, k) for k in kinds]
    return {m: math.fsum(vec[m] for vec in vectors) for m in vectors[0]}


def correlate_all(
    table: ScoreTable,
    proposed: Iterable[MetricKind] | None = None,
    standard: Iterable[MetricKind] | None = None,
) -> CorrelationMatrix:
    """The consistency matrix: proposed metrics and their combinations vs standard ones.

    Rows are the proposed metrics, their pairwise sums, and the full sum;
    stored aggregate columns (BMRC, WCC) are used as-is when present and
    recomputed from components otherwise.
    """
    proposed = tuple(proposed) if proposed is not None else PROPOSED_METRICS
    standard = tuple(standard) if standard is not None else _STANDARD_COLUMNS
    rows: dict[str, dict[str, float]] = {}
    for kind in proposed:
        rows[kind.name] = _metric_vector(table, kind)
    for i in range(len(proposed)):
        for j in range(i + 1, len(proposed)):
            pair = (proposed[i], proposed[j])
            rows["+".join(k.name for k in pair)] = _sum_vector(table, pair)
    if len(proposed) > 2:
        total_label = (
            MetricKind.WCC.name
            if set(proposed) == set(PROPOSED_METRICS)
            else "+".join(k.name for k in proposed)
        )
        if total_label == MetricKind.WCC.name:
            rows[total_label] = _metric_vector(table, MetricKind.WCC)
        else:
            rows[total_label] = _sum_vector(table, proposed)
    cols = {kind.name: _metric_vector(table, kind) for kind in standard}
    return cross_correlate(rows, cols)
