"""Batch evaluation: wiring ingestion, metrics, normalization and aggregation."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    AGGREGATE_COMPONENTS,
    DEFAULT_POLICY,
    PROPOSED_METRICS,
    STANDARD_METRICS,
    CaptionRecord,
    MetricKind,
    ReferenceSet,
    ScoreTable,
    TokenizerPolicy,
    tokenize,
)
from .errors import AllOovError, ConfigError, FormatError, ZeroVectorError
from .io import (
    EmbeddingTable,
    VisualFeatureStore,
    load_captions,
    load_embeddings,
    load_features,
    read_score_table,
)
from .ngram import (
    bleu4_corpus,
    build_idf,
    cider_corpus,
    meteor_exact_corpus,
    rouge_l_corpus,
)
from .ranking import CorrelationMatrix, correlate_all
from .visual import (
    RidgeProjector,
    clinrel,
    cmedrel,
    load_projector,
    select_lambda_cv,
    sentence_repr,
    train_projector,
)
from .wmd import nbow, wmd

logger = logging.getLogger(__name__)

_SCENARIOS = ("I", "II")
_Z_MODES = ("fixed", "batch-max")
_REF_MODES = ("first", "average")


@dataclass
class RunConfig:
    """Everything one evaluation run needs: input paths plus behavior flags."""

    captions: str | Path
    references: str | Path | None = None
    embeddings_source: str | Path | None = None
    embeddings_target: str | Path | None = None
    features: str | Path | None = None
    projector_source: str | Path | None = None
    projector_target: str | Path | None = None
    tokenizer: TokenizerPolicy = DEFAULT_POLICY
    scenario: str = "I"
    z_mode: str = "batch-max"
    z_value: float | None = None
    metrics: tuple[MetricKind, ...] | None = None
    ref_mode: str = "first"
    stopwords: frozenset[str] = frozenset()
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ConfigError(f"scenario must be one of {_SCENARIOS}, got {self.scenario!r}")
        if self.z_mode not in _Z_MODES:
            raise ConfigError(f"z-mode must be one of {_Z_MODES}, got {self.z_mode!r}")
        if self.z_mode == "fixed" and (self.z_value is None or self.z_value <= 0):
            raise ConfigError("z-mode 'fixed' needs a positive --z value")
        if self.ref_mode not in _REF_MODES:
            raise ConfigError(f"ref-mode must be one of {_REF_MODES}, got {self.ref_mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")


# input attribute of RunConfig each metric cannot run without
_METRIC_INPUTS: dict[MetricKind, tuple[str, ...]] = {
    MetricKind.WMDREL: ("references", "embeddings_target"),
    MetricKind.CLINREL: (
        "references",
        "embeddings_source",
        "embeddings_target",
        "projector_source",
        "projector_target",
    ),
    MetricKind.CMEDREL: ("embeddings_target", "projector_target", "features"),
    MetricKind.BLEU4: ("references",),
    MetricKind.METEOR: ("references",),
    MetricKind.ROUGE_L: ("references",),
    MetricKind.CIDER: ("references",),
}


def _resolve_metrics(cfg: RunConfig) -> tuple[MetricKind, ...]:
    proposed = PROPOSED_METRICS if cfg.scenario == "I" else (MetricKind.CMEDREL,)
    if cfg.metrics is not None:
        selected = tuple(cfg.metrics)
        for kind in selected:
            if kind.is_aggregate:
                raise ConfigError(f"{kind.name} is an aggregate; it is computed automatically")
            if cfg.scenario == "II" and kind in (MetricKind.WMDREL, MetricKind.CLINREL):
                raise ConfigError(f"{kind.name} needs source-side references; scenario II has none")
    else:
        selected = proposed + (STANDARD_METRICS if cfg.references is not None else ())
    if not selected:
        raise ConfigError("no metrics selected")
    for kind in selected:
        for attribute in _METRIC_INPUTS[kind]:
            if getattr(cfg, attribute) is None:
                flag = "--" + attribute.replace("_", "-")
                raise ConfigError(f"{kind.name} needs {flag}")
    return selected


@dataclass
class _Inputs:
    captions: list[CaptionRecord]
    references: dict[str, ReferenceSet] = field(default_factory=dict)
    embeddings_source: EmbeddingTable | None = None
    embeddings_target: EmbeddingTable | None = None
    features: VisualFeatureStore | None = None
    projector_source: RidgeProjector | None = None
    projector_target: RidgeProjector | None = None


def _load_inputs(cfg: RunConfig, metrics: tuple[MetricKind, ...]) -> _Inputs:
    needed = {attr for kind in metrics for attr in _METRIC_INPUTS[kind]}
    inputs = _Inputs(captions=load_captions(cfg.captions, cfg.tokenizer))
    if not inputs.captions:
        raise ConfigError(f"no captions in {cfg.captions}")
    if "references" in needed:
        inputs.references = load_references_checked(cfg, metrics, inputs.captions)
    if "embeddings_source" in needed:
        inputs.embeddings_source = load_embeddings(cfg.embeddings_source, "source")
    if "embeddings_target" in needed:
        inputs.embeddings_target = load_embeddings(cfg.embeddings_target, "target")
    if "features" in needed:
        inputs.features = load_features(cfg.features)
        for record in inputs.captions:
            if record.image_id not in inputs.features:
                raise ConfigError(f"no visual feature for image {record.image_id!r}")
    if "projector_source" in needed:
        inputs.projector_source = load_projector(cfg.projector_source)
    if "projector_target" in needed:
        inputs.projector_target = load_projector(cfg.projector_target)
    return inputs


def load_references_checked(
    cfg: RunConfig, metrics: tuple[MetricKind, ...], captions: list[CaptionRecord]
) -> dict[str, ReferenceSet]:
    from .io import load_references

    references = load_references(cfg.references, cfg.tokenizer)
    image_ids = sorted({record.image_id for record in captions})
    for image_id in image_ids:
        if image_id not in references:
            raise ConfigError(f"no reference row for image {image_id!r}")
        refset = references[image_id]
        if MetricKind.WMDREL in metrics and not refset.mt_refs:
            raise ConfigError(f"WMDREL needs machine-translated references; image {image_id!r} has none")
        if MetricKind.CLINREL in metrics and not refset.source_refs:
            raise ConfigError(f"CLINREL needs source references; image {image_id!r} has none")
        if any(k in STANDARD_METRICS for k in metrics) and not refset.target_refs:
            raise ConfigError(f"standard metrics need target references; image {image_id!r} has none")
    return references


def _pick_refs(refs: tuple, mode: str) -> tuple:
    return refs[:1] if mode == "first" else refs


def _proposed_pair(
    record: CaptionRecord,
    metrics: tuple[MetricKind, ...],
    inputs: _Inputs,
    cfg: RunConfig,
) -> dict[str, object]:
    """Raw per-(image, model) values for the proposed metrics; None marks a soft failure."""
    out: dict[str, object] = {}
    where = f"image {record.image_id!r}, model {record.model_id!r}"
    if MetricKind.WMDREL in metrics:
        distances: list[float | None] = []
        for ref in _pick_refs(inputs.references[record.image_id].mt_refs, cfg.ref_mode):
            try:
                cand = nbow(record.candidate, inputs.embeddings_target, stopwords=cfg.stopwords)
                mt = nbow(ref, inputs.embeddings_target, stopwords=cfg.stopwords)
                distances.append(wmd(cand, mt)[0])
            except AllOovError as exc:
                logger.warning("%s: %s; WMDREL recorded as 0", where, exc)
                distances.append(None)
        out["wmd"] = distances
    if MetricKind.CLINREL in metrics:
        values: list[float] = []
        for ref in _pick_refs(inputs.references[record.image_id].source_refs, cfg.ref_mode):
            try:
                values.append(
                    clinrel(
                        record.candidate,
                        ref,
                        inputs.projector_target,
                        inputs.projector_source,
                        inputs.embeddings_target,
                        inputs.embeddings_source,
                    )
                )
            except (AllOovError, ZeroVectorError) as exc:
                logger.warning("%s: %s; CLINREL recorded as 0", where, exc)
                values.append(0.0)
        out["clin"] = math.fsum(values) / len(values)
    if MetricKind.CMEDREL in metrics:
        try:
            out["cmed"] = cmedrel(
                record.candidate,
                inputs.features[record.image_id],
                inputs.projector_target,
                inputs.embeddings_target,
            )
        except (AllOovError, ZeroVectorError) as exc:
            logger.warning("%s: %s; CMEDREL recorded as 0", where, exc)
            out["cmed"] = 0.0
    return out


def _resolve_z(cfg: RunConfig, pair_results: list[dict[str, object]]) -> float:
    if cfg.z_mode == "fixed":
        return float(cfg.z_value)
    distances = [
        d
        for result in pair_results
        for d in result.get("wmd", [])
        if d is not None
    ]
    z = max(distances, default=0.0)
    if z == 0.0 and distances:
        logger.warning("every transport distance in the batch is 0; WMDREL degenerates to 1")
    return z


def evaluate(cfg: RunConfig) -> ScoreTable:
    """Score every model on every selected metric and aggregate the sums.

    Deterministic by construction: work is ordered by (model, image) before
    any fan-out and reduced in that same order, so reports are byte-identical
    across runs and across ``jobs`` settings.
    """
    metrics = _resolve_metrics(cfg)
    inputs = _load_inputs(cfg, metrics)

    records = sorted(inputs.captions, key=lambda r: (r.model_id, r.image_id))
    wants_proposed = any(k in PROPOSED_METRICS for k in metrics)
    if wants_proposed:
        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                pair_results = list(
                    pool.map(lambda r: _proposed_pair(r, metrics, inputs, cfg), records)
                )
        else:
            pair_results = [_proposed_pair(r, metrics, inputs, cfg) for r in records]
    else:
        pair_results = [{} for _ in records]

    table = ScoreTable()
    z = _resolve_z(cfg, pair_results) if MetricKind.WMDREL in metrics else None

    by_model: dict[str, list[tuple[CaptionRecord, dict[str, object]]]] = {}
    for record, result in zip(records, pair_results):
        by_model.setdefault(record.model_id, []).append((record, result))

    idf = None
    if MetricKind.CIDER in metrics:
        image_ids = sorted({record.image_id for record in records})
        idf = build_idf(inputs.references[i].target_refs for i in image_ids)

    for model_id in sorted(by_model):
        model_pairs = by_model[model_id]
        if MetricKind.WMDREL in metrics:
            scores = [_wmdrel_score(result["wmd"], z) for _, result in model_pairs]
            table.set(model_id, MetricKind.WMDREL, 100.0 * math.fsum(scores) / len(scores))
        if MetricKind.CLINREL in metrics:
            values = [result["clin"] for _, result in model_pairs]
            table.set(model_id, MetricKind.CLINREL, 100.0 * math.fsum(values) / len(values))
        if MetricKind.CMEDREL in metrics:
            values = [result["cmed"] for _, result in model_pairs]
            table.set(model_id, MetricKind.CMEDREL, 100.0 * math.fsum(values) / len(values))
        standard_pairs = [
            (record.candidate, inputs.references[record.image_id].target_refs)
            for record, _ in model_pairs
        ]
        if MetricKind.BLEU4 in metrics:
            table.set(model_id, MetricKind.BLEU4, bleu4_corpus(standard_pairs))
        if MetricKind.METEOR in metrics:
            table.set(model_id, MetricKind.METEOR, meteor_exact_corpus(standard_pairs))
        if MetricKind.ROUGE_L in metrics:
            table.set(model_id, MetricKind.ROUGE_L, rouge_l_corpus(standard_pairs))
        if MetricKind.CIDER in metrics:
            table.set(model_id, MetricKind.CIDER, cider_corpus(standard_pairs, idf))

    complete = tuple(
        kind
        for kind, components in AGGREGATE_COMPONENTS.items()
        if set(components) <= set(metrics)
    )
    if complete:
        table.add_aggregates(complete)
    return table


def _wmdrel_score(distances: list[float | None], z: float) -> float:
    scores = []
    for d in distances:
        if d is None:
            scores.append(0.0)
        elif z == 0.0:
            scores.append(1.0)
        else:
            scores.append(min(1.0, max(0.0, 1.0 - d / z)))
    return math.fsum(scores) / len(scores)


def correlate_scores(path: str | Path, fmt: str | None = None) -> CorrelationMatrix:
    """Read a score table and emit the proposed-vs-standard consistency matrix."""
    return correlate_all(read_score_table(path, fmt))


def train_projector_files(
    pairs_path: str | Path,
    embeddings_path: str | Path,
    features_path: str | Path,
    language: str,
    ridge_lambda: float = 1.0,
    cv: bool = False,
    human_weight: float = 5.0,
    policy: TokenizerPolicy = DEFAULT_POLICY,
    seed: int = 0,
) -> RidgeProjector:
    """Fit a projector from a JSON-lines pair file plus embedding/feature files.

    Each pair row is {image_id, caption, weight?, origin?}; an explicit weight
    wins, otherwise origin "human" carries ``human_weight`` and anything else
    weight 1 (the linear stand-in for pretraining on machine-translated pairs
    and fine-tuning on human ones).
    """
    if language not in ("source", "target"):
        raise ConfigError(f"language must be 'source' or 'target', got {language!r}")
    table = load_embeddings(embeddings_path, language)
    features = load_features(features_path)
    X: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    weights: list[float] = []
    with open(pairs_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", line=lineno) from None
            if not isinstance(obj, dict) or not {"image_id", "caption"} <= obj.keys():
                raise FormatError("pair row needs image_id and caption", line=lineno)
            image_id = str(obj["image_id"])
            if image_id not in features:
                raise ConfigError(f"no visual feature for image {image_id!r} (pair line {lineno})")
            sentence = tokenize(str(obj["caption"]), language, policy)
            try:
                representation = sentence_repr(sentence, table)
            except AllOovError as exc:
                logger.warning("pair line %d skipped: %s", lineno, exc)
                continue
            X.append(representation)
            Y.append(features[image_id])
            if "weight" in obj:
                weight = float(obj["weight"])
            else:
                weight = human_weight if obj.get("origin") == "human" else 1.0
            if weight <= 0:
                raise FormatError(f"weight must be positive, got {weight}", line=lineno)
            weights.append(weight)
    if not X:
        raise ConfigError(f"no usable training pairs in {pairs_path}")
    if cv:
        ridge_lambda = select_lambda_cv(X, Y, seed=seed, sample_weight=weights)
        logger.info("cross-validation selected lambda=%g", ridge_lambda)
    return train_projector(
        list(zip(X, Y)), ridge_lambda, language=language, sample_weight=weights
    )


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One stopword per line, blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(word for word in (line.strip() for line in fh) if word)
