"""Domain model: sentences, caption records, metric kinds, score tables."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Literal

from .errors import ConfigError, EmptySentenceError, MissingMetricError

Language = Literal["source", "target"]

# Main CJK blocks; enough to route Chinese captions through per-character
# splitting without pulling in a segmenter.
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)

_TOKENIZER_MODES = ("auto", "whitespace", "cjk-char")


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _contains_cjk(text: str) -> bool:
    return any(_is_cjk(ch) for ch in text)


@dataclass(frozen=True)
class TokenizerPolicy:
    """How raw caption strings are turned into token lists.

    ``whitespace`` splits on whitespace runs only, respecting pre-segmented
    text.  ``cjk-char`` additionally gives every CJK codepoint its own token.
    ``auto`` (the default) applies the CJK split only to multi-codepoint
    pieces that contain CJK, so both pre-segmented and raw Chinese pass
    through without crashing the pipeline.
    """

    mode: str = "auto"
    lowercase: bool = True
    strip_punctuation: bool = True

    def __post_init__(self):
        if self.mode not in _TOKENIZER_MODES:
            raise ConfigError(
                f"unknown tokenizer mode {self.mode!r}; expected one of {_TOKENIZER_MODES}"
            )


DEFAULT_POLICY = TokenizerPolicy()
WHITESPACE = TokenizerPolicy(mode="whitespace")
CJK_CHAR = TokenizerPolicy(mode="cjk-char")


@dataclass(frozen=True)
class Sentence:
    """A tokenized caption, tagged with the language side it belongs to."""

    tokens: tuple[str, ...]
    language: Language
    raw: str = ""

    def __post_init__(self):
        if not self.tokens:
            raise EmptySentenceError(f"no tokens in {self.raw!r}")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"invalid token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class CaptionRecord:
    """One model's candidate caption for one image."""

    image_id: str
    model_id: str
    candidate: Sentence


@dataclass(frozen=True)
class ReferenceSet:
    """Ground-truth captions for one image.

    ``target_refs`` and ``mt_refs`` may be empty: scoring without
    target-language references is the whole point of the toolkit.
    """

    image_id: str
    source_refs: tuple[Sentence, ...] = ()
    target_refs: tuple[Sentence, ...] = ()
    mt_refs: tuple[Sentence, ...] = ()


def _strip_punct(piece: str) -> str:
    return "".join(ch for ch in piece if not unicodedata.category(ch).startswith("P"))


def _split_cjk(piece: str) -> list[str]:
    out: list[str] = []
    run: list[str] = []
    for ch in piece:
        if _is_cjk(ch):
            if run:
                out.append("".join(run))
                run = []
            out.append(ch)
        else:
            run.append(ch)
    if run:
        out.append("".join(run))
    return out


def tokenize(raw: str, language: Language, policy: TokenizerPolicy | str = DEFAULT_POLICY) -> Sentence:
    """Split a raw caption into a :class:`Sentence` under the given policy.

    Raises :class:`EmptySentenceError` when nothing survives tokenization.
    """
    if isinstance(policy, str):
        policy = TokenizerPolicy(mode=policy)
    pieces = raw.split()
    if policy.strip_punctuation:
        pieces = [p for p in (_strip_punct(piece) for piece in pieces) if p]
    tokens: list[str] = []
    for piece in pieces:
        if policy.mode == "cjk-char" or (
            policy.mode == "auto" and len(piece) > 1 and _contains_cjk(piece)
        ):
            tokens.extend(_split_cjk(piece))
        else:
            tokens.append(piece)
    if policy.lowercase:
        tokens = [t if _contains_cjk(t) else t.lower() for t in tokens]
    if not tokens:
        raise EmptySentenceError(f"tokenization of {raw!r} produced no tokens")
    return Sentence(tuple(tokens), language, raw)


class MetricKind(Enum):
    """Every metric the toolkit reports, in report column order."""

    BLEU4 = "BLEU4"
    METEOR = "METEOR"
    ROUGE_L = "ROUGE_L"
    CIDER = "CIDER"
    BMRC = "BMRC"
    WMDREL = "WMDREL"
    CLINREL = "CLINREL"
    CMEDREL = "CMEDREL"
    WCC = "WCC"

    @property
    def is_aggregate(self) -> bool:
        return self in AGGREGATE_COMPONENTS

    @classmethod
    def parse(cls, name: str) -> "MetricKind":
        key = name.strip().upper().replace("-", "").replace("_", "")
        try:
            return _METRIC_ALIASES[key]
        except KeyError:
            raise ConfigError(f"unknown metric name {name!r}") from None


STANDARD_METRICS = (MetricKind.BLEU4, MetricKind.METEOR, MetricKind.ROUGE_L, MetricKind.CIDER)
PROPOSED_METRICS = (MetricKind.WMDREL, MetricKind.CLINREL, MetricKind.CMEDREL)
AGGREGATE_COMPONENTS: dict[MetricKind, tuple[MetricKind, ...]] = {
    MetricKind.BMRC: STANDARD_METRICS,
    MetricKind.WCC: PROPOSED_METRICS,
}

_METRIC_ALIASES = {kind.name.replace("_", ""): kind for kind in MetricKind}


def aggregate(
    row: dict[MetricKind, float],
    kinds: Iterable[MetricKind] = (MetricKind.BMRC, MetricKind.WCC),
) -> dict[MetricKind, float]:
    """Return a copy of ``row`` with the requested aggregate sums appended.

    An aggregate already present is left untouched; one with none of its
    components present is skipped; partial components raise
    :class:`MissingMetricError` naming the first absent kind.
    """
    out = dict(row)
    for kind in kinds:
        components = AGGREGATE_COMPONENTS.get(kind)
        if components is None:
            raise ConfigError(f"{kind.name} is not an aggregate metric")
        if kind in out:
            continue
        present = [c for c in components if c in out]
        if not present:
            continue
        if len(present) < len(components):
            missing = next(c for c in components if c not in out)
            raise MissingMetricError(missing, detail=f"needed for {kind.name}")
        out[kind] = math.fsum(out[c] for c in components)
    return out


@dataclass
class ScoreTable:
    """model id -> metric -> score, stored at full precision.

    Scores live on the reporting scale recorded in ``scale`` (default x100,
    so a 0.975 fraction is stored as 97.5).  Rounding happens only when a
    report is written.
    """

    rows: dict[str, dict[MetricKind, float]] = field(default_factory=dict)
    scale: float = 100.0

    def set(self, model_id: str, kind: MetricKind, value: float) -> None:
        self.rows.setdefault(model_id, {})[kind] = float(value)

    def get(self, model_id: str, kind: MetricKind) -> float:
        return self.rows[model_id][kind]

    def models(self) -> list[str]:
        return list(self.rows)

    def kinds(self) -> list[MetricKind]:
        present: set[MetricKind] = set()
        for row in self.rows.values():
            present.update(row)
        return [k for k in MetricKind if k in present]

    def column(self, kind: MetricKind) -> dict[str, float]:
        return {m: row[kind] for m, row in self.rows.items() if kind in row}

    def add_aggregates(self, kinds: Iterable[MetricKind] = (MetricKind.BMRC, MetricKind.WCC)) -> "ScoreTable":
        kinds = tuple(kinds)
        for model_id, row in self.rows.items():
            self.rows[model_id] = aggregate(row, kinds)
        return self

    def sorted_models(self) -> list[str]:
        """Model ids in report order: BMRC descending when every row has it."""
        if self.rows and all(MetricKind.BMRC in row for row in self.rows.values()):
            return sorted(self.rows, key=lambda m: (-self.rows[m][MetricKind.BMRC], m))
        return sorted(self.rows)

    def check_aggregates(self, tol: float = 1e-9) -> None:
        """Verify stored aggregates equal their component sums (pipeline invariant)."""
        for model_id, row in self.rows.items():
            for kind, components in AGGREGATE_COMPONENTS.items():
                if kind in row and all(c in row for c in components):
                    expected = math.fsum(row[c] for c in components)
                    if abs(row[kind] - expected) > tol:
                        raise ValueError(
                            f"{model_id}: {kind.name} {row[kind]!r} != component sum {expected!r}"
                        )
